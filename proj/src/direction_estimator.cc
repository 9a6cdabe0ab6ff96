// Copyright 2026 the rola authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rola/direction_estimator.h"

#include "rola/error.h"
#include "rola/io_util.h"

namespace rola {
namespace {

Vector MeanOf(const std::vector<const Vector*>& members, std::size_t dim) {
  std::vector<double> acc(dim, 0.0);
  for (const Vector* v : members) {
    for (std::size_t i = 0; i < dim; ++i) acc[i] += (*v)[i];
  }
  Vector out(dim);
  const double n = static_cast<double>(members.size());
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / n);
  return out;
}

FloatJson UnitOrNull(const Vector& v) {
  if (SquaredNorm(v) == 0.0) return nullptr;
  return Normalized(v);
}

Vector VectorFromJson(const FloatJson& j, std::size_t dim, const std::string& ctx) {
  if (!j.is_array() || j.size() != dim) {
    throw Error(ctx + ": expected an array of " + std::to_string(dim) + " numbers");
  }
  Vector v;
  v.reserve(dim);
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ctx + ": non-numeric entry");
    v.push_back(x.get<float>());
  }
  if (!AllFinite(v)) throw Error(ctx + ": non-finite component");
  return v;
}

}  // namespace

std::string_view ToString(DirectionMode mode) {
  switch (mode) {
    case DirectionMode::kPerCategory: return "per_category";
    case DirectionMode::kLeaveOneOut: return "leave_one_out";
    case DirectionMode::kGlobal: return "global";
  }
  return "leave_one_out";
}

DirectionMode ParseDirectionMode(std::string_view s) {
  if (s == "per_category") return DirectionMode::kPerCategory;
  if (s == "leave_one_out" || s == "loo") return DirectionMode::kLeaveOneOut;
  if (s == "global") return DirectionMode::kGlobal;
  throw Error("unknown direction mode '" + std::string(s) + "'");
}

const Vector& DirectionSet::For(std::string_view category, DirectionMode mode) const {
  const std::string key(category);
  switch (mode) {
    case DirectionMode::kGlobal:
      return global;
    case DirectionMode::kPerCategory: {
      auto it = per_category.find(key);
      if (it == per_category.end()) {
        throw Error("no per-category direction for '" + key + "'");
      }
      return it->second.d;
    }
    case DirectionMode::kLeaveOneOut: {
      if (!per_category.contains(key)) return global;
      auto it = loo.find(key);
      if (it == loo.end()) {
        throw Error("no leave-one-out direction for '" + key + "' (needs at least 2 categories)");
      }
      return it->second;
    }
  }
  throw Error("bad direction mode");
}

CategoryStats ComputeCategoryStats(const RecordSet& train, std::string_view category) {
  std::vector<const Vector*> real, lookalike;
  bool seen = false;
  for (const auto& r : train) {
    if (r.category != category) continue;
    seen = true;
    if (r.modality != Modality::kImage) continue;
    if (r.label == Label::kReal) real.push_back(&r.vector);
    if (r.label == Label::kLookalike) lookalike.push_back(&r.vector);
  }
  const std::string name(category);
  if (!seen) throw Error("category '" + name + "' not present in training set");
  if (real.empty() || lookalike.empty()) {
    throw Error("category '" + name + "' has " + std::to_string(real.size()) + " real and " +
                std::to_string(lookalike.size()) + " lookalike images; need at least one of each");
  }

  CategoryStats stats;
  stats.category = name;
  stats.n_real = real.size();
  stats.n_lookalike = lookalike.size();
  stats.mean_real = MeanOf(real, train.dim());
  stats.mean_lookalike = MeanOf(lookalike, train.dim());
  stats.d.resize(train.dim());
  for (std::size_t i = 0; i < train.dim(); ++i) {
    stats.d[i] = static_cast<float>(static_cast<double>(stats.mean_lookalike[i]) -
                                    static_cast<double>(stats.mean_real[i]));
  }
  return stats;
}

DirectionSet EstimateDirections(const RecordSet& train) {
  DirectionSet dirs;
  dirs.dim = train.dim();
  dirs.created_from = train.provenance();
  for (const auto& name : train.Categories()) {
    try {
      dirs.per_category.emplace(name, ComputeCategoryStats(train, name));
    } catch (const Error& e) {
      dirs.warnings.push_back(std::string("skipped: ") + e.what());
    }
  }
  const std::size_t k = dirs.per_category.size();
  if (k == 0) throw Error("no usable category: every category needs real and lookalike images");

  const std::size_t dim = dirs.dim;
  std::vector<double> total(dim, 0.0);
  for (const auto& [name, stats] : dirs.per_category) {
    for (std::size_t i = 0; i < dim; ++i) total[i] += stats.d[i];
  }
  dirs.global.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    dirs.global[i] = static_cast<float>(total[i] / static_cast<double>(k));
  }

  if (k < 2) {
    dirs.warnings.push_back("only one usable category: leave-one-out directions are undefined");
    return dirs;
  }
  // Summed directly over the other categories (not total - d_k) so loo[k]
  // never touches category k's data.
  for (const auto& [held_out, unused] : dirs.per_category) {
    std::vector<double> acc(dim, 0.0);
    for (const auto& [name, stats] : dirs.per_category) {
      if (name == held_out) continue;
      for (std::size_t i = 0; i < dim; ++i) acc[i] += stats.d[i];
    }
    Vector v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      v[i] = static_cast<float>(acc[i] / static_cast<double>(k - 1));
    }
    dirs.loo.emplace(held_out, std::move(v));
  }
  return dirs;
}

std::string SerializeDirections(const DirectionSet& dirs) {
  FloatJson doc;
  doc["dim"] = dirs.dim;
  doc["created_from"] = dirs.created_from;
  doc["categories"] = FloatJson::object();
  for (const auto& [name, s] : dirs.per_category) {
    doc["categories"][name] = {{"d", s.d},
                               {"d_unit", UnitOrNull(s.d)},
                               {"mean_real", s.mean_real},
                               {"mean_lookalike", s.mean_lookalike},
                               {"n_real", s.n_real},
                               {"n_lookalike", s.n_lookalike}};
  }
  doc["loo"] = FloatJson::object();
  doc["loo_unit"] = FloatJson::object();
  for (const auto& [name, v] : dirs.loo) {
    doc["loo"][name] = v;
    doc["loo_unit"][name] = UnitOrNull(v);
  }
  doc["global"] = dirs.global;
  doc["global_unit"] = UnitOrNull(dirs.global);
  doc["warnings"] = dirs.warnings;
  return doc.dump(1) + "\n";
}

DirectionSet ParseDirections(std::string_view text, const std::string& source) {
  FloatJson doc;
  try {
    doc = FloatJson::parse(text);
  } catch (const std::exception& e) {
    throw Error(source + ": malformed directions file: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("dim") || !doc["dim"].is_number_unsigned() ||
      !doc.contains("categories") || !doc.contains("global")) {
    throw Error(source + ": directions file needs dim, categories and global");
  }
  DirectionSet dirs;
  dirs.dim = doc["dim"].get<std::size_t>();
  if (dirs.dim == 0) throw Error(source + ": dim must be positive");
  if (doc.contains("created_from") && doc["created_from"].is_string()) {
    dirs.created_from = doc["created_from"].get<std::string>();
  }
  for (const auto& [name, c] : doc["categories"].items()) {
    const std::string ctx = source + ": category '" + name + "'";
    CategoryStats s;
    s.category = name;
    s.d = VectorFromJson(c.at("d"), dirs.dim, ctx + " d");
    s.mean_real = VectorFromJson(c.at("mean_real"), dirs.dim, ctx + " mean_real");
    s.mean_lookalike = VectorFromJson(c.at("mean_lookalike"), dirs.dim, ctx + " mean_lookalike");
    s.n_real = c.at("n_real").get<std::size_t>();
    s.n_lookalike = c.at("n_lookalike").get<std::size_t>();
    dirs.per_category.emplace(name, std::move(s));
  }
  if (doc.contains("loo")) {
    for (const auto& [name, v] : doc["loo"].items()) {
      dirs.loo.emplace(name, VectorFromJson(v, dirs.dim, source + ": loo '" + name + "'"));
    }
  }
  dirs.global = VectorFromJson(doc["global"], dirs.dim, source + ": global");
  if (doc.contains("warnings") && doc["warnings"].is_array()) {
    for (const auto& w : doc["warnings"]) {
      if (w.is_string()) dirs.warnings.push_back(w.get<std::string>());
    }
  }
  return dirs;
}

void SaveDirections(const DirectionSet& dirs, const std::string& path) {
  WriteFileAtomic(path, SerializeDirections(dirs));
}

DirectionSet LoadDirections(const std::string& path) {
  return ParseDirections(ReadFile(path), path);
}

}  // namespace rola
