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

#include "rola/synth_corpus.h"

#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "rola/error.h"
#include "rola/random.h"

namespace rola {
namespace {

constexpr double kGrid = 65536.0;

using Json = nlohmann::ordered_json;

std::vector<double> GaussianDirection(Random& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double sq = 0.0;
  for (auto& x : v) {
    x = rng.Normal();
    sq += x * x;
  }
  const double n = std::sqrt(sq);
  for (auto& x : v) x /= n;
  return v;
}

Vector Quantize(const std::vector<double>& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(std::round(v[i] * kGrid) / kGrid);
  }
  return out;
}

Vector ScaledOffset(const std::vector<double>& unit, double norm) {
  std::vector<double> v(unit.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = unit[i] * norm;
  Vector q = Quantize(v);
  if (SquaredNorm(q) == 0.0) throw Error("planted offset rounds to zero; use a larger offset norm");
  return q;
}

// Unit vector orthogonal to `o`, falling back to the raw draw when the
// projection degenerates.
std::vector<double> OrthogonalTo(std::vector<double> u, const Vector& o) {
  const double oo = SquaredNorm(o);
  double uo = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) uo += u[i] * o[i];
  std::vector<double> w(u.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    w[i] = u[i] - uo / oo * o[i];
    sq += w[i] * w[i];
  }
  if (sq < 1e-12) return u;
  const double n = std::sqrt(sq);
  for (auto& x : w) x /= n;
  return w;
}

Vector Noisy(const Vector& base, Random& rng, double per_component) {
  Vector out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double g = rng.Normal();
    out[i] = per_component == 0.0 ? base[i]
                                  : static_cast<float>(base[i] + per_component * g);
  }
  return out;
}

Json VectorJson(const Vector& v) {
  Json a = Json::array();
  for (float x : v) a.push_back(static_cast<double>(x));
  return a;
}

Vector VectorFrom(const Json& j, const std::string& ctx) {
  if (!j.is_array()) throw Error(ctx + ": expected an array");
  Vector v;
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ctx + ": non-numeric entry");
    v.push_back(static_cast<float>(x.get<double>()));
  }
  return v;
}

}  // namespace

std::string_view ToString(OffsetMode mode) {
  return mode == OffsetMode::kShared ? "shared" : "per_category";
}

OffsetMode ParseOffsetMode(std::string_view s) {
  if (s == "shared") return OffsetMode::kShared;
  if (s == "per_category" || s == "per-category") return OffsetMode::kPerCategory;
  throw Error("unknown offset mode '" + std::string(s) + "'");
}

void SynthSpec::Validate() const {
  if (n_categories < 1) throw Error("synth: n_categories must be at least 1");
  if (per_label_count < 1) throw Error("synth: per_label_count must be at least 1");
  if (dim < 2) throw Error("synth: dim smaller than 2");
  auto finite_nonneg = [](double x, const char* what) {
    if (!std::isfinite(x) || x < 0.0) throw Error(std::string("synth: ") + what + " must be >= 0");
  };
  finite_nonneg(noise_sigma, "noise_sigma");
  finite_nonneg(category_spread, "category_spread");
  finite_nonneg(prompt_signal, "prompt_signal");
  finite_nonneg(prompt_noise, "prompt_noise");
  finite_nonneg(text_gap, "text_gap");
  if (offset) {
    if (offset->size() != dim) {
      throw Error("synth: offset has length " + std::to_string(offset->size()) + ", dim is " +
                  std::to_string(dim));
    }
    if (!AllFinite(*offset) || SquaredNorm(*offset) == 0.0) {
      throw Error("synth: offset norm must be > 0");
    }
  } else if (!std::isfinite(offset_norm) || offset_norm <= 0.0) {
    throw Error("synth: offset norm must be > 0");
  }
}

const Vector& PlantedTruth::OffsetFor(std::string_view category) const {
  auto it = category_offset.find(std::string(category));
  if (it == category_offset.end()) {
    throw Error("category '" + std::string(category) + "' is not part of the planted corpus");
  }
  return it->second;
}

std::string CategoryName(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cat%02zu", index);
  return buf;
}

PlantedCorpus GeneratePlantedCorpus(const SynthSpec& spec) {
  spec.Validate();
  Random rng(spec.seed);
  const std::size_t dim = spec.dim;

  const auto offset_dir = GaussianDirection(rng, dim);
  Vector offset;
  if (spec.offset) {
    std::vector<double> given(spec.offset->begin(), spec.offset->end());
    offset = Quantize(given);
    if (SquaredNorm(offset) == 0.0) throw Error("planted offset rounds to zero");
  } else {
    offset = ScaledOffset(offset_dir, spec.offset_norm);
  }
  const double offset_norm = Norm(offset);
  const auto gap_dir = GaussianDirection(rng, dim);

  PlantedCorpus out;
  out.truth.spec = spec;
  out.truth.offset = offset;
  char prov[160];
  std::snprintf(prov, sizeof prov, "synth seed=%llu categories=%zu dim=%zu noise=%g",
                static_cast<unsigned long long>(spec.seed), spec.n_categories, dim,
                spec.noise_sigma);
  out.images = RecordSet(dim, prov);
  out.prompts = RecordSet(dim, prov);

  const double noise = spec.noise_sigma / std::sqrt(static_cast<double>(dim));
  const double prompt_noise = spec.prompt_noise / std::sqrt(static_cast<double>(dim));

  for (std::size_t k = 0; k < spec.n_categories; ++k) {
    const std::string cat = CategoryName(k);
    Vector o = offset;
    if (spec.offset_mode == OffsetMode::kPerCategory) {
      o = ScaledOffset(GaussianDirection(rng, dim), offset_norm);
    }
    out.truth.category_offset[cat] = o;

    const auto u = OrthogonalTo(GaussianDirection(rng, dim), o);
    std::vector<double> c(dim);
    for (std::size_t i = 0; i < dim; ++i) c[i] = spec.category_spread * u[i] - 0.5 * o[i];
    const Vector center_real = Quantize(c);
    Vector center_look(dim);
    for (std::size_t i = 0; i < dim; ++i) center_look[i] = center_real[i] + o[i];

    char id[96];
    for (Label label : {Label::kReal, Label::kLookalike}) {
      const Vector& center = label == Label::kReal ? center_real : center_look;
      for (std::size_t j = 0; j < spec.per_label_count; ++j) {
        std::snprintf(id, sizeof id, "%s/%s/%03zu", cat.c_str(), ToString(label).data(), j);
        out.images.Add({id, cat, label, Modality::kImage, Noisy(center, rng, noise)});
      }
    }

    for (std::size_t t = 0; t < spec.prompt_templates; ++t) {
      for (Label label : {Label::kReal, Label::kLookalike}) {
        const double signal = label == Label::kLookalike ? spec.prompt_signal : 0.0;
        Vector p(dim);
        for (std::size_t i = 0; i < dim; ++i) {
          const double g = rng.Normal();
          p[i] = static_cast<float>(spec.text_gap * gap_dir[i] + spec.category_spread * u[i] +
                                    signal * o[i] + prompt_noise * g);
        }
        std::snprintf(id, sizeof id, "synth-%s-%zu|%s", ToString(label).data(), t, cat.c_str());
        out.prompts.Add({id, cat, label, Modality::kText, std::move(p)});
      }
    }
  }
  return out;
}

std::string SerializeTruth(const PlantedTruth& truth) {
  const SynthSpec& s = truth.spec;
  Json j;
  j["n_categories"] = s.n_categories;
  j["per_label_count"] = s.per_label_count;
  j["dim"] = s.dim;
  j["category_spread"] = s.category_spread;
  j["offset_norm"] = Norm(truth.offset);
  j["offset"] = VectorJson(truth.offset);
  j["noise_sigma"] = s.noise_sigma;
  j["seed"] = s.seed;
  j["offset_mode"] = std::string(ToString(s.offset_mode));
  j["prompt_templates"] = s.prompt_templates;
  j["prompt_signal"] = s.prompt_signal;
  j["prompt_noise"] = s.prompt_noise;
  j["text_gap"] = s.text_gap;
  if (s.offset_mode == OffsetMode::kPerCategory) {
    Json per = Json::object();
    for (const auto& [cat, o] : truth.category_offset) per[cat] = VectorJson(o);
    j["category_offsets"] = per;
  }
  return j.dump(2) + "\n";
}

PlantedTruth ParseTruth(std::string_view text, const std::string& source) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(source + ": not a synth spec file: " + e.what());
  }
  PlantedTruth t;
  SynthSpec& s = t.spec;
  try {
    s.n_categories = j.at("n_categories").get<std::size_t>();
    s.per_label_count = j.at("per_label_count").get<std::size_t>();
    s.dim = j.at("dim").get<std::size_t>();
    s.category_spread = j.at("category_spread").get<double>();
    s.offset_norm = j.at("offset_norm").get<double>();
    s.noise_sigma = j.at("noise_sigma").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.offset_mode = ParseOffsetMode(j.at("offset_mode").get<std::string>());
    s.prompt_templates = j.value("prompt_templates", s.prompt_templates);
    s.prompt_signal = j.value("prompt_signal", s.prompt_signal);
    s.prompt_noise = j.value("prompt_noise", s.prompt_noise);
    s.text_gap = j.value("text_gap", s.text_gap);
  } catch (const nlohmann::json::exception& e) {
    throw Error(source + ": " + e.what());
  }
  t.offset = VectorFrom(j.at("offset"), source + ": offset");
  s.offset = t.offset;
  s.Validate();
  if (s.offset_mode == OffsetMode::kPerCategory) {
    if (!j.contains("category_offsets")) throw Error(source + ": missing category_offsets");
    for (const auto& [cat, v] : j["category_offsets"].items()) {
      t.category_offset[cat] = VectorFrom(v, source + ": category_offsets." + cat);
    }
  } else {
    for (std::size_t k = 0; k < s.n_categories; ++k) t.category_offset[CategoryName(k)] = t.offset;
  }
  return t;
}

RecoveryReport PlantedRecoveryReport(const RecordSet& corpus, const PlantedTruth& truth,
                                     const DirectionSet& dirs) {
  const SynthSpec& s = truth.spec;
  if (corpus.dim() != s.dim || dirs.dim != s.dim) {
    throw Error("spec/corpus mismatch: spec dim " + std::to_string(s.dim) + ", corpus dim " +
                std::to_string(corpus.dim()) + ", directions dim " + std::to_string(dirs.dim));
  }
  const auto cats = corpus.Categories();
  if (cats.size() != s.n_categories) {
    throw Error("spec/corpus mismatch: spec has " + std::to_string(s.n_categories) +
                " categories, corpus has " + std::to_string(cats.size()));
  }
  for (const auto& cat : cats) {
    truth.OffsetFor(cat);
    for (Label label : {Label::kReal, Label::kLookalike}) {
      if (corpus.Count(cat, label) != s.per_label_count) {
        throw Error("spec/corpus mismatch: category '" + cat + "' has " +
                    std::to_string(corpus.Count(cat, label)) + " " +
                    std::string(ToString(label)) + " images, spec says " +
                    std::to_string(s.per_label_count));
      }
    }
    if (!dirs.per_category.count(cat)) {
      throw Error("spec/corpus mismatch: no direction for category '" + cat + "'");
    }
  }

  RecoveryReport report;
  std::map<std::string, RecoveryRow> rows;
  for (const auto& cat : cats) {
    RecoveryRow& row = rows[cat];
    row.category = cat;
    const Vector& o = truth.OffsetFor(cat);
    row.cosine_per_category = Cosine(dirs.per_category.at(cat).d, o);
    auto loo = dirs.loo.find(cat);
    if (loo != dirs.loo.end() && SquaredNorm(loo->second) > 0.0) {
      row.cosine_loo = Cosine(loo->second, o);
    }
  }
  std::size_t n = 0;
  std::size_t correct = 0;
  for (const auto& r : corpus) {
    if (r.modality != Modality::kImage || r.label == Label::kUnlabeled) continue;
    const DirectionMode mode =
        dirs.loo.empty() ? DirectionMode::kPerCategory : DirectionMode::kLeaveOneOut;
    const Vector& d = dirs.For(r.category, mode);
    RecoveryRow& row = rows[r.category];
    ++row.n;
    if (SquaredNorm(d) > 0.0 && SquaredNorm(r.vector) > 0.0) {
      row.correct += Cosine(r.vector, d) >= 0.0 ? (r.label == Label::kLookalike)
                                                : (r.label == Label::kReal);
    }
  }
  double sum_pc = 0.0;
  double sum_loo = 0.0;
  std::size_t n_loo = 0;
  report.min_cosine_loo = 1.0;
  for (auto& [cat, row] : rows) {
    sum_pc += row.cosine_per_category;
    if (row.cosine_loo) {
      sum_loo += *row.cosine_loo;
      report.min_cosine_loo = std::min(report.min_cosine_loo, *row.cosine_loo);
      ++n_loo;
    }
    n += row.n;
    correct += row.correct;
    report.rows.push_back(row);
  }
  report.mean_cosine_per_category = sum_pc / static_cast<double>(rows.size());
  if (n_loo > 0) report.mean_cosine_loo = sum_loo / static_cast<double>(n_loo);
  report.accuracy = n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
  return report;
}

std::string SerializeRecovery(const RecoveryReport& report) {
  Json j;
  j["mean_cosine_per_category"] = report.mean_cosine_per_category;
  j["mean_cosine_loo"] = report.mean_cosine_loo ? Json(*report.mean_cosine_loo) : Json(nullptr);
  j["min_cosine_loo"] = report.mean_cosine_loo ? Json(report.min_cosine_loo) : Json(nullptr);
  j["accuracy_tau0"] = report.accuracy;
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json row;
    row["category"] = r.category;
    row["cosine_per_category"] = r.cosine_per_category;
    row["cosine_loo"] = r.cosine_loo ? Json(*r.cosine_loo) : Json(nullptr);
    row["n"] = r.n;
    row["accuracy_tau0"] = r.n == 0 ? 0.0 : static_cast<double>(r.correct) / r.n;
    rows.push_back(row);
  }
  j["categories"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace rola
