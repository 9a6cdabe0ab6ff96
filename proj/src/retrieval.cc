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

#include "rola/retrieval.h"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "rola/error.h"

namespace rola {
namespace {

constexpr std::size_t kRecallSample = 100;
constexpr std::size_t kRecallK = 10;

struct Scored {
  double score;
  std::size_t index;
};

}  // namespace

std::string_view ToString(Backend b) { return b == Backend::kExact ? "exact" : "approximate"; }

Backend ParseBackend(std::string_view s) {
  if (s == "exact") return Backend::kExact;
  if (s == "approximate" || s == "ann" || s == "hnsw") return Backend::kApproximate;
  throw Error("unknown backend '" + std::string(s) + "'");
}

std::string_view ToString(WalkStatus s) {
  return s == WalkStatus::kMaxChanges ? "max_changes" : "budget_exhausted";
}

Index Index::Build(const RecordSet& corpus, Backend backend, const HnswParams& params) {
  if (corpus.empty()) throw Error("cannot index an empty corpus");
  Index index;
  index.corpus_ = std::make_shared<const RecordSet>(corpus);
  index.sq_norms_.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double n = SquaredNorm(corpus[i].vector);
    if (n == 0.0) {
      throw Error("corpus record " + std::to_string(i + 1) + " ('" + corpus[i].id +
                  "') has zero norm and cannot be ranked by cosine");
    }
    index.sq_norms_.push_back(n);
  }
  index.meta_.backend = backend;
  index.meta_.size = corpus.size();
  index.meta_.dim = corpus.dim();
  if (backend == Backend::kExact) return index;

  std::vector<float> rows;
  rows.reserve(corpus.size() * corpus.dim());
  for (const auto& r : corpus) {
    const Vector unit = Normalized(r.vector);
    rows.insert(rows.end(), unit.begin(), unit.end());
  }
  index.graph_ = std::make_shared<const HnswGraph>(std::move(rows), corpus.dim(), params);
  index.meta_.hnsw = params;

  // Recall against the exact scan on evenly spaced corpus vectors.
  const std::size_t samples = std::min(kRecallSample, corpus.size());
  const std::size_t k = std::min(kRecallK, corpus.size());
  double recall = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto& q = corpus[s * corpus.size() / samples].vector;
    const auto exact = index.ExactQuery(q, SquaredNorm(q), k, {});
    const auto approx = index.Query(q, k);
    std::unordered_set<std::string> truth;
    for (const auto& h : exact.hits) truth.insert(h.id);
    std::size_t found = 0;
    for (const auto& h : approx.hits) found += truth.count(h.id);
    recall += static_cast<double>(found) / static_cast<double>(k);
  }
  index.meta_.sampled_recall_at_10 = recall / static_cast<double>(samples);
  index.meta_.recall_sample_size = samples;
  return index;
}

bool Index::Passes(std::size_t i, const QueryFilter& filter) const {
  const auto& r = (*corpus_)[i];
  if (filter.category && r.category != *filter.category) return false;
  return !filter.exclude_ids.contains(r.id);
}

RetrievalResult Index::ExactQuery(VectorView q, double q_sq_norm, std::size_t k,
                                  const QueryFilter& filter) const {
  std::vector<Scored> scored;
  scored.reserve(corpus_->size());
  for (std::size_t i = 0; i < corpus_->size(); ++i) {
    if (!Passes(i, filter)) continue;
    const double s = CosineFromParts(Dot(q, (*corpus_)[i].vector), q_sq_norm, sq_norms_[i]);
    scored.push_back({s, i});
  }
  const auto better = [this](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return (*corpus_)[a.index].id < (*corpus_)[b.index].id;
  };
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), better);
  RetrievalResult out;
  out.hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.hits.push_back({(*corpus_)[scored[i].index].id, scored[i].score});
  }
  return out;
}

RetrievalResult Index::Query(VectorView q, std::size_t k, const QueryFilter& filter) const {
  if (k == 0) throw Error("k must be at least 1");
  if (q.size() != dim()) {
    throw Error("query dimension " + std::to_string(q.size()) + " does not match index dimension " +
                std::to_string(dim()));
  }
  const double q_sq_norm = SquaredNorm(q);
  if (q_sq_norm == 0.0) throw Error("zero-norm query");

  bool any = false;
  for (std::size_t i = 0; i < corpus_->size() && !any; ++i) any = Passes(i, filter);
  if (!any) throw Error("no corpus record passes the query filter");

  if (meta_.backend == Backend::kExact) return ExactQuery(q, q_sq_norm, k, filter);

  const bool filtered = filter.category.has_value() || !filter.exclude_ids.empty();
  const std::size_t want = filtered ? 4 * k + filter.exclude_ids.size() : k;
  const Vector unit = Normalized(q);
  const auto found = graph_->Search(unit, want, std::max(meta_.hnsw->ef_search, want));
  std::vector<Scored> scored;
  for (const auto& [node, sim] : found) {
    if (!Passes(node, filter)) continue;
    scored.push_back(
        {CosineFromParts(Dot(q, (*corpus_)[node].vector), q_sq_norm, sq_norms_[node]), node});
  }
  if (scored.size() < k) return ExactQuery(q, q_sq_norm, k, filter);
  std::sort(scored.begin(), scored.end(), [this](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return (*corpus_)[a.index].id < (*corpus_)[b.index].id;
  });
  RetrievalResult out;
  for (std::size_t i = 0; i < k; ++i) {
    out.hits.push_back({(*corpus_)[scored[i].index].id, scored[i].score});
  }
  return out;
}

RetrievalResult QueryTopK(const Index& index, VectorView q, std::size_t k,
                          const std::optional<std::string>& category_filter,
                          const std::unordered_set<std::string>& exclude_ids) {
  return index.Query(q, k, QueryFilter{category_filter, exclude_ids});
}

RetrievalResult ShiftedQuery(const Index& index, VectorView base, VectorView direction,
                             double alpha, Sign sign, std::size_t k,
                             const std::optional<std::string>& category_filter) {
  const Vector q = Shift(base, direction, alpha, sign, Mixing::kAdditive);
  return QueryTopK(index, q, k, category_filter);
}

WalkTrace ShiftWalk(const Index& index, VectorView start, VectorView direction, Sign sign,
                    const WalkOptions& options, std::string start_id,
                    std::string direction_handle) {
  if (!(options.step > 0.0) || !std::isfinite(options.step)) throw Error("walk step must be positive");
  if (options.max_changes == 0) throw Error("walk max_changes must be at least 1");
  if (!(options.alpha_budget >= options.step)) throw Error("walk alpha_budget must be >= step");
  if (direction.size() != start.size()) throw Error("walk: direction length mismatch");
  if (SquaredNorm(start) == 0.0) throw Error("walk: zero-norm start vector");

  WalkTrace trace;
  trace.start_id = std::move(start_id);
  trace.direction = std::move(direction_handle);
  trace.sign = sign;
  trace.step = options.step;
  trace.alpha_budget = options.alpha_budget;
  trace.max_changes = options.max_changes;

  QueryFilter filter{options.category_filter, {}};
  std::string previous = index.Query(start, 1, filter).hits.front().id;
  trace.start_nn_id = previous;

  // budget / step, rounded down with a 1e-9 tolerance.
  const auto steps = static_cast<std::size_t>(std::floor(options.alpha_budget / options.step + 1e-9));
  for (std::size_t i = 1; i <= steps; ++i) {
    const double alpha = static_cast<double>(i) * options.step;
    const Vector q = Shift(start, direction, alpha, sign, Mixing::kAdditive);
    if (SquaredNorm(q) == 0.0) continue;
    const std::string nn = index.Query(q, 1, filter).hits.front().id;
    if (nn == previous) continue;
    trace.changes.push_back({alpha, nn});
    previous = nn;
    if (trace.changes.size() == options.max_changes) {
      trace.status = WalkStatus::kMaxChanges;
      return trace;
    }
  }
  trace.status = WalkStatus::kBudgetExhausted;
  return trace;
}

std::string SerializeWalkTrace(const WalkTrace& trace) {
  nlohmann::ordered_json j;
  j["start_id"] = trace.start_id;
  j["start_nn_id"] = trace.start_nn_id;
  j["direction"] = trace.direction;
  j["sign"] = std::string(ToString(trace.sign));
  j["step"] = trace.step;
  j["alpha_budget"] = trace.alpha_budget;
  auto changes = nlohmann::ordered_json::array();
  for (const auto& c : trace.changes) {
    changes.push_back({{"cum_alpha", c.cumulative_alpha}, {"nn_id", c.nn_id}});
  }
  while (changes.size() < trace.max_changes) changes.push_back("no_image");
  j["changes"] = std::move(changes);
  j["status"] = std::string(ToString(trace.status));
  return j.dump() + "\n";
}

}  // namespace rola
