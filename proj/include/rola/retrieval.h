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

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "rola/embedding_store.h"
#include "rola/geometry.h"
#include "rola/hnsw.h"

namespace rola {

enum class Backend { kExact, kApproximate };

std::string_view ToString(Backend b);
Backend ParseBackend(std::string_view s);

struct IndexMetadata {
  Backend backend = Backend::kExact;
  std::size_t size = 0;
  std::size_t dim = 0;
  // Approximate backend only.
  std::optional<HnswParams> hnsw;
  // Mean recall@10 of the approximate backend against an exact scan, over
  // corpus vectors sampled at build time.
  std::optional<double> sampled_recall_at_10;
  std::size_t recall_sample_size = 0;
};

struct Hit {
  std::string id;
  double score = 0.0;

  bool operator==(const Hit&) const = default;
};

// Best first; ties broken by ascending id.
struct RetrievalResult {
  std::vector<Hit> hits;
};

struct QueryFilter {
  std::optional<std::string> category;
  std::unordered_set<std::string> exclude_ids;
};

// Cosine nearest-neighbor index over a corpus. Immutable after Build();
// concurrent queries are safe.
class Index {
 public:
  // Throws Error on an empty corpus or a zero-norm corpus vector.
  static Index Build(const RecordSet& corpus, Backend backend = Backend::kExact,
                     const HnswParams& params = {});

  // Throws Error on k == 0, a zero-norm query, a dimension mismatch, or when
  // no record passes the filter.
  RetrievalResult Query(VectorView q, std::size_t k, const QueryFilter& filter = {}) const;

  const IndexMetadata& metadata() const { return meta_; }
  const RecordSet& corpus() const { return *corpus_; }
  std::size_t dim() const { return corpus_->dim(); }
  std::size_t size() const { return corpus_->size(); }

 private:
  Index() = default;
  RetrievalResult ExactQuery(VectorView q, double q_sq_norm, std::size_t k,
                             const QueryFilter& filter) const;
  bool Passes(std::size_t i, const QueryFilter& filter) const;

  std::shared_ptr<const RecordSet> corpus_;
  std::vector<double> sq_norms_;
  std::shared_ptr<const HnswGraph> graph_;
  IndexMetadata meta_;
};

RetrievalResult QueryTopK(const Index& index, VectorView q, std::size_t k,
                          const std::optional<std::string>& category_filter = std::nullopt,
                          const std::unordered_set<std::string>& exclude_ids = {});

// Queries with base + sign * alpha * direction (additive, alpha >= 0).
RetrievalResult ShiftedQuery(const Index& index, VectorView base, VectorView direction,
                             double alpha, Sign sign, std::size_t k,
                             const std::optional<std::string>& category_filter = std::nullopt);

enum class WalkStatus { kMaxChanges, kBudgetExhausted };

std::string_view ToString(WalkStatus s);

struct WalkChange {
  double cumulative_alpha = 0.0;
  std::string nn_id;
};

struct WalkTrace {
  std::string start_id;
  std::string start_nn_id;  // top-1 of the unshifted start (step 0)
  std::string direction;    // free-form handle, e.g. "loo:cat"
  Sign sign = Sign::kPlus;
  double step = 0.01;
  double alpha_budget = 1.0;
  std::size_t max_changes = 3;
  std::vector<WalkChange> changes;
  WalkStatus status = WalkStatus::kBudgetExhausted;
};

struct WalkOptions {
  double step = 0.01;
  std::size_t max_changes = 3;
  double alpha_budget = 1.0;
  std::optional<std::string> category_filter;
};

// Steps the start along sign * direction with cumulative alpha = i * step,
// i = 1, 2, ... while alpha <= alpha_budget, querying top-1 at each step and
// recording a change whenever the nearest neighbor's id differs from the
// previous step's. Stops after max_changes changes. A step whose shifted
// query has zero norm has no neighbor and is skipped.
WalkTrace ShiftWalk(const Index& index, VectorView start, VectorView direction, Sign sign,
                    const WalkOptions& options = {}, std::string start_id = {},
                    std::string direction_handle = {});

// One JSON line: {start_id, start_nn_id, direction, sign, step, alpha_budget,
// changes:[{cum_alpha, nn_id}, ..., "no_image", ...], status}. The changes
// array always has max_changes entries; unreached slots hold "no_image".
std::string SerializeWalkTrace(const WalkTrace& trace);

}  // namespace rola
