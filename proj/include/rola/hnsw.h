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
#include <cstdint>
#include <utility>
#include <vector>

#include "rola/geometry.h"

namespace rola {

struct HnswParams {
  std::size_t m = 16;  // links per node above layer 0; layer 0 keeps 2m
  std::size_t ef_construction = 200;
  std::size_t ef_search = 64;
  std::uint64_t seed = 2026;
};

// Hierarchical navigable small-world graph over unit vectors, scored by inner
// product. Built single-threaded in insertion order, so a given input and
// seed always produce the same graph. Read-only after construction.
class HnswGraph {
 public:
  HnswGraph(std::vector<float> unit_rows, std::size_t dim, HnswParams params);

  // Up to k (node, similarity) pairs, best first. `ef` is clamped to >= k.
  std::vector<std::pair<std::size_t, double>> Search(VectorView unit_query, std::size_t k,
                                                     std::size_t ef) const;

  std::size_t size() const { return levels_.size(); }
  const HnswParams& params() const { return params_; }

 private:
  using Candidate = std::pair<double, std::uint32_t>;  // (similarity, node)

  double Sim(VectorView q, std::uint32_t node) const;
  double SimNodes(std::uint32_t a, std::uint32_t b) const;
  VectorView Row(std::uint32_t node) const;
  std::vector<Candidate> SearchLayer(VectorView q, const std::vector<std::uint32_t>& entries,
                                     std::size_t ef, int level) const;
  std::vector<std::uint32_t> SelectNeighbors(std::vector<Candidate> candidates,
                                             std::size_t limit) const;
  void Insert(std::uint32_t node, int level);
  std::size_t MaxLinks(int level) const { return level == 0 ? 2 * params_.m : params_.m; }

  std::vector<float> rows_;
  std::size_t dim_;
  HnswParams params_;
  std::vector<int> levels_;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // node, level
  std::uint32_t entry_ = 0;
  int max_level_ = -1;
};

}  // namespace rola
