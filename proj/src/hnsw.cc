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

#include "rola/hnsw.h"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_set>

#include "rola/error.h"
#include "rola/random.h"

namespace rola {
namespace {

struct Worse {
  bool operator()(const std::pair<double, std::uint32_t>& a,
                  const std::pair<double, std::uint32_t>& b) const {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  }
};

struct Better {
  bool operator()(const std::pair<double, std::uint32_t>& a,
                  const std::pair<double, std::uint32_t>& b) const {
    return a.first < b.first || (a.first == b.first && a.second > b.second);
  }
};

}  // namespace

HnswGraph::HnswGraph(std::vector<float> unit_rows, std::size_t dim, HnswParams params)
    : rows_(std::move(unit_rows)), dim_(dim), params_(params) {
  if (dim_ == 0 || rows_.size() % dim_ != 0) throw Error("hnsw: bad row buffer");
  if (params_.m < 2 || params_.ef_construction == 0 || params_.ef_search == 0) {
    throw Error("hnsw: m must be >= 2 and ef values positive");
  }
  const std::size_t n = rows_.size() / dim_;
  levels_.resize(n);
  links_.resize(n);
  Random rng(params_.seed);
  const double level_mult = 1.0 / std::log(static_cast<double>(params_.m));
  for (std::size_t i = 0; i < n; ++i) {
    const double u = 1.0 - rng.Uniform();  // (0, 1]
    levels_[i] = static_cast<int>(std::floor(-std::log(u) * level_mult));
    links_[i].resize(static_cast<std::size_t>(levels_[i]) + 1);
  }
  for (std::size_t i = 0; i < n; ++i) Insert(static_cast<std::uint32_t>(i), levels_[i]);
}

VectorView HnswGraph::Row(std::uint32_t node) const {
  return VectorView(rows_.data() + static_cast<std::size_t>(node) * dim_, dim_);
}

double HnswGraph::Sim(VectorView q, std::uint32_t node) const {
  const float* r = rows_.data() + static_cast<std::size_t>(node) * dim_;
  double acc = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) acc += static_cast<double>(q[i]) * r[i];
  return acc;
}

double HnswGraph::SimNodes(std::uint32_t a, std::uint32_t b) const { return Sim(Row(a), b); }

std::vector<HnswGraph::Candidate> HnswGraph::SearchLayer(VectorView q,
                                                         const std::vector<std::uint32_t>& entries,
                                                         std::size_t ef, int level) const {
  std::unordered_set<std::uint32_t> visited;
  std::priority_queue<Candidate, std::vector<Candidate>, Better> frontier;  // best on top
  std::priority_queue<Candidate, std::vector<Candidate>, Worse> found;      // worst on top
  for (auto e : entries) {
    if (!visited.insert(e).second) continue;
    const Candidate c{Sim(q, e), e};
    frontier.push(c);
    found.push(c);
    if (found.size() > ef) found.pop();
  }
  while (!frontier.empty()) {
    const Candidate cur = frontier.top();
    frontier.pop();
    if (found.size() >= ef && cur.first < found.top().first) break;
    for (auto nb : links_[cur.second][static_cast<std::size_t>(level)]) {
      if (!visited.insert(nb).second) continue;
      const double s = Sim(q, nb);
      if (found.size() < ef || s > found.top().first) {
        frontier.push({s, nb});
        found.push({s, nb});
        if (found.size() > ef) found.pop();
      }
    }
  }
  std::vector<Candidate> out;
  out.reserve(found.size());
  while (!found.empty()) {
    out.push_back(found.top());
    found.pop();
  }
  std::reverse(out.begin(), out.end());  // best first
  return out;
}

// Diversity heuristic: keep a candidate only if it is closer to the base
// than to every neighbor kept so far; top up from the pruned ones.
std::vector<std::uint32_t> HnswGraph::SelectNeighbors(std::vector<Candidate> candidates,
                                                      std::size_t limit) const {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  std::vector<std::uint32_t> kept;
  std::vector<std::uint32_t> pruned;
  for (const auto& [sim, node] : candidates) {
    if (kept.size() >= limit) break;
    bool diverse = true;
    for (auto k : kept) {
      if (SimNodes(node, k) > sim) {
        diverse = false;
        break;
      }
    }
    (diverse ? kept : pruned).push_back(node);
  }
  for (auto node : pruned) {
    if (kept.size() >= limit) break;
    kept.push_back(node);
  }
  return kept;
}

void HnswGraph::Insert(std::uint32_t node, int level) {
  if (max_level_ < 0) {
    entry_ = node;
    max_level_ = level;
    return;
  }
  const VectorView q = Row(node);
  std::vector<std::uint32_t> entries{entry_};
  for (int l = max_level_; l > level; --l) {
    const auto best = SearchLayer(q, entries, 1, l);
    entries = {best.front().second};
  }
  for (int l = std::min(level, max_level_); l >= 0; --l) {
    const auto candidates = SearchLayer(q, entries, params_.ef_construction, l);
    const auto chosen = SelectNeighbors(candidates, params_.m);
    const auto lvl = static_cast<std::size_t>(l);
    links_[node][lvl] = chosen;
    for (auto nb : chosen) {
      auto& back = links_[nb][lvl];
      back.push_back(node);
      if (back.size() > MaxLinks(l)) {
        std::vector<Candidate> pool;
        pool.reserve(back.size());
        for (auto x : back) pool.push_back({SimNodes(nb, x), x});
        back = SelectNeighbors(std::move(pool), MaxLinks(l));
      }
    }
    entries.clear();
    for (const auto& c : candidates) entries.push_back(c.second);
  }
  if (level > max_level_) {
    max_level_ = level;
    entry_ = node;
  }
}

std::vector<std::pair<std::size_t, double>> HnswGraph::Search(VectorView unit_query,
                                                              std::size_t k,
                                                              std::size_t ef) const {
  std::vector<std::pair<std::size_t, double>> out;
  if (max_level_ < 0 || k == 0) return out;
  std::vector<std::uint32_t> entries{entry_};
  for (int l = max_level_; l > 0; --l) {
    const auto best = SearchLayer(unit_query, entries, 1, l);
    entries = {best.front().second};
  }
  const auto found = SearchLayer(unit_query, entries, std::max(ef, k), 0);
  for (std::size_t i = 0; i < found.size() && i < k; ++i) {
    out.emplace_back(found[i].second, found[i].first);
  }
  return out;
}

}  // namespace rola
