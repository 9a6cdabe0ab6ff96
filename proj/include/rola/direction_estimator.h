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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rola/embedding_store.h"
#include "rola/geometry.h"

namespace rola {

// Which per-category direction a consumer should use for category k.
enum class DirectionMode { kPerCategory, kLeaveOneOut, kGlobal };

std::string_view ToString(DirectionMode mode);
DirectionMode ParseDirectionMode(std::string_view s);

struct CategoryStats {
  std::string category;
  Vector mean_real;
  Vector mean_lookalike;
  std::size_t n_real = 0;
  std::size_t n_lookalike = 0;
  Vector d;  // mean_lookalike - mean_real
};

// Per-category mean differences plus their leave-one-out and global
// averages. Averages are unweighted over categories.
struct DirectionSet {
  std::size_t dim = 0;
  std::map<std::string, CategoryStats> per_category;  // lexicographic order
  std::map<std::string, Vector> loo;                  // empty when K < 2
  Vector global;
  std::vector<std::string> warnings;  // skipped categories, missing loo
  std::string created_from;

  std::size_t num_categories() const { return per_category.size(); }

  // The direction to apply to records of `category`. A category that was not
  // part of the estimate has nothing to leave out, so kLeaveOneOut falls back
  // to the global direction for it. Throws Error when the requested
  // direction does not exist (per-category for an unknown category, or
  // leave-one-out with K < 2).
  const Vector& For(std::string_view category, DirectionMode mode) const;
};

// Means over the image-modality records of `category`. Text records are
// ignored; vectors are averaged as stored.
CategoryStats ComputeCategoryStats(const RecordSet& train, std::string_view category);

// Skips (with a warning) categories lacking a real or a lookalike image.
// Reductions over categories run in lexicographic category order, so the
// result is bit-reproducible and loo[k] depends only on the other
// categories' records.
DirectionSet EstimateDirections(const RecordSet& train);

// Directions file: {dim, categories:{name:{d, d_unit, mean_real,
// mean_lookalike, n_real, n_lookalike}}, loo:{name: vector}, loo_unit,
// global, global_unit, created_from}. Unit copies are null for zero vectors.
std::string SerializeDirections(const DirectionSet& dirs);
DirectionSet ParseDirections(std::string_view text, const std::string& source = "<memory>");
void SaveDirections(const DirectionSet& dirs, const std::string& path);
DirectionSet LoadDirections(const std::string& path);

}  // namespace rola
