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


// Synthetic corpus with a planted real -> lookalike displacement.
//
// Generator: std::mt19937_64 seeded with SynthSpec::seed, uniform doubles
// from the top 53 bits, standard normals by Box-Muller (cosine branch, one
// normal per two draws). Draw order is fixed:
//
//   1. shared offset direction (always drawn, even when an offset is given)
//   2. text gap direction
//   3. per category, in index order:
//        category offset direction (per_category mode only)
//        center direction
//        real noise, then lookalike noise, record by record
//        prompt noise, template by template, real before lookalike
//
// Centers and offsets are rounded to multiples of 2^-16. A noiseless corpus
// recovers the offset with no rounding at all.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rola/direction_estimator.h"
#include "rola/embedding_store.h"
#include "rola/geometry.h"

namespace rola {

enum class OffsetMode { kShared, kPerCategory };

std::string_view ToString(OffsetMode mode);
OffsetMode ParseOffsetMode(std::string_view s);

struct SynthSpec {
  std::size_t n_categories = 16;
  std::size_t per_label_count = 25;
  std::size_t dim = 64;
  double category_spread = 1.0;
  double offset_norm = 1.0;
  std::optional<Vector> offset;  // overrides offset_norm when set
  // Expected norm of each noise vector; per-component deviation is
  // noise_sigma / sqrt(dim).
  double noise_sigma = 0.3;
  std::uint64_t seed = 42;
  OffsetMode offset_mode = OffsetMode::kShared;
  std::size_t prompt_templates = 2;
  double prompt_signal = 0.25;
  double prompt_noise = 1.0;
  double text_gap = 1.0;

  void Validate() const;
};

struct PlantedTruth {
  SynthSpec spec;
  Vector offset;                               // realized shared offset
  std::map<std::string, Vector> category_offset;  // realized, every category

  const Vector& OffsetFor(std::string_view category) const;
};

struct PlantedCorpus {
  PlantedTruth truth;
  RecordSet images{1};
  RecordSet prompts{1};
};

std::string CategoryName(std::size_t index);

PlantedCorpus GeneratePlantedCorpus(const SynthSpec& spec);

// Sidecar JSON: every SynthSpec field with the realized offsets filled in.
std::string SerializeTruth(const PlantedTruth& truth);
PlantedTruth ParseTruth(std::string_view text, const std::string& source = "<memory>");

struct RecoveryRow {
  std::string category;
  double cosine_per_category = 0.0;
  std::optional<double> cosine_loo;
  std::size_t n = 0;
  std::size_t correct = 0;  // direction_only at tau = 0
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;
  double mean_cosine_per_category = 0.0;
  std::optional<double> mean_cosine_loo;
  double min_cosine_loo = 0.0;
  double accuracy = 0.0;
};

RecoveryReport PlantedRecoveryReport(const RecordSet& corpus, const PlantedTruth& truth,
                                     const DirectionSet& dirs);

std::string SerializeRecovery(const RecoveryReport& report);

}  // namespace rola
