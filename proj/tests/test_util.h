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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rola/embedding_store.h"
#include "rola/geometry.h"

namespace rola::testing {

inline Vector RandomVector(std::mt19937_64& gen, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(dim);
  for (auto& x : v) x = static_cast<float>(normal(gen));
  return v;
}

inline std::vector<double> Widen(const Vector& v) { return {v.begin(), v.end()}; }

inline double RefDot(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

inline double RefCosine(const Vector& a, const Vector& b) {
  const auto wa = Widen(a);
  const auto wb = Widen(b);
  return RefDot(wa, wb) / std::sqrt(RefDot(wa, wa) * RefDot(wb, wb));
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("rola-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string File(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Labeled image set with `per_label` real and lookalike records per category.
inline RecordSet RandomLabeledSet(std::mt19937_64& gen, std::size_t categories,
                                  std::size_t per_label, std::size_t dim) {
  RecordSet set(dim, "random");
  for (std::size_t c = 0; c < categories; ++c) {
    for (Label label : {Label::kReal, Label::kLookalike}) {
      for (std::size_t j = 0; j < per_label; ++j) {
        const std::string cat = "c" + std::to_string(c);
        set.Add({cat + "/" + std::string(ToString(label)) + "/" + std::to_string(j), cat, label,
                 Modality::kImage, RandomVector(gen, dim)});
      }
    }
  }
  return set;
}

}  // namespace rola::testing
