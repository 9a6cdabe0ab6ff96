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

#include <span>
#include <string_view>
#include <vector>

namespace rola {

// Embedding components are stored as 32-bit floats; every reduction over them
// accumulates in double.
using Vector = std::vector<float>;
using VectorView = std::span<const float>;

enum class Sign : int { kPlus = 1, kMinus = -1 };

// kConvex: (1 - alpha) * base + sign * alpha * direction, alpha in [0, 1].
// kAdditive: base + sign * alpha * direction, alpha >= 0.
enum class Mixing { kConvex, kAdditive };

inline int SignValue(Sign s) { return static_cast<int>(s); }
inline Sign Flip(Sign s) { return s == Sign::kPlus ? Sign::kMinus : Sign::kPlus; }
std::string_view ToString(Sign s);
std::string_view ToString(Mixing m);

double Dot(VectorView a, VectorView b);
double SquaredNorm(VectorView a);
double Norm(VectorView a);
bool AllFinite(VectorView a);

// Cosine from a precomputed dot product and squared norms, clamped to
// [-1, 1]. Computed as dot / sqrt(|a|^2 |b|^2); Cosine(a, a) is exactly 1.
double CosineFromParts(double dot, double sq_norm_a, double sq_norm_b);

// Throws Error on length mismatch or a zero-norm argument.
double Cosine(VectorView a, VectorView b);

// Throws Error on length mismatch or alpha outside the mode's range. With
// renormalize set, the result is scaled to unit norm (Error if it is zero).
// alpha == 0 returns base exactly in both modes.
Vector Shift(VectorView base, VectorView direction, double alpha, Sign sign,
             Mixing mixing, bool renormalize = false);

// v / |v|; Error on zero norm.
Vector Normalized(VectorView v);

}  // namespace rola
