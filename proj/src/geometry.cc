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

#include "rola/geometry.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "rola/error.h"

namespace rola {
namespace {

void RequireSameLength(VectorView a, VectorView b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(std::string(what) + ": length mismatch (" +
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                ")");
  }
}

}  // namespace

std::string_view ToString(Sign s) { return s == Sign::kPlus ? "+" : "-"; }

std::string_view ToString(Mixing m) {
  return m == Mixing::kConvex ? "convex" : "additive";
}

double Dot(VectorView a, VectorView b) {
  RequireSameLength(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double SquaredNorm(VectorView a) {
  double acc = 0.0;
  for (float x : a) acc += static_cast<double>(x) * static_cast<double>(x);
  return acc;
}

double Norm(VectorView a) { return std::sqrt(SquaredNorm(a)); }

bool AllFinite(VectorView a) {
  return std::all_of(a.begin(), a.end(), [](float x) { return std::isfinite(x); });
}

double CosineFromParts(double dot, double sq_norm_a, double sq_norm_b) {
  const double c = dot / std::sqrt(sq_norm_a * sq_norm_b);
  return std::clamp(c, -1.0, 1.0);
}

double Cosine(VectorView a, VectorView b) {
  RequireSameLength(a, b, "cosine");
  const double na = SquaredNorm(a);
  const double nb = SquaredNorm(b);
  if (na == 0.0 || nb == 0.0) throw Error("cosine: zero-norm argument");
  return CosineFromParts(Dot(a, b), na, nb);
}

Vector Shift(VectorView base, VectorView direction, double alpha, Sign sign,
             Mixing mixing, bool renormalize) {
  RequireSameLength(base, direction, "shift");
  if (!std::isfinite(alpha) || alpha < 0.0 ||
      (mixing == Mixing::kConvex && alpha > 1.0)) {
    throw Error("shift: alpha " + std::to_string(alpha) + " out of range for " +
                std::string(ToString(mixing)) + " mixing");
  }
  if (alpha == 0.0 && !renormalize) return Vector(base.begin(), base.end());
  const double keep = mixing == Mixing::kConvex ? 1.0 - alpha : 1.0;
  const double step = SignValue(sign) * alpha;
  Vector out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    out[i] = static_cast<float>(keep * base[i] + step * direction[i]);
  }
  if (renormalize) return Normalized(out);
  return out;
}

Vector Normalized(VectorView v) {
  const double n = Norm(v);
  if (n == 0.0) throw Error("cannot normalize a zero-norm vector");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(v[i] / n);
  }
  return out;
}

}  // namespace rola
