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

// Acceptance suite: one PASS/FAIL line per headline property of the toolkit.
// Every expected value is recomputed here from first principles rather than
// taken from the library under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "rola/classifiers.h"
#include "rola/direction_estimator.h"
#include "rola/evaluation.h"
#include "rola/geometry.h"
#include "rola/retrieval.h"
#include "rola/synth_corpus.h"

namespace {

using namespace rola;

struct Verdict {
  bool pass = false;
  std::string detail;
};

Vector Gaussian(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (auto& x : v) x = static_cast<float>(normal(gen));
  return v;
}

long double LDot(const Vector& a, const Vector& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

long double LCos(const Vector& a, const Vector& b) {
  return LDot(a, b) / std::sqrt(LDot(a, a) * LDot(b, b));
}

std::string Fmt(const char* format, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

Verdict PlantedRecovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const PlantedCorpus noisy = GeneratePlantedCorpus(SynthSpec{});
  const DirectionSet dirs = EstimateDirections(noisy.images);
  double worst = 1.0;
  for (const auto& cat : noisy.images.Categories()) {
    worst = std::min(worst, static_cast<double>(LCos(dirs.loo.at(cat), noisy.truth.offset)));
  }
  SynthSpec clean;
  clean.noise_sigma = 0.0;
  const PlantedCorpus exact = GeneratePlantedCorpus(clean);
  const DirectionSet exact_dirs = EstimateDirections(exact.images);
  bool all_one = exact_dirs.loo.size() == 16;
  for (const auto& [cat, v] : exact_dirs.loo) {
    all_one = all_one && Cosine(v, exact.truth.offset) == 1.0 &&
              Cosine(exact_dirs.per_category.at(cat).d, exact.truth.offset) == 1.0;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst >= 0.9 && all_one && seconds < 10.0,
          Fmt("min loo cosine %.4f, zero-noise cosine exactly 1: ", worst) +
              (all_one ? "yes" : "no") + Fmt(", %.2fs", seconds)};
}

Verdict ClassifierEndToEnd() {
  const PlantedCorpus corpus = GeneratePlantedCorpus(SynthSpec{});
  const DirectionSet dirs = EstimateDirections(corpus.images);
  ClassifierConfig direction;
  direction.method = Method::kDirectionOnly;
  direction.direction_mode = DirectionMode::kLeaveOneOut;
  const SweepReport tau = Sweep(SweepParam::kTau, DefaultGrid(SweepParam::kTau), direction,
                                corpus.images, &dirs, nullptr);
  bool rows_ok = true;
  std::string rows;
  for (std::size_t t = 0; t < corpus.truth.spec.prompt_templates; ++t) {
    const std::string real = "synth-real-" + std::to_string(t);
    const std::string look = "synth-lookalike-" + std::to_string(t);
    const PromptBank bank = PromptBank::FromRecords(corpus.prompts, real, look);
    // Unshifted baseline counted directly: lookalike iff cos(e,p_l) > cos(e,p_r).
    std::size_t correct = 0;
    for (const auto& r : corpus.images) {
      const bool look_wins = LCos(r.vector, bank.Get(r.category, PromptRole::kLookalike)) >
                             LCos(r.vector, bank.Get(r.category, PromptRole::kReal));
      correct += (look_wins ? Label::kLookalike : Label::kReal) == r.label;
    }
    const double baseline = static_cast<double>(correct) / corpus.images.size();
    ClassifierConfig shifted;
    shifted.method = Method::kShiftedPair;
    const SweepReport alpha = Sweep(SweepParam::kAlpha, DefaultGrid(SweepParam::kAlpha), shifted,
                                    corpus.images, &dirs, &bank);
    rows_ok = rows_ok && alpha.best_accuracy >= baseline;
    rows += Fmt(" | template %.0f: Acc. %.4f, alpha %.2f", static_cast<double>(t), baseline,
                alpha.best_value) +
            Fmt(", Acc. (alpha-shift) %.4f", alpha.best_accuracy);
  }
  return {tau.best_accuracy >= 0.95 && rows_ok,
          Fmt("loo direction_only %.4f at tau %.2f", tau.best_accuracy, tau.best_value) + rows};
}

Verdict ReductionIdentities() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> tau_dist(-1.0, 1.0);
  std::size_t pair_disagree = 0;
  std::size_t single_disagree = 0;
  const int n = 10000;
  for (int t = 0; t < n; ++t) {
    const std::size_t dim = 2 + t % 63;
    const Vector e = Gaussian(gen, dim);
    const Vector pr = Gaussian(gen, dim);
    const Vector pl = Gaussian(gen, dim);
    const Vector d = Gaussian(gen, dim);
    const Scoring scoring = t % 2 ? Scoring::kCosine : Scoring::kDot;
    const auto shifted = ShiftedPairClassify(e, pr, pl, d, 0.0, scoring);
    const auto plain = PairBaselineClassify(e, pr, pl, scoring);
    pair_disagree += shifted.predicted != plain.predicted;

    const double tau = tau_dist(gen);
    const PromptRole role = t % 3 ? PromptRole::kReal : PromptRole::kLookalike;
    const Label own = role == PromptRole::kReal ? Label::kReal : Label::kLookalike;
    const Label other = own == Label::kReal ? Label::kLookalike : Label::kReal;
    const auto single = SinglePromptClassify(e, pr, role, d, 0.0, tau);
    const Label raw = LCos(e, pr) >= tau ? own : other;
    single_disagree += single.predicted != raw;
  }
  return {pair_disagree == 0 && single_disagree == 0,
          "shifted_pair vs pair: " + std::to_string(pair_disagree) +
              " disagreements, single_prompt vs raw prompt: " + std::to_string(single_disagree) +
              " disagreements over " + std::to_string(n) + " inputs"};
}

Verdict EffectiveDifference() {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t disagree = 0;
  const int n = 1000;
  for (int t = 0; t < n; ++t) {
    const std::size_t dim = 2 + t % 40;
    const Vector e = Gaussian(gen, dim);
    const Vector pr = Gaussian(gen, dim);
    const Vector pl = Gaussian(gen, dim);
    const Vector d = Gaussian(gen, dim);
    const long double alpha = unit(gen);
    long double s = 0;
    for (std::size_t i = 0; i < dim; ++i) {
      s += e[i] * ((1 - alpha) * (static_cast<long double>(pl[i]) - pr[i]) + 2 * alpha * d[i]);
    }
    const Label want = s >= 0 ? Label::kLookalike : Label::kReal;
    const auto got =
        ShiftedPairClassify(e, pr, pl, d, static_cast<double>(alpha), Scoring::kDot);
    disagree += got.predicted != want;
  }
  return {disagree == 0, std::to_string(disagree) + " disagreements over " + std::to_string(n) +
                             " random instances"};
}

double ReconstructionError(const RecordSet& set) {
  const DirectionSet dirs = EstimateDirections(set);
  const double k = static_cast<double>(dirs.num_categories());
  double worst = 0.0;
  for (const auto& [name, stats] : dirs.per_category) {
    long double err = 0;
    long double ref = 0;
    for (std::size_t i = 0; i < set.dim(); ++i) {
      const long double lhs = (k - 1) * static_cast<long double>(dirs.loo.at(name)[i]) + stats.d[i];
      const long double rhs = k * static_cast<long double>(dirs.global[i]);
      err += (lhs - rhs) * (lhs - rhs);
      ref += rhs * rhs;
    }
    worst = std::max(worst, static_cast<double>(std::sqrt(err / ref)));
  }
  return worst;
}

Verdict LeaveOneOutReconstruction() {
  std::mt19937_64 gen(5);
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t k = 2 + trial % 14;
    const std::size_t dim = 3 + trial * 5;
    RecordSet set(dim);
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t per = 1 + (c + trial) % 6;
      for (Label label : {Label::kReal, Label::kLookalike}) {
        for (std::size_t j = 0; j < per; ++j) {
          set.Add({std::to_string(c) + "/" + std::to_string(static_cast<int>(label)) + "/" +
                       std::to_string(j),
                   "c" + std::to_string(c), label, Modality::kImage, Gaussian(gen, dim)});
        }
      }
    }
    worst = std::max(worst, ReconstructionError(set));
  }
  for (double noise : {0.0, 0.3, 1.0}) {
    SynthSpec s;
    s.noise_sigma = noise;
    worst = std::max(worst, ReconstructionError(GeneratePlantedCorpus(s).images));
  }
  return {worst <= 1e-5, Fmt("worst relative error %.3g", worst)};
}

Verdict WilsonOracle() {
  const double z = 1.959964;
  const double n = 10;
  const double p = 0.8;
  const double center = p + z * z / (2 * n);
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  const double lo = (center - half) / (1 + z * z / n);
  const double hi = (center + half) / (1 + z * z / n);
  const WilsonBounds w = WilsonInterval(8, 10, 0.95);
  bool ok = std::abs(w.lower - lo) <= 0.002 && std::abs(w.upper - hi) <= 0.002 &&
            std::abs(w.lower - 0.490) <= 0.002 && std::abs(w.upper - 0.943) <= 0.002;
  bool edges = true;
  for (std::size_t m : {1u, 10u, 100u, 12345u}) {
    edges = edges && WilsonInterval(0, m, 0.95).lower == 0.0 &&
            WilsonInterval(m, m, 0.95).upper == 1.0;
  }
  return {ok && edges, Fmt("(8,10) -> (%.4f, %.4f), closed form (%.4f, ", w.lower, w.upper, lo) +
                           Fmt("%.4f); boundaries exact: ", hi) + (edges ? "yes" : "no")};
}

Verdict RetrievalOracle() {
  std::mt19937_64 gen(99);
  std::size_t mismatches = 0;
  std::size_t shift_mismatches = 0;
  std::size_t queries = 0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = 1 + gen() % 1000;
    const std::size_t dim = 2 + gen() % 64;
    RecordSet corpus(dim);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
      Vector v = Gaussian(gen, dim);
      if (i > 0 && gen() % 20 == 0) v = corpus[i - 1].vector;
      const std::string id = "id" + std::to_string((i * 104729) % 1000003);
      corpus.Add({id, "c" + std::to_string(i % 4), Label::kUnlabeled, Modality::kImage, v});
    }
    const Index index = Index::Build(corpus, Backend::kExact);
    for (int q = 0; q < 3; ++q) {
      ++queries;
      const Vector query = Gaussian(gen, dim);
      const std::size_t k = 1 + gen() % 20;
      std::vector<std::pair<long double, std::string>> all;
      for (const auto& r : corpus) all.emplace_back(LCos(query, r.vector), r.id);
      std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      const auto got = QueryTopK(index, query, k);
      bool same = got.hits.size() == std::min(k, n);
      for (std::size_t i = 0; same && i < got.hits.size(); ++i) {
        same = got.hits[i].id == all[i].second;
      }
      mismatches += !same;
      const auto shifted = ShiftedQuery(index, query, Gaussian(gen, dim), 0.0,
                                        q % 2 ? Sign::kPlus : Sign::kMinus, k);
      shift_mismatches += !(shifted.hits == got.hits);
    }
  }
  return {mismatches == 0 && shift_mismatches == 0,
          std::to_string(mismatches) + " ranking mismatches, " +
              std::to_string(shift_mismatches) + " alpha=0 shift mismatches over " +
              std::to_string(queries) + " queries on 100 corpora"};
}

Verdict WalkContract() {
  RecordSet corpus(2);
  corpus.Add({"A", "c", Label::kReal, Modality::kImage, {1, 0}});
  corpus.Add({"B", "c", Label::kLookalike, Modality::kImage, {0, 1}});
  const Index index = Index::Build(corpus);
  // q(alpha) = [1 - alpha, alpha]: B overtakes A once alpha > 1/2; at exactly
  // 1/2 the tie goes to the smaller id, so the first grid point past it is 0.51.
  double oracle = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double a = i * 0.01;
    if (a > 1.0 - a) {
      oracle = a;
      break;
    }
  }
  WalkOptions options;
  options.step = 0.01;
  options.max_changes = 3;
  options.alpha_budget = 1.0;
  const WalkTrace trace = ShiftWalk(index, Vector{1, 0}, Vector{-1, 1}, Sign::kPlus, options);
  const std::string line = SerializeWalkTrace(trace);
  const auto j = nlohmann::json::parse(line);
  const bool flip = trace.changes.size() == 1 && trace.changes[0].nn_id == "B" &&
                    std::abs(trace.changes[0].cumulative_alpha - oracle) < 1e-12;
  const bool slots = j["changes"].size() == 3 && j["changes"][1] == "no_image" &&
                     j["changes"][2] == "no_image";
  const bool deterministic =
      SerializeWalkTrace(ShiftWalk(index, Vector{1, 0}, Vector{-1, 1}, Sign::kPlus, options)) ==
      line;
  return {flip && slots && deterministic,
          Fmt("first change at %.2f (oracle %.2f)", trace.changes.empty()
                                                        ? -1.0
                                                        : trace.changes[0].cumulative_alpha,
              oracle) +
              ", unused slots no_image: " + (slots ? "yes" : "no") +
              ", deterministic: " + (deterministic ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"planted-direction recovery", PlantedRecovery},
      {"classifier end-to-end", ClassifierEndToEnd},
      {"reduction identities", ReductionIdentities},
      {"dot-scoring effective difference", EffectiveDifference},
      {"leave-one-out reconstruction", LeaveOneOutReconstruction},
      {"wilson oracle", WilsonOracle},
      {"retrieval oracle", RetrievalOracle},
      {"walk contract", WalkContract},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    failures += v.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
