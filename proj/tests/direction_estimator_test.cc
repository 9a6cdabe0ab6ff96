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

#include "rola/direction_estimator.h"

#include <bit>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "json.hpp"
#include "rola/error.h"
#include "test_util.h"

namespace rola {
namespace {

using testing::RandomLabeledSet;
using testing::RandomVector;
using testing::TempDir;

void AddImage(RecordSet& set, const std::string& id, const std::string& cat, Label label,
              Vector v) {
  set.Add({id, cat, label, Modality::kImage, std::move(v)});
}

// Category whose real images sit at the origin and lookalike images at d.
void AddPlanted(RecordSet& set, const std::string& cat, Vector d) {
  AddImage(set, cat + "/r", cat, Label::kReal, Vector(d.size(), 0.0f));
  AddImage(set, cat + "/l", cat, Label::kLookalike, std::move(d));
}

TEST(CategoryStats, HandMeans) {
  RecordSet set(2);
  AddImage(set, "r1", "k", Label::kReal, {0, 0});
  AddImage(set, "r2", "k", Label::kReal, {2, 0});
  AddImage(set, "l1", "k", Label::kLookalike, {1, 1});
  AddImage(set, "l2", "k", Label::kLookalike, {3, 1});
  set.Add({"t", "k", Label::kLookalike, Modality::kText, {100, 100}});
  const CategoryStats s = ComputeCategoryStats(set, "k");
  EXPECT_EQ(s.mean_real, (Vector{1, 0}));
  EXPECT_EQ(s.mean_lookalike, (Vector{2, 1}));
  EXPECT_EQ(s.d, (Vector{1, 1}));
  EXPECT_EQ(s.n_real, 2u);
  EXPECT_EQ(s.n_lookalike, 2u);
}

TEST(CategoryStats, IdenticalSetsGiveZeroDirection) {
  RecordSet set(3);
  AddImage(set, "r", "k", Label::kReal, {0.1f, 0.2f, 0.3f});
  AddImage(set, "l", "k", Label::kLookalike, {0.1f, 0.2f, 0.3f});
  EXPECT_EQ(ComputeCategoryStats(set, "k").d, (Vector{0, 0, 0}));
}

TEST(CategoryStats, MissingMembersAreErrors) {
  RecordSet set(1);
  AddImage(set, "l", "k", Label::kLookalike, {1});
  set.Add({"t", "k", Label::kReal, Modality::kText, {1}});
  EXPECT_THROW(ComputeCategoryStats(set, "k"), Error);
  EXPECT_THROW(ComputeCategoryStats(set, "absent"), Error);
}

TEST(CategoryStats, MatchesBruteForceMeans) {
  std::mt19937_64 gen(21);
  const RecordSet set = RandomLabeledSet(gen, 3, 17, 9);
  for (const auto& cat : set.Categories()) {
    const CategoryStats s = ComputeCategoryStats(set, cat);
    for (Label label : {Label::kReal, Label::kLookalike}) {
      std::vector<long double> sum(set.dim(), 0.0L);
      std::size_t n = 0;
      for (const auto& r : set) {
        if (r.category != cat || r.label != label) continue;
        ++n;
        for (std::size_t i = 0; i < set.dim(); ++i) sum[i] += r.vector[i];
      }
      const Vector& mean = label == Label::kReal ? s.mean_real : s.mean_lookalike;
      for (std::size_t i = 0; i < set.dim(); ++i) {
        EXPECT_NEAR(mean[i], static_cast<double>(sum[i] / n), 1e-6);
      }
    }
  }
}

TEST(Estimate, ThreeCategoryHandAverages) {
  RecordSet set(2);
  AddPlanted(set, "a", {1, 0});
  AddPlanted(set, "b", {0, 1});
  AddPlanted(set, "c", {1, 1});
  const DirectionSet dirs = EstimateDirections(set);
  EXPECT_EQ(dirs.num_categories(), 3u);
  EXPECT_EQ(dirs.loo.at("a"), (Vector{0.5f, 1.0f}));
  EXPECT_EQ(dirs.loo.at("b"), (Vector{1.0f, 0.5f}));
  EXPECT_EQ(dirs.loo.at("c"), (Vector{0.5f, 0.5f}));
  EXPECT_EQ(dirs.global, (Vector{2.0f / 3.0f, 2.0f / 3.0f}));
  EXPECT_TRUE(dirs.warnings.empty());
}

TEST(Estimate, TwoCategoriesSwapDirections) {
  std::mt19937_64 gen(22);
  RecordSet set(5);
  const Vector da = RandomVector(gen, 5);
  const Vector db = RandomVector(gen, 5);
  AddPlanted(set, "a", da);
  AddPlanted(set, "b", db);
  const DirectionSet dirs = EstimateDirections(set);
  EXPECT_EQ(dirs.loo.at("a"), db);
  EXPECT_EQ(dirs.loo.at("b"), da);
}

TEST(Estimate, SingleCategoryHasNoLeaveOneOut) {
  RecordSet set(2);
  AddPlanted(set, "a", {3, 4});
  const DirectionSet dirs = EstimateDirections(set);
  EXPECT_TRUE(dirs.loo.empty());
  EXPECT_EQ(dirs.global, (Vector{3, 4}));
  EXPECT_FALSE(dirs.warnings.empty());
  EXPECT_THROW(dirs.For("a", DirectionMode::kLeaveOneOut), Error);
  EXPECT_EQ(dirs.For("a", DirectionMode::kPerCategory), (Vector{3, 4}));
}

TEST(Estimate, SkipsUnusableCategoriesAndFailsWhenNoneRemain) {
  RecordSet set(2);
  AddPlanted(set, "a", {1, 0});
  AddPlanted(set, "b", {0, 1});
  AddImage(set, "c/l", "c", Label::kLookalike, {5, 5});
  const DirectionSet dirs = EstimateDirections(set);
  EXPECT_EQ(dirs.num_categories(), 2u);
  ASSERT_EQ(dirs.warnings.size(), 1u);
  EXPECT_NE(dirs.warnings[0].find("'c'"), std::string::npos);

  RecordSet none(2);
  AddImage(none, "x", "x", Label::kReal, {1, 1});
  EXPECT_THROW(EstimateDirections(none), Error);
}

TEST(Estimate, ReconstructionIdentityOnRandomSets) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + trial % 9;
    const RecordSet set = RandomLabeledSet(gen, k, 1 + trial % 4, 8);
    const DirectionSet dirs = EstimateDirections(set);
    for (const auto& [name, stats] : dirs.per_category) {
      double err = 0.0;
      double ref = 0.0;
      for (std::size_t i = 0; i < set.dim(); ++i) {
        const double lhs = (k - 1.0) * dirs.loo.at(name)[i] + stats.d[i];
        const double rhs = static_cast<double>(k) * dirs.global[i];
        err += (lhs - rhs) * (lhs - rhs);
        ref += rhs * rhs;
      }
      EXPECT_LE(std::sqrt(err), 1e-5 * std::sqrt(ref)) << name;
    }
  }
}

TEST(Estimate, LeaveOneOutIgnoresHeldOutCategory) {
  std::mt19937_64 gen(24);
  const RecordSet set = RandomLabeledSet(gen, 6, 5, 7);
  const DirectionSet before = EstimateDirections(set);
  for (const std::string target : {"c0", "c3", "c5"}) {
    RecordSet perturbed(set.dim());
    for (const auto& r : set) {
      EmbeddingRecord copy = r;
      if (r.category == target) copy.vector = RandomVector(gen, set.dim(), 50.0);
      perturbed.Add(std::move(copy));
    }
    const DirectionSet after = EstimateDirections(perturbed);
    const Vector& a = before.loo.at(target);
    const Vector& b = after.loo.at(target);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(std::bit_cast<std::uint32_t>(a[i]), std::bit_cast<std::uint32_t>(b[i]));
    }
    EXPECT_NE(before.per_category.at(target).d, after.per_category.at(target).d);
  }
}

TEST(DirectionSet, ModeSelection) {
  RecordSet set(2);
  AddPlanted(set, "a", {1, 0});
  AddPlanted(set, "b", {0, 1});
  const DirectionSet dirs = EstimateDirections(set);
  EXPECT_EQ(dirs.For("a", DirectionMode::kPerCategory), (Vector{1, 0}));
  EXPECT_EQ(dirs.For("a", DirectionMode::kLeaveOneOut), (Vector{0, 1}));
  EXPECT_EQ(dirs.For("a", DirectionMode::kGlobal), (Vector{0.5f, 0.5f}));
  EXPECT_EQ(dirs.For("unseen", DirectionMode::kLeaveOneOut), dirs.global);
  EXPECT_THROW(dirs.For("unseen", DirectionMode::kPerCategory), Error);
  EXPECT_EQ(ParseDirectionMode("loo"), DirectionMode::kLeaveOneOut);
  EXPECT_THROW(ParseDirectionMode("sideways"), Error);
}

TEST(DirectionSet, FileRoundTripIsBitExact) {
  std::mt19937_64 gen(25);
  const RecordSet set = RandomLabeledSet(gen, 4, 3, 11);
  const DirectionSet dirs = EstimateDirections(set);
  TempDir dir;
  SaveDirections(dirs, dir.File("d.json"));
  const DirectionSet back = LoadDirections(dir.File("d.json"));
  EXPECT_EQ(back.dim, dirs.dim);
  EXPECT_EQ(back.global, dirs.global);
  EXPECT_EQ(back.loo, dirs.loo);
  EXPECT_EQ(back.created_from, dirs.created_from);
  ASSERT_EQ(back.per_category.size(), dirs.per_category.size());
  for (const auto& [name, s] : dirs.per_category) {
    const auto& b = back.per_category.at(name);
    EXPECT_EQ(b.d, s.d);
    EXPECT_EQ(b.mean_real, s.mean_real);
    EXPECT_EQ(b.mean_lookalike, s.mean_lookalike);
    EXPECT_EQ(b.n_real, s.n_real);
    EXPECT_EQ(b.n_lookalike, s.n_lookalike);
  }
  EXPECT_EQ(SerializeDirections(back), SerializeDirections(dirs));
}

TEST(DirectionSet, FileCarriesUnitCopies) {
  RecordSet set(2);
  AddPlanted(set, "a", {3, 4});
  AddPlanted(set, "b", {0, 0});
  const std::string text = SerializeDirections(EstimateDirections(set));
  const auto doc = nlohmann::json::parse(text);
  EXPECT_NEAR(doc["categories"]["a"]["d_unit"][0].get<double>(), 0.6, 1e-7);
  EXPECT_TRUE(doc["categories"]["b"]["d_unit"].is_null());
  EXPECT_TRUE(doc.contains("loo_unit"));
  EXPECT_TRUE(doc.contains("global_unit"));
}

TEST(DirectionSet, MalformedFilesAreErrors) {
  EXPECT_THROW(ParseDirections("{"), Error);
  EXPECT_THROW(ParseDirections("{\"dim\": 2}"), Error);
  EXPECT_THROW(LoadDirections("/nonexistent/d.json"), Error);
}

}  // namespace
}  // namespace rola
