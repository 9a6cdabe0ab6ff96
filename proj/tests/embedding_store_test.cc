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

#include "rola/embedding_store.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "rola/error.h"
#include "rola/io_util.h"
#include "test_util.h"

namespace rola {
namespace {

using testing::RandomLabeledSet;
using testing::RandomVector;
using testing::TempDir;

RecordSet MixedSet(std::uint64_t seed, std::size_t n, std::size_t dim) {
  std::mt19937_64 gen(seed);
  RecordSet set(dim, "mixed seed=" + std::to_string(seed));
  for (std::size_t i = 0; i < n; ++i) {
    EmbeddingRecord r;
    r.id = "r" + std::to_string(i) + (i % 7 == 0 ? "/ünï|x" : "");
    r.category = "cat" + std::to_string(i % 5);
    r.label = static_cast<Label>(i % 3);
    r.modality = static_cast<Modality>(i % 2);
    r.vector = RandomVector(gen, dim, 1e3);
    if (i == 3) r.vector[0] = -0.0f;
    if (i == 4) r.vector[0] = std::numeric_limits<float>::denorm_min();
    if (i == 5) r.vector[0] = std::numeric_limits<float>::max();
    set.Add(std::move(r));
  }
  return set;
}

void ExpectBitIdentical(const RecordSet& a, const RecordSet& b) {
  ASSERT_EQ(a.size(), b.size());
  ASSERT_EQ(a.dim(), b.dim());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].category, b[i].category);
    EXPECT_EQ(a[i].label, b[i].label);
    EXPECT_EQ(a[i].modality, b[i].modality);
    for (std::size_t k = 0; k < a.dim(); ++k) {
      ASSERT_EQ(std::bit_cast<std::uint32_t>(a[i].vector[k]),
                std::bit_cast<std::uint32_t>(b[i].vector[k]))
          << "record " << i << " component " << k;
    }
  }
}

TEST(RecordSet, RejectsInvalidRecords) {
  RecordSet set(3);
  set.Add({"a", "c", Label::kReal, Modality::kImage, {1, 2, 3}});
  try {
    set.Add({"b", "c", Label::kReal, Modality::kImage, {1, 2, 3, 4}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("dimension"), std::string::npos) << e.what();
  }
  EXPECT_THROW(set.Add({"a", "c", Label::kReal, Modality::kImage, {1, 2, 3}}), Error);
  EXPECT_THROW(set.Add({"n", "c", Label::kReal, Modality::kImage, {1, NAN, 3}}), Error);
  EXPECT_THROW(set.Add({"i", "c", Label::kReal, Modality::kImage, {1, INFINITY, 3}}), Error);
  EXPECT_THROW(RecordSet(0), Error);
  EXPECT_EQ(set.size(), 1u);
}

TEST(RecordSet, CountsAndCategories) {
  RecordSet set(1);
  set.Add({"1", "dog", Label::kReal, Modality::kImage, {1}});
  set.Add({"2", "cat", Label::kLookalike, Modality::kImage, {1}});
  set.Add({"3", "cat", Label::kLookalike, Modality::kText, {1}});
  set.Add({"4", "cat", Label::kLookalike, Modality::kImage, {1}});
  EXPECT_EQ(set.Count("cat", Label::kLookalike), 2u);
  EXPECT_EQ(set.Count("cat", Label::kLookalike, Modality::kText), 1u);
  EXPECT_EQ(set.Categories(), (std::vector<std::string>{"cat", "dog"}));
  ASSERT_NE(set.Find("3"), nullptr);
  EXPECT_EQ(set.Find("3")->modality, Modality::kText);
  EXPECT_EQ(set.Find("9"), nullptr);
}

TEST(Lines, ParsesHeaderlessTwoRecords) {
  const std::string text =
      R"({"id":"a","category":"cat","label":"real","modality":"image","vector":[1,2,3]})"
      "\n"
      R"({"id":"b","category":"cat","label":null,"modality":"text","vector":[0.5,-1,2e-3]})"
      "\n";
  const RecordSet set = ParseRecords(text, RecordFormat::kLines);
  EXPECT_EQ(set.dim(), 3u);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set[0].id, "a");
  EXPECT_EQ(set[1].label, Label::kUnlabeled);
  EXPECT_EQ(set[1].modality, Modality::kText);
  EXPECT_EQ(set[1].vector[2], 2e-3f);
}

TEST(Lines, DimensionMismatchNamesSecondRecord) {
  const std::string text =
      R"({"id":"a","category":"c","label":"real","modality":"image","vector":[1,2,3]})"
      "\n"
      R"({"id":"b","category":"c","label":"real","modality":"image","vector":[1,2,3,4]})"
      "\n";
  try {
    ParseRecords(text, RecordFormat::kLines, "f.rola");
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("record 2"), std::string::npos) << msg;
  }
}

TEST(Lines, MalformedRecordsReportIndex) {
  const std::string good =
      R"({"id":"a","category":"c","label":"real","modality":"image","vector":[1]})";
  for (const std::string bad : {
           std::string("{not json"),
           std::string(R"({"id":"b","category":"c","label":"real","modality":"image"})"),
           std::string(R"({"id":"b","category":"c","label":"maybe","modality":"image","vector":[1]})"),
           std::string(R"({"id":"b","category":"c","label":"real","modality":"audio","vector":[1]})"),
           std::string(R"({"id":"b","category":"c","label":"real","modality":"image","vector":["x"]})"),
           std::string(R"({"id":"a","category":"c","label":"real","modality":"image","vector":[1]})"),
       }) {
    try {
      ParseRecords(good + "\n" + bad + "\n", RecordFormat::kLines);
      ADD_FAILURE() << "accepted: " << bad;
    } catch (const Error& e) {
      EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos) << e.what();
    }
  }
}

TEST(Lines, NonFiniteLiteralIsRejected) {
  const std::string text =
      R"({"id":"a","category":"c","label":"real","modality":"image","vector":[1e39]})";
  EXPECT_THROW(ParseRecords(text, RecordFormat::kLines), Error);
}

TEST(Save, EmptySetHasHeaderOnly) {
  const RecordSet empty(4, "nothing");
  for (RecordFormat f : {RecordFormat::kLines, RecordFormat::kPacked}) {
    const std::string bytes = SerializeRecords(empty, f);
    EXPECT_FALSE(bytes.empty());
    const RecordSet back = ParseRecords(bytes, f);
    EXPECT_EQ(back.size(), 0u);
    EXPECT_EQ(back.dim(), 4u);
  }
  const std::string lines = SerializeRecords(empty, RecordFormat::kLines);
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 1);
}

TEST(Save, RoundTripIsBitExactForBothFormats) {
  TempDir dir;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const RecordSet set = MixedSet(seed, 100, 1 + seed * 13);
    for (RecordFormat f : {RecordFormat::kLines, RecordFormat::kPacked}) {
      const std::string path = dir.File("s" + std::to_string(seed) + std::string(ToString(f)));
      SaveRecords(set, path, f);
      const RecordSet back = LoadRecords(path, f);
      ExpectBitIdentical(set, back);
      if (f == RecordFormat::kLines) EXPECT_EQ(back.provenance(), set.provenance());
      ExpectBitIdentical(set, LoadRecords(path));
    }
  }
}

TEST(Save, BytesAreDeterministic) {
  TempDir dir;
  const RecordSet set = MixedSet(9, 20, 7);
  for (RecordFormat f : {RecordFormat::kLines, RecordFormat::kPacked}) {
    SaveRecords(set, dir.File("a"), f);
    SaveRecords(set, dir.File("b"), f);
    EXPECT_EQ(ReadFile(dir.File("a")), ReadFile(dir.File("b")));
  }
}

TEST(Packed, LayoutMatchesHandEncoding) {
  RecordSet set(2);
  set.Add({"ab", "c", Label::kLookalike, Modality::kText, {1.0f, -2.0f}});
  const std::string bytes = SerializeRecords(set, RecordFormat::kPacked);
  std::string expect = "ROLA1\n";
  auto put = [&](std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) expect.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put(2, 4);
  put(1, 8);
  put(2, 2);
  expect += "ab";
  put(1, 2);
  expect += "c";
  put(1, 1);
  put(1, 1);
  put(0x3f800000u, 4);
  put(0xc0000000u, 4);
  EXPECT_EQ(bytes, expect);
}

TEST(Packed, CorruptionIsDetected) {
  const RecordSet set = MixedSet(4, 3, 5);
  const std::string bytes = SerializeRecords(set, RecordFormat::kPacked);
  EXPECT_THROW(ParseRecords(bytes.substr(0, bytes.size() - 1), RecordFormat::kPacked), Error);
  EXPECT_THROW(ParseRecords(bytes + "x", RecordFormat::kPacked), Error);
  EXPECT_THROW(ParseRecords("ROLA2\n" + bytes.substr(6), RecordFormat::kPacked), Error);
}

TEST(Load, MissingFileIsAnError) {
  EXPECT_THROW(LoadRecords("/nonexistent/dir/x.rola"), Error);
}

TEST(Normalize, HandValueAndErrors) {
  RecordSet set(2);
  set.Add({"a", "c", Label::kReal, Modality::kImage, {3, 4}});
  const RecordSet unit = NormalizeRecords(set, NormalizeMode::kUnit);
  EXPECT_NEAR(unit[0].vector[0], 0.6, 1e-7);
  EXPECT_NEAR(unit[0].vector[1], 0.8, 1e-7);
  EXPECT_EQ(NormalizeRecords(set, NormalizeMode::kNone), set);

  RecordSet zero(3);
  zero.Add({"z", "c", Label::kReal, Modality::kImage, {0, 0, 0}});
  EXPECT_THROW(NormalizeRecords(zero, NormalizeMode::kUnit), Error);
}

TEST(Normalize, UnitIsIdempotentAndUnitNorm) {
  const RecordSet set = MixedSet(5, 50, 16);
  const RecordSet once = NormalizeRecords(set, NormalizeMode::kUnit);
  const RecordSet twice = NormalizeRecords(once, NormalizeMode::kUnit);
  EXPECT_EQ(once.records(), twice.records());
  for (const auto& r : once) EXPECT_NEAR(Norm(r.vector), 1.0, 1e-6);
}

std::map<std::pair<std::string, Label>, std::size_t> StratumCounts(const RecordSet& s) {
  std::map<std::pair<std::string, Label>, std::size_t> m;
  for (const auto& r : s) ++m[{r.category, r.label}];
  return m;
}

TEST(Split, DegenerateFractionsKeepEverythingInTrain) {
  std::mt19937_64 gen(6);
  const RecordSet set = RandomLabeledSet(gen, 3, 4, 2);
  const RecordSplit s = SplitRecords(set, 1, {1.0, 0.0, 0.0});
  EXPECT_EQ(s.train.records(), set.records());
  EXPECT_TRUE(s.val.empty());
  EXPECT_TRUE(s.test.empty());
}

TEST(Split, DeterministicPartitionWithProportionalStrata) {
  std::mt19937_64 gen(7);
  // 100 records: 5 categories x 2 labels x 10.
  const RecordSet set = RandomLabeledSet(gen, 5, 10, 3);
  ASSERT_EQ(set.size(), 100u);
  const std::array<double, 3> f{0.7, 0.1, 0.2};
  const RecordSplit a = SplitRecords(set, 11, f);
  const RecordSplit b = SplitRecords(set, 11, f);
  EXPECT_EQ(a.train.records(), b.train.records());
  EXPECT_EQ(a.val.records(), b.val.records());
  EXPECT_EQ(a.test.records(), b.test.records());

  std::multiset<std::string> ids;
  for (const RecordSet* part : {&a.train, &a.val, &a.test}) {
    for (const auto& r : *part) ids.insert(r.id);
  }
  EXPECT_EQ(ids.size(), set.size());
  for (const auto& r : set) EXPECT_EQ(ids.count(r.id), 1u);

  const auto total = StratumCounts(set);
  const RecordSet* parts[3] = {&a.train, &a.val, &a.test};
  for (int p = 0; p < 3; ++p) {
    const auto counts = StratumCounts(*parts[p]);
    for (const auto& [key, n] : total) {
      const double exact = f[p] * static_cast<double>(n);
      const auto it = counts.find(key);
      const double got = it == counts.end() ? 0.0 : static_cast<double>(it->second);
      EXPECT_LE(std::abs(got - exact), 1.0) << key.first << " part " << p;
    }
  }
  const RecordSplit c = SplitRecords(set, 12, f);
  EXPECT_NE(a.train.records(), c.train.records());
}

TEST(Split, RejectsBadFractionsAndTinyStrata) {
  std::mt19937_64 gen(8);
  const RecordSet set = RandomLabeledSet(gen, 1, 2, 2);
  EXPECT_THROW(SplitRecords(set, 1, {0.5, 0.6, 0.0}), Error);
  EXPECT_THROW(SplitRecords(set, 1, {-0.1, 0.6, 0.5}), Error);
  EXPECT_THROW(SplitRecords(set, 1, {0.4, 0.3, 0.3}), Error);
  EXPECT_NO_THROW(SplitRecords(set, 1, {0.5, 0.5, 0.0}));
}

}  // namespace
}  // namespace rola
