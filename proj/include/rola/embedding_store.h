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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rola/geometry.h"

namespace rola {

enum class Label : std::uint8_t { kReal = 0, kLookalike = 1, kUnlabeled = 2 };
enum class Modality : std::uint8_t { kImage = 0, kText = 1 };
enum class RecordFormat { kLines, kPacked };
enum class NormalizeMode { kNone, kUnit };

std::string_view ToString(Label label);
std::string_view ToString(Modality modality);
std::string_view ToString(RecordFormat format);
std::string_view ToString(NormalizeMode mode);
Label ParseLabel(std::string_view s);
RecordFormat ParseRecordFormat(std::string_view s);
NormalizeMode ParseNormalizeMode(std::string_view s);
inline Label Opposite(Label label) {
  return label == Label::kReal ? Label::kLookalike : Label::kReal;
}

struct EmbeddingRecord {
  std::string id;
  std::string category;
  Label label = Label::kUnlabeled;
  Modality modality = Modality::kImage;
  Vector vector;

  bool operator==(const EmbeddingRecord&) const = default;
};

// An ordered, validated collection of records sharing one dimension.
// Records are appended through Add() while building; loaded sets are treated
// as immutable and may be shared read-only across threads.
class RecordSet {
 public:
  explicit RecordSet(std::size_t dim, std::string provenance = {});

  // Validates the dimension, finiteness and id uniqueness of `record`.
  // Errors name the record's 1-based position in the set.
  void Add(EmbeddingRecord record);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::string& provenance() const { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }

  const std::vector<EmbeddingRecord>& records() const { return records_; }
  const EmbeddingRecord& operator[](std::size_t i) const { return records_[i]; }
  auto begin() const { return records_.begin(); }
  auto end() const { return records_.end(); }

  const EmbeddingRecord* Find(std::string_view id) const;

  // Number of records with the given category, label and modality
  // (N_k for real images, M_k for lookalike images).
  std::size_t Count(std::string_view category, Label label,
                    Modality modality = Modality::kImage) const;

  // Distinct categories, sorted lexicographically.
  std::vector<std::string> Categories() const;

  bool operator==(const RecordSet& other) const {
    return dim_ == other.dim_ && records_ == other.records_ &&
           provenance_ == other.provenance_;
  }

 private:
  std::size_t dim_;
  std::string provenance_;
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Line format: an optional header object
//   {"count":N,"dim":D,"format":"rola-lines","provenance":"..."}
// followed by one JSON object per record with keys category, id, label
// ("real" | "lookalike" | null), modality ("image" | "text") and vector.
// Without a header the dimension is taken from the first record.
//
// Packed format (all integers little-endian):
//   "ROLA1\n" | u32 dim | u64 count | count x record
//   record = u16 len + id | u16 len + category | u8 label | u8 modality |
//            dim x IEEE-754 binary32
std::string SerializeRecords(const RecordSet& set, RecordFormat format);
RecordSet ParseRecords(std::string_view bytes, RecordFormat format,
                       const std::string& source = "<memory>");

// Sniffs the packed magic; anything else is treated as the line format.
RecordFormat DetectFormat(std::string_view bytes);

RecordSet LoadRecords(const std::string& path, RecordFormat format);
RecordSet LoadRecords(const std::string& path);
void SaveRecords(const RecordSet& set, const std::string& path,
                 RecordFormat format);

// kUnit rescales every vector to unit norm. Vectors already within 1e-6 of
// unit norm are kept bit-for-bit, which makes the operation idempotent.
RecordSet NormalizeRecords(const RecordSet& set, NormalizeMode mode);

struct RecordSplit {
  RecordSet train;
  RecordSet val;
  RecordSet test;
};

// Stratified by (category, label). Within each stratum the records are
// shuffled with the seed and allocated by largest remainder, with every
// nonzero fraction receiving at least one record. Outputs keep input order.
RecordSplit SplitRecords(const RecordSet& set, std::uint64_t seed,
                         const std::array<double, 3>& fractions);

}  // namespace rola
