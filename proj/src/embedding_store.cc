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

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <utility>

#include "rola/error.h"
#include "rola/io_util.h"
#include "rola/random.h"

namespace rola {
namespace {

constexpr std::string_view kPackedMagic = "ROLA1\n";
constexpr std::string_view kLinesTag = "rola-lines";

std::string RecordPrefix(std::size_t ordinal) {
  return "record " + std::to_string(ordinal) + ": ";
}

// --- packed encoding ------------------------------------------------------

template <typename T>
void PutLE(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

void PutString16(std::string& out, const std::string& s, std::size_t ordinal,
                 const char* field) {
  if (s.size() > 0xffff) {
    throw Error(RecordPrefix(ordinal) + field + " longer than 65535 bytes");
  }
  PutLE<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out += s;
}

class PackedReader {
 public:
  PackedReader(std::string_view bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  template <typename T>
  T Get(const std::string& context) {
    Need(sizeof(T), context);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string GetString16(const std::string& context) {
    const auto len = Get<std::uint16_t>(context);
    Need(len, context);
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }

  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n, const std::string& context) {
    if (bytes_.size() - pos_ < n) {
      throw Error(source_ + ": " + context + "truncated packed data");
    }
  }

  std::string_view bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

std::string SerializePacked(const RecordSet& set) {
  std::string out(kPackedMagic);
  PutLE<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim()));
  PutLE<std::uint64_t>(out, set.size());
  std::size_t ordinal = 0;
  for (const auto& r : set) {
    ++ordinal;
    PutString16(out, r.id, ordinal, "id");
    PutString16(out, r.category, ordinal, "category");
    out.push_back(static_cast<char>(r.label));
    out.push_back(static_cast<char>(r.modality));
    for (float x : r.vector) PutLE<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
  }
  return out;
}

RecordSet ParsePacked(std::string_view bytes, const std::string& source) {
  if (bytes.substr(0, kPackedMagic.size()) != kPackedMagic) {
    throw Error(source + ": missing packed magic");
  }
  PackedReader in(bytes.substr(kPackedMagic.size()), source);
  const auto dim = in.Get<std::uint32_t>("header: ");
  const auto count = in.Get<std::uint64_t>("header: ");
  if (dim == 0) throw Error(source + ": header declares dimension 0");

  RecordSet set(dim, source);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string ctx = RecordPrefix(i + 1);
    EmbeddingRecord r;
    r.id = in.GetString16(ctx);
    r.category = in.GetString16(ctx);
    const auto label = in.Get<std::uint8_t>(ctx);
    const auto modality = in.Get<std::uint8_t>(ctx);
    if (label > 2) throw Error(source + ": " + ctx + "bad label code " + std::to_string(label));
    if (modality > 1) {
      throw Error(source + ": " + ctx + "bad modality code " + std::to_string(modality));
    }
    r.label = static_cast<Label>(label);
    r.modality = static_cast<Modality>(modality);
    r.vector.resize(dim);
    for (auto& x : r.vector) x = std::bit_cast<float>(in.Get<std::uint32_t>(ctx));
    try {
      set.Add(std::move(r));
    } catch (const Error& e) {
      throw Error(source + ": " + e.what());
    }
  }
  if (!in.AtEnd()) throw Error(source + ": trailing bytes after " + std::to_string(count) + " records");
  return set;
}

// --- line encoding --------------------------------------------------------

std::string SerializeLines(const RecordSet& set) {
  FloatJson header = {{"format", kLinesTag},
                      {"dim", set.dim()},
                      {"count", set.size()},
                      {"provenance", set.provenance()}};
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& r : set) {
    FloatJson j;
    j["id"] = r.id;
    j["category"] = r.category;
    j["label"] = r.label == Label::kUnlabeled ? FloatJson(nullptr)
                                              : FloatJson(std::string(ToString(r.label)));
    j["modality"] = std::string(ToString(r.modality));
    j["vector"] = r.vector;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

EmbeddingRecord RecordFromJson(const FloatJson& j, const std::string& ctx) {
  if (!j.is_object()) throw Error(ctx + "expected a JSON object");
  for (const char* key : {"id", "category", "modality", "vector"}) {
    if (!j.contains(key)) throw Error(ctx + "missing key '" + key + "'");
  }
  EmbeddingRecord r;
  if (!j["id"].is_string() || !j["category"].is_string() || !j["modality"].is_string()) {
    throw Error(ctx + "id, category and modality must be strings");
  }
  r.id = j["id"].get<std::string>();
  r.category = j["category"].get<std::string>();
  const auto modality = j["modality"].get<std::string>();
  if (modality == "image") {
    r.modality = Modality::kImage;
  } else if (modality == "text") {
    r.modality = Modality::kText;
  } else {
    throw Error(ctx + "unknown modality '" + modality + "'");
  }
  if (!j.contains("label") || j["label"].is_null()) {
    r.label = Label::kUnlabeled;
  } else if (j["label"].is_string()) {
    try {
      r.label = ParseLabel(j["label"].get<std::string>());
    } catch (const Error& e) {
      throw Error(ctx + e.what());
    }
  } else {
    throw Error(ctx + "label must be a string or null");
  }
  const auto& vec = j["vector"];
  if (!vec.is_array() || vec.empty()) throw Error(ctx + "vector must be a nonempty array");
  r.vector.reserve(vec.size());
  for (const auto& x : vec) {
    if (!x.is_number()) throw Error(ctx + "vector holds a non-numeric entry");
    r.vector.push_back(x.get<float>());
  }
  return r;
}

RecordSet ParseLines(std::string_view bytes, const std::string& source) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < bytes.size();) {
    std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) nl = bytes.size();
    auto line = bytes.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    pos = nl + 1;
  }

  std::size_t first = 0;
  std::size_t dim = 0;
  std::string provenance = source;
  std::optional<std::size_t> declared_count;
  if (!lines.empty()) {
    FloatJson head;
    try {
      head = FloatJson::parse(lines[0]);
    } catch (const std::exception&) {
      throw Error(source + ": " + RecordPrefix(1) + "malformed JSON");
    }
    if (head.is_object() && head.contains("format")) {
      if (head["format"] != kLinesTag) throw Error(source + ": unknown header format");
      if (!head.contains("dim") || !head["dim"].is_number_unsigned() || head["dim"].get<std::size_t>() == 0) {
        throw Error(source + ": header needs a positive integer dim");
      }
      dim = head["dim"].get<std::size_t>();
      if (head.contains("provenance") && head["provenance"].is_string()) {
        provenance = head["provenance"].get<std::string>();
      }
      if (head.contains("count") && head["count"].is_number_unsigned()) {
        declared_count = head["count"].get<std::size_t>();
      }
      first = 1;
    }
  }
  if (first == 0 && lines.empty()) throw Error(source + ": empty file without header");

  std::optional<RecordSet> set;
  if (dim > 0) set.emplace(dim, provenance);
  for (std::size_t i = first; i < lines.size(); ++i) {
    const std::size_t ordinal = i - first + 1;
    const std::string ctx = source + ": " + RecordPrefix(ordinal);
    FloatJson j;
    try {
      j = FloatJson::parse(lines[i]);
    } catch (const std::exception&) {
      throw Error(ctx + "malformed JSON");
    }
    auto record = RecordFromJson(j, ctx);
    if (!set) set.emplace(record.vector.size(), provenance);
    try {
      set->Add(std::move(record));
    } catch (const Error& e) {
      throw Error(source + ": " + e.what());
    }
  }
  if (declared_count && *declared_count != set->size()) {
    throw Error(source + ": header declares " + std::to_string(*declared_count) +
                " records, found " + std::to_string(set->size()));
  }
  return std::move(*set);
}

// Largest-remainder allocation of n items over fractions, then every nonzero
// fraction left empty takes one item from the part with the largest surplus
// over its quota that can spare it.
std::array<std::size_t, 3> Allocate(std::size_t n, const std::array<double, 3>& f) {
  std::array<std::size_t, 3> alloc{};
  std::array<double, 3> quota{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    quota[i] = f[i] * static_cast<double>(n);
    alloc[i] = static_cast<std::size_t>(std::floor(quota[i]));
    assigned += alloc[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return quota[a] - alloc[a] > quota[b] - alloc[b];
  });
  for (int idx = 0; assigned < n; idx = (idx + 1) % 3) {
    if (f[order[idx]] > 0.0) {
      ++alloc[order[idx]];
      ++assigned;
    }
  }
  while (assigned > n) {  // floor() of rounded products can overshoot by one
    for (int i : order) {
      if (alloc[i] > 0) {
        --alloc[i];
        --assigned;
        break;
      }
    }
  }
  for (int i = 0; i < 3; ++i) {
    if (f[i] <= 0.0 || alloc[i] > 0) continue;
    int donor = -1;
    for (int j = 0; j < 3; ++j) {
      if (alloc[j] < 2) continue;
      if (donor < 0 || alloc[j] - quota[j] > alloc[donor] - quota[donor]) donor = j;
    }
    if (donor < 0) throw Error("cannot give every split a record");
    --alloc[donor];
    ++alloc[i];
  }
  return alloc;
}

}  // namespace

std::string_view ToString(Label label) {
  switch (label) {
    case Label::kReal: return "real";
    case Label::kLookalike: return "lookalike";
    case Label::kUnlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::string_view ToString(Modality modality) {
  return modality == Modality::kImage ? "image" : "text";
}

std::string_view ToString(RecordFormat format) {
  return format == RecordFormat::kLines ? "lines" : "packed";
}

std::string_view ToString(NormalizeMode mode) {
  return mode == NormalizeMode::kNone ? "none" : "unit";
}

Label ParseLabel(std::string_view s) {
  if (s == "real") return Label::kReal;
  if (s == "lookalike") return Label::kLookalike;
  if (s == "unlabeled") return Label::kUnlabeled;
  throw Error("unknown label '" + std::string(s) + "'");
}

RecordFormat ParseRecordFormat(std::string_view s) {
  if (s == "lines") return RecordFormat::kLines;
  if (s == "packed") return RecordFormat::kPacked;
  throw Error("unknown record format '" + std::string(s) + "'");
}

NormalizeMode ParseNormalizeMode(std::string_view s) {
  if (s == "none") return NormalizeMode::kNone;
  if (s == "unit") return NormalizeMode::kUnit;
  throw Error("unknown normalize mode '" + std::string(s) + "'");
}

RecordSet::RecordSet(std::size_t dim, std::string provenance)
    : dim_(dim), provenance_(std::move(provenance)) {
  if (dim_ == 0) throw Error("record set dimension must be positive");
}

void RecordSet::Add(EmbeddingRecord record) {
  const std::string ctx = RecordPrefix(records_.size() + 1);
  if (record.vector.size() != dim_) {
    throw Error(ctx + "dimension mismatch (expected " + std::to_string(dim_) +
                ", got " + std::to_string(record.vector.size()) + ")");
  }
  if (!AllFinite(record.vector)) throw Error(ctx + "non-finite component");
  if (by_id_.contains(record.id)) throw Error(ctx + "duplicate id '" + record.id + "'");
  by_id_.emplace(record.id, records_.size());
  records_.push_back(std::move(record));
}

const EmbeddingRecord* RecordSet::Find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::size_t RecordSet::Count(std::string_view category, Label label,
                             Modality modality) const {
  return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [&](const auto& r) {
    return r.category == category && r.label == label && r.modality == modality;
  }));
}

std::vector<std::string> RecordSet::Categories() const {
  std::set<std::string> names;
  for (const auto& r : records_) names.insert(r.category);
  return {names.begin(), names.end()};
}

std::string SerializeRecords(const RecordSet& set, RecordFormat format) {
  return format == RecordFormat::kPacked ? SerializePacked(set) : SerializeLines(set);
}

RecordSet ParseRecords(std::string_view bytes, RecordFormat format,
                       const std::string& source) {
  return format == RecordFormat::kPacked ? ParsePacked(bytes, source)
                                         : ParseLines(bytes, source);
}

RecordFormat DetectFormat(std::string_view bytes) {
  return bytes.substr(0, kPackedMagic.size()) == kPackedMagic ? RecordFormat::kPacked
                                                              : RecordFormat::kLines;
}

RecordSet LoadRecords(const std::string& path, RecordFormat format) {
  return ParseRecords(ReadFile(path), format, path);
}

RecordSet LoadRecords(const std::string& path) {
  const std::string bytes = ReadFile(path);
  return ParseRecords(bytes, DetectFormat(bytes), path);
}

void SaveRecords(const RecordSet& set, const std::string& path, RecordFormat format) {
  WriteFileAtomic(path, SerializeRecords(set, format));
}

RecordSet NormalizeRecords(const RecordSet& set, NormalizeMode mode) {
  if (mode == NormalizeMode::kNone) return set;
  RecordSet out(set.dim(), set.provenance() + " | normalize=unit");
  std::size_t ordinal = 0;
  for (const auto& r : set) {
    ++ordinal;
    const double n = Norm(r.vector);
    if (n == 0.0) {
      throw Error(RecordPrefix(ordinal) + "zero-norm vector '" + r.id + "' cannot be unit-normalized");
    }
    EmbeddingRecord copy = r;
    if (std::abs(n - 1.0) > 1e-6) copy.vector = Normalized(r.vector);
    out.Add(std::move(copy));
  }
  return out;
}

RecordSplit SplitRecords(const RecordSet& set, std::uint64_t seed,
                         const std::array<double, 3>& fractions) {
  double total = 0.0;
  std::size_t nonzero = 0;
  for (double f : fractions) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw Error("split fractions must be nonnegative");
    total += f;
    nonzero += f > 0.0 ? 1 : 0;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("split fractions must sum to 1");

  // Strata in order of first appearance.
  std::vector<std::pair<std::string, Label>> keys;
  std::map<std::pair<std::string, Label>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto key = std::make_pair(set[i].category, set[i].label);
    auto [it, inserted] = strata.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back(i);
  }

  Random rng(seed);
  std::vector<int> part(set.size(), 0);
  for (const auto& key : keys) {
    auto& members = strata[key];
    if (members.size() < nonzero) {
      throw Error("stratum (" + key.first + ", " + std::string(ToString(key.second)) + ") has " +
                  std::to_string(members.size()) + " records, fewer than the " +
                  std::to_string(nonzero) + " nonzero split fractions");
    }
    rng.Shuffle(members);
    const auto alloc = Allocate(members.size(), fractions);
    std::size_t pos = 0;
    for (int p = 0; p < 3; ++p) {
      for (std::size_t c = 0; c < alloc[p]; ++c) part[members[pos++]] = p;
    }
  }

  const std::string base = set.provenance() + " | split seed=" + std::to_string(seed);
  RecordSplit out{RecordSet(set.dim(), base + " part=train"),
                  RecordSet(set.dim(), base + " part=val"),
                  RecordSet(set.dim(), base + " part=test")};
  for (std::size_t i = 0; i < set.size(); ++i) {
    RecordSet& dst = part[i] == 0 ? out.train : part[i] == 1 ? out.val : out.test;
    dst.Add(set[i]);
  }
  return out;
}

}  // namespace rola
