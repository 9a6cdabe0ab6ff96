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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rola/classifiers.h"
#include "rola/direction_estimator.h"
#include "rola/embedding_store.h"

namespace rola {

inline constexpr double kDefaultConfidence = 0.95;

// Fraction of predictions whose label matches truth[id]. Throws Error on an
// empty set or an id without truth.
double Accuracy(const std::vector<Prediction>& predictions,
                const std::map<std::string, Label>& truth);

// Labeled records only.
std::map<std::string, Label> TruthFromRecords(const RecordSet& records);

struct WilsonBounds {
  double lower = 0.0;
  double upper = 1.0;
};

// Two-sided standard normal quantile for `confidence` (1.959964 at 0.95).
double TwoSidedZ(double confidence);

// Wilson score interval. successes == 0 gives lower = 0 and successes == n
// gives upper = 1 exactly; bounds are clamped to [0, 1].
WilsonBounds WilsonInterval(std::size_t successes, std::size_t n,
                            double confidence = kDefaultConfidence);

struct ReportCell {
  std::string scope;  // "overall" | "category"
  std::string name;
  std::size_t n = 0;
  std::size_t successes = 0;
  double accuracy = 0.0;
  std::optional<WilsonBounds> wilson;
};

struct EvalReport {
  ReportCell overall;
  std::vector<ReportCell> per_category;  // sorted by name
  std::string provenance;
};

// Builds overall and per-category cells from aligned records and
// predictions; every record must be labeled. Wilson bounds are attached when
// `confidence` is set.
EvalReport BuildReport(const RecordSet& records, const std::vector<Prediction>& predictions,
                       std::optional<double> confidence, std::string provenance);

// Top-K retrieval judgement for one query: how many of the retrieved items
// carry the intended label.
struct RetrievalCase {
  std::string query_id;
  std::string category;
  Label intended = Label::kReal;
  std::vector<Label> retrieved;
};

// successes = retrieved items with the intended label; n = items retrieved.
EvalReport TopKAccuracyReport(const std::vector<RetrievalCase>& cases,
                              std::optional<double> confidence, std::string provenance);

enum class SweepParam { kTau, kAlpha };

std::string_view ToString(SweepParam p);
SweepParam ParseSweepParam(std::string_view s);

struct SweepRow {
  double value = 0.0;
  std::size_t n = 0;
  std::size_t successes = 0;
  double accuracy = 0.0;
};

struct SweepReport {
  SweepParam param = SweepParam::kAlpha;
  std::vector<SweepRow> rows;  // grid order
  double best_value = 0.0;
  double best_accuracy = 0.0;
  ClassifierConfig config;  // template the grid value was substituted into
};

// tau: -1.00 .. 1.00, alpha: 0.00 .. 1.00, both in steps of 0.01 computed as
// i / 100 (no accumulated rounding).
std::vector<double> DefaultGrid(SweepParam param);

// Parses "start:stop:step" or a comma-separated list.
std::vector<double> ParseGrid(std::string_view text);

// Evaluates `config` with the parameter set to each grid value over the
// labeled dataset. Grid points run in parallel; the argmax breaks ties toward
// the smallest value. Throws Error on an empty, non-increasing or
// out-of-range grid.
SweepReport Sweep(SweepParam param, const std::vector<double>& grid, const ClassifierConfig& config,
                  const RecordSet& dataset, const DirectionSet* dirs, const PromptBank* prompts);

// Leave-one-out evaluation: directions are estimated from `direction_source`
// (defaults to `dataset`), and each category k of `dataset` is classified with
// the direction that excludes k. config.direction_mode is forced to
// leave-one-out. Throws Error when fewer than two categories are usable or a
// category lacks a prompt the method needs.
EvalReport LooProtocol(const RecordSet& dataset, const PromptBank* prompts,
                       const ClassifierConfig& config,
                       std::optional<double> confidence = kDefaultConfidence,
                       const RecordSet* direction_source = nullptr);

// JSON line per cell: scope, name, n, successes, accuracy, wilson_lo,
// wilson_hi, param_name, param_value (nulls when absent).
std::string SerializeReport(const EvalReport& report,
                            std::optional<std::string> param_name = std::nullopt,
                            std::optional<double> param_value = std::nullopt);

// One overall cell per grid value.
std::string SerializeSweep(const SweepReport& report, std::optional<double> confidence);

std::string RenderReportTable(const EvalReport& report);

// Lists every grid row, then a summary line with the columns
// Acc. | <param> | Acc. (<param>-shift): accuracy at the unshifted value
// (alpha = 0, or the row nearest tau = 0), the argmax and its accuracy.
std::string RenderSweepTable(const SweepReport& report);

}  // namespace rola
