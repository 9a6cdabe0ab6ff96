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

#include "rola/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <boost/math/distributions/normal.hpp>

#include "json.hpp"
#include "rola/error.h"
#include "rola/parallel.h"

namespace rola {
namespace {

ReportCell MakeCell(std::string scope, std::string name, std::size_t n, std::size_t successes,
                    std::optional<double> confidence) {
  ReportCell c;
  c.scope = std::move(scope);
  c.name = std::move(name);
  c.n = n;
  c.successes = successes;
  c.accuracy = n == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(n);
  if (confidence && n > 0) c.wilson = WilsonInterval(successes, n, *confidence);
  return c;
}

EvalReport ReportFromCounts(const std::map<std::string, std::pair<std::size_t, std::size_t>>& counts,
                            std::optional<double> confidence, std::string provenance) {
  std::size_t n = 0;
  std::size_t ok = 0;
  EvalReport report;
  for (const auto& [name, c] : counts) {
    report.per_category.push_back(MakeCell("category", name, c.first, c.second, confidence));
    n += c.first;
    ok += c.second;
  }
  if (n == 0) throw Error("nothing to evaluate");
  report.overall = MakeCell("overall", "overall", n, ok, confidence);
  report.provenance = std::move(provenance);
  return report;
}

// Image-modality records, each required to carry a label.
RecordSet LabeledImages(const RecordSet& dataset) {
  RecordSet out(dataset.dim(), dataset.provenance());
  for (const auto& r : dataset) {
    if (r.modality != Modality::kImage) continue;
    if (r.label == Label::kUnlabeled) {
      throw Error("record '" + r.id + "' has no real/lookalike label to evaluate against");
    }
    out.Add(r);
  }
  if (out.empty()) throw Error("dataset has no image records");
  return out;
}

std::string FormatBounds(const std::optional<WilsonBounds>& w) {
  if (!w) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "[%.3f, %.3f]", w->lower, w->upper);
  return buf;
}

nlohmann::ordered_json CellJson(const ReportCell& c, const std::optional<std::string>& param_name,
                                std::optional<double> param_value) {
  using J = nlohmann::ordered_json;
  J j;
  j["scope"] = c.scope;
  j["name"] = c.name;
  j["n"] = c.n;
  j["successes"] = c.successes;
  j["accuracy"] = c.accuracy;
  j["wilson_lo"] = c.wilson ? J(c.wilson->lower) : J(nullptr);
  j["wilson_hi"] = c.wilson ? J(c.wilson->upper) : J(nullptr);
  j["param_name"] = param_name ? J(*param_name) : J(nullptr);
  j["param_value"] = param_value ? J(*param_value) : J(nullptr);
  return j;
}

}  // namespace

double Accuracy(const std::vector<Prediction>& predictions,
                const std::map<std::string, Label>& truth) {
  if (predictions.empty()) throw Error("accuracy of an empty prediction set");
  std::size_t correct = 0;
  for (const auto& p : predictions) {
    auto it = truth.find(p.id);
    if (it == truth.end()) throw Error("no truth label for '" + p.id + "'");
    correct += p.predicted == it->second ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

std::map<std::string, Label> TruthFromRecords(const RecordSet& records) {
  std::map<std::string, Label> truth;
  for (const auto& r : records) {
    if (r.label != Label::kUnlabeled) truth.emplace(r.id, r.label);
  }
  return truth;
}

double TwoSidedZ(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw Error("confidence must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(),
                               1.0 - (1.0 - confidence) / 2.0);
}

WilsonBounds WilsonInterval(std::size_t successes, std::size_t n, double confidence) {
  if (n == 0) throw Error("wilson interval needs n >= 1");
  if (successes > n) throw Error("wilson interval: successes exceed n");
  const double z = TwoSidedZ(confidence);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  WilsonBounds w{std::clamp(center - half, 0.0, 1.0), std::clamp(center + half, 0.0, 1.0)};
  if (successes == 0) w.lower = 0.0;
  if (successes == n) w.upper = 1.0;
  return w;
}

EvalReport BuildReport(const RecordSet& records, const std::vector<Prediction>& predictions,
                       std::optional<double> confidence, std::string provenance) {
  if (records.size() != predictions.size()) throw Error("predictions do not align with records");
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].label == Label::kUnlabeled) {
      throw Error("record '" + records[i].id + "' has no label to evaluate against");
    }
    auto& c = counts[records[i].category];
    ++c.first;
    c.second += predictions[i].predicted == records[i].label ? 1 : 0;
  }
  return ReportFromCounts(counts, confidence, std::move(provenance));
}

EvalReport TopKAccuracyReport(const std::vector<RetrievalCase>& cases,
                              std::optional<double> confidence, std::string provenance) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& c : cases) {
    auto& cell = counts[c.category];
    cell.first += c.retrieved.size();
    cell.second += static_cast<std::size_t>(
        std::count(c.retrieved.begin(), c.retrieved.end(), c.intended));
  }
  return ReportFromCounts(counts, confidence, std::move(provenance));
}

std::string_view ToString(SweepParam p) { return p == SweepParam::kTau ? "tau" : "alpha"; }

SweepParam ParseSweepParam(std::string_view s) {
  if (s == "tau") return SweepParam::kTau;
  if (s == "alpha") return SweepParam::kAlpha;
  throw Error("unknown sweep parameter '" + std::string(s) + "'");
}

std::vector<double> DefaultGrid(SweepParam param) {
  std::vector<double> grid;
  const int lo = param == SweepParam::kTau ? -100 : 0;
  for (int i = lo; i <= 100; ++i) grid.push_back(i / 100.0);
  return grid;
}

std::vector<double> ParseGrid(std::string_view text) {
  auto number = [&](std::string_view s) {
    try {
      std::size_t used = 0;
      const std::string str(s);
      const double v = std::stod(str, &used);
      if (used != str.size()) throw Error("");
      return v;
    } catch (const std::exception&) {
      throw Error("bad grid value '" + std::string(s) + "'");
    }
  };
  std::vector<double> grid;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos) throw Error("grid range needs start:stop:step");
    const double start = number(text.substr(0, a));
    const double stop = number(text.substr(a + 1, b - a - 1));
    const double step = number(text.substr(b + 1));
    if (!(step > 0.0)) throw Error("grid step must be positive");
    for (std::size_t i = 0;; ++i) {
      const double v = std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9;
      if (v > stop + 1e-9) break;
      grid.push_back(v);
    }
    return grid;
  }
  for (std::size_t pos = 0; pos <= text.size();) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    grid.push_back(number(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return grid;
}

SweepReport Sweep(SweepParam param, const std::vector<double>& grid, const ClassifierConfig& config,
                  const RecordSet& dataset, const DirectionSet* dirs, const PromptBank* prompts) {
  if (grid.empty()) throw Error("sweep grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = grid[i];
    const bool legal = param == SweepParam::kTau ? (v >= -1.0 && v <= 1.0) : (v >= 0.0 && v <= 1.0);
    if (!legal) throw Error("grid value " + std::to_string(v) + " outside the legal range of " +
                            std::string(ToString(param)));
    if (i > 0 && !(grid[i] > grid[i - 1])) throw Error("sweep grid must be strictly increasing");
  }
  const RecordSet images = LabeledImages(dataset);

  SweepReport report;
  report.param = param;
  report.config = config;
  report.rows.resize(grid.size());
  ParallelFor(grid.size(), [&](std::size_t g) {
    ClassifierConfig cfg = config;
    (param == SweepParam::kTau ? cfg.tau : cfg.alpha) = grid[g];
    cfg.Validate();
    SweepRow row{grid[g], images.size(), 0, 0.0};
    for (const auto& r : images) {
      row.successes += ClassifyRecord(r, cfg, dirs, prompts).predicted == r.label ? 1 : 0;
    }
    row.accuracy = static_cast<double>(row.successes) / static_cast<double>(row.n);
    report.rows[g] = row;
  });
  const auto best = std::max_element(report.rows.begin(), report.rows.end(),
                                     [](const SweepRow& a, const SweepRow& b) {
                                       return a.accuracy < b.accuracy;  // first max wins
                                     });
  report.best_value = best->value;
  report.best_accuracy = best->accuracy;
  return report;
}

EvalReport LooProtocol(const RecordSet& dataset, const PromptBank* prompts,
                       const ClassifierConfig& config, std::optional<double> confidence,
                       const RecordSet* direction_source) {
  ClassifierConfig cfg = config;
  cfg.direction_mode = DirectionMode::kLeaveOneOut;
  cfg.Validate();
  if (cfg.UsesPrompts() && prompts == nullptr) {
    throw Error(std::string(ToString(cfg.method)) + " needs prompts");
  }
  const DirectionSet dirs = EstimateDirections(direction_source ? *direction_source : dataset);
  if (dirs.num_categories() < 2) {
    throw Error("leave-one-out evaluation needs at least 2 usable categories, found " +
                std::to_string(dirs.num_categories()));
  }
  const RecordSet images = LabeledImages(dataset);
  if (cfg.UsesPrompts()) {
    for (const auto& name : images.Categories()) {
      for (PromptRole role : {PromptRole::kReal, PromptRole::kLookalike}) {
        const bool needed = cfg.method != Method::kSinglePrompt || role == cfg.prompt_role;
        if (needed && !prompts->Has(name, role)) {
          throw Error("category '" + name + "' has no " + std::string(ToString(role)) + " prompt");
        }
      }
    }
  }
  const auto predictions = ClassifyRecords(images, cfg, &dirs, prompts);
  return BuildReport(images, predictions, confidence, ConfigSnapshot(cfg));
}

std::string SerializeReport(const EvalReport& report, std::optional<std::string> param_name,
                            std::optional<double> param_value) {
  std::string out = CellJson(report.overall, param_name, param_value).dump() + "\n";
  for (const auto& c : report.per_category) {
    out += CellJson(c, param_name, param_value).dump() + "\n";
  }
  return out;
}

std::string SerializeSweep(const SweepReport& report, std::optional<double> confidence) {
  std::string out;
  const std::string name(ToString(report.param));
  for (const auto& row : report.rows) {
    const auto cell = MakeCell("overall", "overall", row.n, row.successes, confidence);
    out += CellJson(cell, name, row.value).dump() + "\n";
  }
  return out;
}

std::string RenderReportTable(const EvalReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-24s %8s %10s %9s  %s\n", "scope", "name", "n",
                "successes", "accuracy", "wilson");
  out += line;
  auto row = [&](const ReportCell& c) {
    std::snprintf(line, sizeof line, "%-10s %-24s %8zu %10zu %9.4f  %s\n", c.scope.c_str(),
                  c.name.c_str(), c.n, c.successes, c.accuracy, FormatBounds(c.wilson).c_str());
    out += line;
  };
  for (const auto& c : report.per_category) row(c);
  row(report.overall);
  return out;
}

std::string RenderSweepTable(const SweepReport& report) {
  const std::string name(ToString(report.param));
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%8s %8s %10s %9s\n", name.c_str(), "n", "successes", "accuracy");
  out += line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%8.2f %8zu %10zu %9.4f\n", r.value, r.n, r.successes,
                  r.accuracy);
    out += line;
  }
  const auto base = std::min_element(report.rows.begin(), report.rows.end(),
                                     [](const SweepRow& a, const SweepRow& b) {
                                       return std::abs(a.value) < std::abs(b.value);
                                     });
  const std::string shifted = "Acc. (" + name + "-shift)";
  std::snprintf(line, sizeof line, "\n%-8s %-8s %s\n", "Acc.", name.c_str(), shifted.c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-8.4f %-8.2f %.4f\n", base->accuracy, report.best_value,
                report.best_accuracy);
  out += line;
  return out;
}

}  // namespace rola
