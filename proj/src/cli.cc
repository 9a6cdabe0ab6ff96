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

#include "rola/cli.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rola/classifiers.h"
#include "rola/direction_estimator.h"
#include "rola/embedding_store.h"
#include "rola/error.h"
#include "rola/evaluation.h"
#include "rola/io_util.h"
#include "rola/parallel.h"
#include "rola/retrieval.h"
#include "rola/synth_corpus.h"

namespace rola::cli {
namespace {

using Json = nlohmann::ordered_json;

struct Options {
  std::string train;
  std::string images;
  std::string prompts;
  std::string corpus;
  std::string directions;
  std::string predictions;
  std::string truth;
  std::string out;

  std::string method = "direction_only";
  double alpha = 0.0;
  double tau = 0.22;
  std::string sign = "auto";
  std::string scoring = "cosine";
  std::string prompt_role = "real";
  bool loo = false;
  bool global = false;
  bool per_category = false;
  std::string real_template;
  std::string lookalike_template;

  std::size_t k = 5;
  double step = 0.01;
  std::size_t max_changes = 3;
  double alpha_budget = 1.0;
  bool same_category = false;
  std::string backend = "exact";

  std::string normalize = "none";
  std::uint64_t seed = 42;
  std::string format = "lines";
  double confidence = kDefaultConfidence;
  std::string param;
  std::string grid;

  std::size_t categories = 16;
  std::size_t per_label = 25;
  std::size_t dim = 64;
  double noise = 0.3;
  double offset_norm = 1.0;
  double spread = 1.0;
  std::string offset_mode = "shared";
  std::size_t templates = 2;
  double prompt_signal = 0.25;
  double prompt_noise = 1.0;
  double text_gap = 1.0;
};

// ---------------------------------------------------------------- flags

void AddNormalize(CLI::App* app, Options& o) {
  app->add_option("--normalize", o.normalize, "Rescale input vectors before use: none | unit")
      ->check(CLI::IsMember({"none", "unit"}));
}

void AddDirectionMode(CLI::App* app, Options& o) {
  auto* loo = app->add_flag("--loo", o.loo,
                            "Use the leave-one-out direction: mean of the other categories' "
                            "d_k (default mode)");
  auto* global = app->add_flag("--global", o.global, "Use the mean of all categories' d_k");
  auto* per = app->add_flag("--per-category", o.per_category,
                            "Use the record's own category difference d_k");
  loo->excludes(global)->excludes(per);
  global->excludes(per);
}

CLI::Option* AddDirectionSource(CLI::App* app, Options& o) {
  auto* dirs = app->add_option("--directions", o.directions, "Directions file from `estimate`");
  auto* train = app->add_option("--train", o.train,
                                "Estimate directions from this labeled RecordSet instead");
  dirs->excludes(train);
  return dirs;
}

void AddClassifier(CLI::App* app, Options& o) {
  app->add_option("--method", o.method,
                  "pair: lookalike iff s(e,p_look) > s(e,p_real). "
                  "direction_only: lookalike iff cos(e,d) >= tau. "
                  "shifted_pair: pair rule on (1-alpha)p + sign*alpha*d. "
                  "single_prompt: cos(e,(1-alpha)p + sign*alpha*d) >= tau gives the prompt's label")
      ->check(CLI::IsMember({"pair", "pair_baseline", "direction_only", "shifted_pair",
                             "single_prompt"}));
  app->add_option("--alpha", o.alpha, "Convex mixing weight of the direction, in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--tau", o.tau, "Decision threshold for direction_only and single_prompt")
      ->check(CLI::Range(-1.0, 1.0));
  app->add_option("--sign", o.sign,
                  "Shift sign of the real prompt (shifted_pair; lookalike takes the opposite) or "
                  "of the chosen prompt (single_prompt). auto: shifted_pair real -, "
                  "single_prompt real + / lookalike -")
      ->check(CLI::IsMember({"auto", "+", "-"}));
  app->add_option("--scoring", o.scoring, "Prompt similarity for pair methods: cosine | dot")
      ->check(CLI::IsMember({"cosine", "dot"}));
  app->add_option("--prompt-role", o.prompt_role, "Prompt used by single_prompt: real | lookalike")
      ->check(CLI::IsMember({"real", "lookalike"}));
  app->add_option("--real-template", o.real_template,
                  "Template name selecting real prompts (prompt id up to the last '|')");
  app->add_option("--lookalike-template", o.lookalike_template,
                  "Template name selecting lookalike prompts");
  AddDirectionMode(app, o);
}

void AddShift(CLI::App* app, Options& o, double alpha_default) {
  o.alpha = alpha_default;
  app->add_option("--alpha", o.alpha, "Additive shift size: query = e + sign*alpha*d")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--sign", o.sign, "Shift sign; + moves toward lookalike, - toward real. "
                                    "auto means +")
      ->check(CLI::IsMember({"auto", "+", "-"}));
  AddDirectionMode(app, o);
}

void AddSearch(CLI::App* app, Options& o) {
  app->add_option("--corpus", o.corpus, "RecordSet to search")->required();
  auto* images = app->add_option("--images", o.images, "Query vectors (image records)");
  auto* prompts = app->add_option("--prompts", o.prompts, "Query vectors (prompt records)");
  images->excludes(prompts);
  app->add_flag("--same-category", o.same_category,
                "Only consider corpus records of the query's category");
  app->add_option("--backend", o.backend, "exact | approximate (HNSW)")
      ->check(CLI::IsMember({"exact", "approximate", "ann", "hnsw"}));
  app->add_option("--seed", o.seed, "HNSW level seed");
}

// ---------------------------------------------------------------- helpers

RecordSet LoadInput(const std::string& path, const Options& o) {
  return NormalizeRecords(LoadRecords(path), ParseNormalizeMode(o.normalize));
}

void Emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    WriteFileAtomic(path, text);
  }
}

void LogWarnings(const DirectionSet& dirs, std::ostream& err) {
  for (const auto& w : dirs.warnings) err << "rola: warning: " << w << "\n";
}

std::optional<DirectionSet> Directions(const Options& o, std::ostream& err) {
  std::optional<DirectionSet> dirs;
  if (!o.directions.empty()) dirs = LoadDirections(o.directions);
  if (!o.train.empty()) dirs = EstimateDirections(LoadInput(o.train, o));
  if (dirs) LogWarnings(*dirs, err);
  return dirs;
}

DirectionMode Mode(const Options& o) {
  if (o.global) return DirectionMode::kGlobal;
  if (o.per_category) return DirectionMode::kPerCategory;
  return DirectionMode::kLeaveOneOut;
}

Sign ShiftSign(const Options& o) { return o.sign == "-" ? Sign::kMinus : Sign::kPlus; }

ClassifierConfig ResolveConfig(const Options& o) {
  ClassifierConfig c;
  c.method = ParseMethod(o.method);
  c.alpha = o.alpha;
  c.tau = o.tau;
  c.scoring = ParseScoring(o.scoring);
  c.prompt_role = ParsePromptRole(o.prompt_role);
  c.direction_mode = Mode(o);
  if (o.sign != "auto") {
    const Sign s = ShiftSign(o);
    if (c.method == Method::kShiftedPair) {
      c.sign_real = s;
      c.sign_lookalike = Flip(s);
    } else if (c.method == Method::kSinglePrompt) {
      (c.prompt_role == PromptRole::kReal ? c.sign_real : c.sign_lookalike) = s;
    }
  }
  try {
    c.Validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return c;
}

std::optional<PromptBank> Prompts(const Options& o, const ClassifierConfig& c) {
  if (!c.UsesPrompts()) return std::nullopt;
  if (o.prompts.empty()) {
    throw UsageError("--method " + std::string(ToString(c.method)) + " needs --prompts");
  }
  auto pick = [](const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::string>(s);
  };
  return PromptBank::FromRecords(LoadInput(o.prompts, o), pick(o.real_template),
                                 pick(o.lookalike_template));
}

void CheckConfidence(double c) {
  if (!(c > 0.0 && c < 1.0)) throw UsageError("--confidence must lie in (0, 1)");
}

Json ResolvedFlags(const CLI::App& sub) {
  Json flags = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt == sub.get_help_ptr() || opt->get_lnames().empty()) continue;
    const std::string& key = opt->get_lnames().front();
    if (opt->get_type_size() == 0) {
      flags[key] = opt->count() > 0;
    } else if (opt->count() > 0) {
      flags[key] = opt->results().back();
    } else if (!opt->get_default_str().empty()) {
      flags[key] = opt->get_default_str();
    } else {
      flags[key] = nullptr;
    }
  }
  return flags;
}

// ---------------------------------------------------------------- commands

int Estimate(const Options& o, std::ostream&, std::ostream& err) {
  const DirectionSet dirs = EstimateDirections(LoadInput(o.train, o));
  LogWarnings(dirs, err);
  SaveDirections(dirs, o.out);
  err << "rola: estimated directions for " << dirs.num_categories() << " categories -> " << o.out
      << "\n";
  return 0;
}

int Classify(const Options& o, std::ostream& out, std::ostream& err) {
  const ClassifierConfig cfg = ResolveConfig(o);
  err << "rola: classifier " << ConfigSnapshot(cfg) << "\n";
  const auto dirs = Directions(o, err);
  if (cfg.UsesDirection() && !dirs) {
    throw UsageError("--method " + std::string(ToString(cfg.method)) +
                     " needs --directions or --train");
  }
  const auto bank = Prompts(o, cfg);
  const RecordSet images = LoadInput(o.images, o);
  const auto preds = ClassifyRecords(images, cfg, dirs ? &*dirs : nullptr, bank ? &*bank : nullptr);
  Emit(o.out, SerializePredictions(images, preds, cfg), out);

  std::size_t n = 0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].label == Label::kUnlabeled) continue;
    ++n;
    ok += preds[i].predicted == images[i].label ? 1 : 0;
  }
  err << "rola: classified " << preds.size() << " records";
  if (n > 0) err << ", accuracy " << ok << "/" << n;
  err << "\n";
  return 0;
}

int SweepCommand(const Options& o, std::ostream& out, std::ostream& err) {
  CheckConfidence(o.confidence);
  const ClassifierConfig cfg = ResolveConfig(o);
  const SweepParam param =
      !o.param.empty() ? ParseSweepParam(o.param)
                       : (cfg.method == Method::kDirectionOnly ? SweepParam::kTau
                                                               : SweepParam::kAlpha);
  const auto grid = o.grid.empty() ? DefaultGrid(param) : ParseGrid(o.grid);
  const RecordSet images = LoadInput(o.images, o);
  auto dirs = Directions(o, err);
  if (cfg.UsesDirection() && !dirs) {
    dirs = EstimateDirections(images);
    LogWarnings(*dirs, err);
  }
  const auto bank = Prompts(o, cfg);
  const SweepReport report =
      Sweep(param, grid, cfg, images, dirs ? &*dirs : nullptr, bank ? &*bank : nullptr);
  out << RenderSweepTable(report);
  if (!o.out.empty()) WriteFileAtomic(o.out, SerializeSweep(report, o.confidence));
  return 0;
}

EvalReport PredictionsReport(const std::string& path, double confidence) {
  const std::string text = ReadFile(path);
  std::vector<RetrievalCase> cases;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
      if (j.at("true_label").is_null()) throw Error(where + ": prediction has no true_label");
      cases.push_back({j.at("id").get<std::string>(), j.at("category").get<std::string>(),
                       ParseLabel(j.at("true_label").get<std::string>()),
                       {ParseLabel(j.at("predicted").get<std::string>())}});
    } catch (const nlohmann::json::exception& e) {
      throw Error(where + ": " + e.what());
    }
  }
  if (cases.empty()) throw Error(path + ": no predictions");
  return TopKAccuracyReport(cases, confidence, "predictions " + path);
}

int Report(const Options& o, std::ostream& out, std::ostream& err) {
  CheckConfidence(o.confidence);
  if (!o.predictions.empty()) {
    const EvalReport report = PredictionsReport(o.predictions, o.confidence);
    out << RenderReportTable(report);
    if (!o.out.empty()) WriteFileAtomic(o.out, SerializeReport(report));
    return 0;
  }
  if (o.images.empty()) throw UsageError("report needs --predictions or --images");
  const RecordSet images = LoadInput(o.images, o);

  if (!o.truth.empty()) {
    const PlantedTruth truth = ParseTruth(ReadFile(o.truth), o.truth);
    auto dirs = Directions(o, err);
    if (!dirs) dirs = EstimateDirections(images);
    const std::string text = SerializeRecovery(PlantedRecoveryReport(images, truth, *dirs));
    Emit(o.out, text, out);
    return 0;
  }

  if (!o.directions.empty()) {
    throw UsageError("the leave-one-out report estimates its own directions; use --train");
  }
  const ClassifierConfig cfg = ResolveConfig(o);
  const auto bank = Prompts(o, cfg);
  std::optional<RecordSet> source;
  if (!o.train.empty()) source = LoadInput(o.train, o);
  const EvalReport report = LooProtocol(images, bank ? &*bank : nullptr, cfg, o.confidence,
                                        source ? &*source : nullptr);
  out << RenderReportTable(report);
  if (!o.out.empty()) {
    const bool threshold = cfg.method == Method::kDirectionOnly;
    WriteFileAtomic(o.out, SerializeReport(report, threshold ? "tau" : "alpha",
                                           threshold ? cfg.tau : cfg.alpha));
  }
  return 0;
}

RecordSet Queries(const Options& o) {
  if (o.images.empty() && o.prompts.empty()) throw UsageError("give --images or --prompts");
  return LoadInput(o.images.empty() ? o.prompts : o.images, o);
}

Index BuildIndex(const Options& o, const RecordSet& corpus, std::ostream& err) {
  HnswParams params;
  params.seed = o.seed;
  Index index = Index::Build(corpus, ParseBackend(o.backend), params);
  if (index.metadata().sampled_recall_at_10) {
    err << "rola: approximate index, sampled recall@10 " << *index.metadata().sampled_recall_at_10
        << " over " << index.metadata().recall_sample_size << " queries\n";
  }
  return index;
}

int Retrieve(const Options& o, std::ostream& out, std::ostream& err) {
  CheckConfidence(o.confidence);
  const RecordSet corpus = LoadInput(o.corpus, o);
  const RecordSet queries = Queries(o);
  const auto dirs = Directions(o, err);
  if (o.alpha > 0.0 && !dirs) throw UsageError("--alpha > 0 needs --directions or --train");
  const Index index = BuildIndex(o, corpus, err);
  const Sign sign = ShiftSign(o);
  const DirectionMode mode = Mode(o);

  std::vector<RetrievalResult> results(queries.size());
  ParallelFor(queries.size(), [&](std::size_t i) {
    const auto& q = queries[i];
    Vector v = q.vector;
    if (dirs && o.alpha > 0.0) {
      v = Shift(q.vector, dirs->For(q.category, mode), o.alpha, sign, Mixing::kAdditive);
    }
    std::optional<std::string> filter;
    if (o.same_category) filter = q.category;
    results[i] = QueryTopK(index, v, o.k, filter, {q.id});
  });

  std::string text;
  std::vector<RetrievalCase> cases;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& q = queries[i];
    Json j;
    j["query_id"] = q.id;
    j["category"] = q.category;
    j["alpha"] = o.alpha;
    j["sign"] = std::string(ToString(sign));
    Json hits = Json::array();
    RetrievalCase rc{q.id, q.category, q.label, {}};
    for (const auto& h : results[i].hits) {
      const Label label = corpus.Find(h.id)->label;
      hits.push_back({{"id", h.id}, {"score", h.score}, {"label", std::string(ToString(label))}});
      rc.retrieved.push_back(label);
    }
    j["hits"] = std::move(hits);
    text += j.dump() + "\n";
    if (q.label != Label::kUnlabeled) cases.push_back(std::move(rc));
  }
  Emit(o.out, text, out);
  if (!cases.empty()) {
    err << "rola: fraction of top-" << o.k << " hits matching the query label\n"
        << RenderReportTable(TopKAccuracyReport(cases, o.confidence, "retrieve"));
  }
  return 0;
}

int Walk(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.alpha_budget < o.step) throw UsageError("--alpha-budget must be at least --step");
  const RecordSet corpus = LoadInput(o.corpus, o);
  const RecordSet starts = Queries(o);
  const auto dirs = Directions(o, err);
  if (!dirs) throw UsageError("walk needs --directions or --train");
  const Index index = BuildIndex(o, corpus, err);
  const DirectionMode mode = Mode(o);

  std::vector<std::string> lines(starts.size());
  ParallelFor(starts.size(), [&](std::size_t i) {
    const auto& s = starts[i];
    WalkOptions w;
    w.step = o.step;
    w.max_changes = o.max_changes;
    w.alpha_budget = o.alpha_budget;
    if (o.same_category) w.category_filter = s.category;
    const std::string handle = std::string(ToString(mode)) + ":" + s.category;
    lines[i] = SerializeWalkTrace(
        ShiftWalk(index, s.vector, dirs->For(s.category, mode), ShiftSign(o), w, s.id, handle));
  });
  std::string text;
  for (const auto& l : lines) text += l;
  Emit(o.out, text, out);
  return 0;
}

int ShiftExport(const Options& o, std::ostream&, std::ostream& err) {
  const RecordSet input = LoadInput(o.images, o);
  const auto dirs = Directions(o, err);
  if (!dirs) throw UsageError("shift-export needs --directions or --train");
  const DirectionMode mode = Mode(o);
  const Sign sign = ShiftSign(o);
  char prov[128];
  std::snprintf(prov, sizeof prov, "shift-export alpha=%g sign=%s mode=%s", o.alpha,
                ToString(sign).data(), ToString(mode).data());
  RecordSet shifted(input.dim(), std::string(prov) + " from " + o.images);
  for (const auto& r : input) {
    EmbeddingRecord s = r;
    s.vector = Shift(r.vector, dirs->For(r.category, mode), o.alpha, sign, Mixing::kAdditive);
    shifted.Add(std::move(s));
  }
  SaveRecords(shifted, o.out, ParseRecordFormat(o.format));
  err << "rola: wrote " << shifted.size() << " shifted records -> " << o.out << "\n";
  return 0;
}

int Synth(const Options& o, std::ostream&, std::ostream& err) {
  SynthSpec spec;
  spec.n_categories = o.categories;
  spec.per_label_count = o.per_label;
  spec.dim = o.dim;
  spec.noise_sigma = o.noise;
  spec.offset_norm = o.offset_norm;
  spec.category_spread = o.spread;
  spec.offset_mode = ParseOffsetMode(o.offset_mode);
  spec.seed = o.seed;
  spec.prompt_templates = o.templates;
  spec.prompt_signal = o.prompt_signal;
  spec.prompt_noise = o.prompt_noise;
  spec.text_gap = o.text_gap;
  try {
    spec.Validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const PlantedCorpus corpus = GeneratePlantedCorpus(spec);
  const RecordFormat format = ParseRecordFormat(o.format);
  SaveRecords(corpus.images, o.out, format);
  if (!corpus.prompts.empty()) SaveRecords(corpus.prompts, o.out + ".prompts", format);
  WriteFileAtomic(o.out + ".spec.json", SerializeTruth(corpus.truth));
  err << "rola: wrote " << corpus.images.size() << " images, " << corpus.prompts.size()
      << " prompts -> " << o.out << "\n";
  return 0;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Real vs lookalike embedding toolkit: directions, classifiers, retrieval walks",
               "rola"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", "rola 0.1.0");

  std::map<CLI::App*, int (*)(const Options&, std::ostream&, std::ostream&)> commands;

  auto* estimate = app.add_subcommand(
      "estimate",
      "Estimate real->lookalike directions from a labeled RecordSet. Per category "
      "d_k = mean(lookalike) - mean(real); global = mean_k d_k; leave-one-out for k = mean of "
      "d_j over j != k");
  estimate->add_option("--train", o.train, "Labeled image RecordSet")->required();
  estimate->add_option("--out", o.out, "Directions JSON to write")->required();
  AddNormalize(estimate, o);
  commands[estimate] = Estimate;

  auto* classify = app.add_subcommand(
      "classify", "Label image embeddings real or lookalike and write one prediction per line");
  classify->add_option("--images", o.images, "Image RecordSet to classify")->required();
  classify->add_option("--prompts", o.prompts, "Prompt RecordSet (text records, id template|cat)");
  AddDirectionSource(classify, o);
  AddClassifier(classify, o);
  AddNormalize(classify, o);
  classify->add_option("--out", o.out, "Predictions file; stdout when omitted");
  commands[classify] = Classify;

  auto* sweep = app.add_subcommand(
      "sweep",
      "Evaluate a classifier over a tau or alpha grid and report the best value next to the "
      "unshifted accuracy (columns Acc., alpha, Acc. (alpha-shift))");
  sweep->add_option("--images", o.images, "Labeled image RecordSet")->required();
  sweep->add_option("--prompts", o.prompts, "Prompt RecordSet");
  AddDirectionSource(sweep, o);
  AddClassifier(sweep, o);
  sweep->add_option("--param", o.param,
                    "tau | alpha; default tau for direction_only, alpha otherwise")
      ->check(CLI::IsMember({"tau", "alpha"}));
  sweep->add_option("--grid", o.grid,
                    "start:stop:step or comma list; default tau -1:1:0.01, alpha 0:1:0.01");
  sweep->add_option("--confidence", o.confidence, "Wilson interval confidence");
  AddNormalize(sweep, o);
  sweep->add_option("--out", o.out, "Line-delimited report cells");
  commands[sweep] = SweepCommand;

  auto* retrieve = app.add_subcommand(
      "retrieve",
      "Top-k cosine retrieval for each query, optionally shifted additively: q = e + sign*alpha*d");
  AddSearch(retrieve, o);
  AddDirectionSource(retrieve, o);
  AddShift(retrieve, o, 0.0);
  retrieve->add_option("--k", o.k, "Hits per query")->check(CLI::PositiveNumber);
  retrieve->add_option("--confidence", o.confidence, "Wilson interval confidence");
  AddNormalize(retrieve, o);
  retrieve->add_option("--out", o.out, "Hits file; stdout when omitted");
  commands[retrieve] = Retrieve;

  auto* walk = app.add_subcommand(
      "walk",
      "Step each start vector along e + sign*alpha*d, alpha = step, 2*step, ..., and record "
      "every change of nearest neighbour until --max-changes or --alpha-budget");
  AddSearch(walk, o);
  AddDirectionSource(walk, o);
  walk->add_option("--sign", o.sign, "Walk sign; + toward lookalike, - toward real; auto means +")
      ->check(CLI::IsMember({"auto", "+", "-"}));
  AddDirectionMode(walk, o);
  walk->add_option("--step", o.step, "Alpha increment per step")->check(CLI::PositiveNumber);
  walk->add_option("--max-changes", o.max_changes, "Changes to record before stopping")
      ->check(CLI::PositiveNumber);
  walk->add_option("--alpha-budget", o.alpha_budget, "Largest cumulative alpha to try")
      ->check(CLI::PositiveNumber);
  AddNormalize(walk, o);
  walk->add_option("--out", o.out, "Walk traces; stdout when omitted");
  commands[walk] = Walk;

  auto* shift_export = app.add_subcommand(
      "shift-export",
      "Write e + sign*alpha*d for every record as a new RecordSet, for an external captioner");
  shift_export->add_option("--images", o.images, "RecordSet to shift")->required();
  AddDirectionSource(shift_export, o);
  AddShift(shift_export, o, 0.0);
  shift_export->add_option("--format", o.format, "lines | packed")
      ->check(CLI::IsMember({"lines", "packed"}));
  AddNormalize(shift_export, o);
  shift_export->add_option("--out", o.out, "RecordSet to write")->required();
  commands[shift_export] = ShiftExport;

  auto* synth = app.add_subcommand(
      "synth",
      "Generate a synthetic corpus with a planted offset. Writes <out>, <out>.prompts and "
      "<out>.spec.json");
  synth->add_option("--out", o.out, "Image RecordSet path")->required();
  synth->add_option("--seed", o.seed, "Generator seed (mt19937_64)");
  synth->add_option("--categories", o.categories, "Number of categories")
      ->check(CLI::PositiveNumber);
  synth->add_option("--per-label", o.per_label, "Images per label per category")
      ->check(CLI::PositiveNumber);
  synth->add_option("--dim", o.dim, "Vector dimension (>= 2)")->check(CLI::Range(2, 1 << 20));
  synth->add_option("--noise", o.noise, "Expected norm of the noise added to each image")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--offset-norm", o.offset_norm, "Norm of the planted offset")
      ->check(CLI::PositiveNumber);
  synth->add_option("--spread", o.spread, "Distance of category centers from the origin")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--offset-mode", o.offset_mode, "shared | per_category")
      ->check(CLI::IsMember({"shared", "per_category"}));
  synth->add_option("--templates", o.templates, "Prompt templates per label (0 for none)");
  synth->add_option("--prompt-signal", o.prompt_signal,
                    "Weight of the offset in lookalike prompts")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--prompt-noise", o.prompt_noise, "Expected norm of prompt noise")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--text-gap", o.text_gap, "Shared displacement of text from image vectors")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--format", o.format, "lines | packed")
      ->check(CLI::IsMember({"lines", "packed"}));
  commands[synth] = Synth;

  auto* report = app.add_subcommand(
      "report",
      "Accuracy with Wilson intervals. --predictions: summarize a predictions file. --truth: "
      "planted-offset recovery on a synthetic corpus. Otherwise: leave-one-out evaluation of "
      "--images, each category scored with a direction that never saw it");
  report->add_option("--predictions", o.predictions, "Predictions file from `classify`");
  report->add_option("--images", o.images, "Labeled image RecordSet");
  report->add_option("--truth", o.truth, "Sidecar <out>.spec.json from `synth`");
  report->add_option("--prompts", o.prompts, "Prompt RecordSet");
  AddDirectionSource(report, o);
  AddClassifier(report, o);
  report->add_option("--confidence", o.confidence, "Wilson interval confidence");
  AddNormalize(report, o);
  report->add_option("--out", o.out, "Line-delimited report cells");
  commands[report] = Report;

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  for (auto& [sub, fn] : commands) {
    if (!sub->parsed()) continue;
    Json config;
    config["subcommand"] = sub->get_name();
    config["flags"] = ResolvedFlags(*sub);
    config["threads"] = WorkerCount();
    err << "rola: config " << config.dump() << "\n";
    try {
      return fn(o, out, err);
    } catch (const UsageError& e) {
      err << "rola " << sub->get_name() << ": usage error: " << e.what() << "\n";
      return 2;
    } catch (const Error& e) {
      err << "rola " << sub->get_name() << ": error: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      err << "rola " << sub->get_name() << ": error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}

}  // namespace rola::cli
