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

#include "rola/classifiers.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "rola/error.h"
#include "rola/parallel.h"

namespace rola {
namespace {

double Similarity(VectorView e, VectorView t, Scoring scoring, const char* what) {
  if (scoring == Scoring::kDot) return Dot(e, t);
  if (SquaredNorm(t) == 0.0) throw Error(std::string("zero-norm ") + what + " under cosine scoring");
  if (SquaredNorm(e) == 0.0) throw Error("zero-norm image embedding under cosine scoring");
  return Cosine(e, t);
}

void CheckAlpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error("alpha " + std::to_string(alpha) + " outside [0, 1]");
  }
}

}  // namespace

std::string_view ToString(Method m) {
  switch (m) {
    case Method::kPairBaseline: return "pair";
    case Method::kDirectionOnly: return "direction_only";
    case Method::kShiftedPair: return "shifted_pair";
    case Method::kSinglePrompt: return "single_prompt";
  }
  return "direction_only";
}

std::string_view ToString(Scoring s) { return s == Scoring::kCosine ? "cosine" : "dot"; }

std::string_view ToString(PromptRole r) { return r == PromptRole::kReal ? "real" : "lookalike"; }

Method ParseMethod(std::string_view s) {
  if (s == "pair" || s == "pair_baseline") return Method::kPairBaseline;
  if (s == "direction_only") return Method::kDirectionOnly;
  if (s == "shifted_pair") return Method::kShiftedPair;
  if (s == "single_prompt") return Method::kSinglePrompt;
  throw Error("unknown method '" + std::string(s) + "'");
}

Scoring ParseScoring(std::string_view s) {
  if (s == "cosine") return Scoring::kCosine;
  if (s == "dot") return Scoring::kDot;
  throw Error("unknown scoring '" + std::string(s) + "'");
}

PromptRole ParsePromptRole(std::string_view s) {
  if (s == "real") return PromptRole::kReal;
  if (s == "lookalike") return PromptRole::kLookalike;
  throw Error("unknown prompt role '" + std::string(s) + "'");
}

Sign DefaultSign(Method method, PromptRole role) {
  const bool real = role == PromptRole::kReal;
  if (method == Method::kSinglePrompt) return real ? Sign::kPlus : Sign::kMinus;
  return real ? Sign::kMinus : Sign::kPlus;
}

Sign ClassifierConfig::SignFor(PromptRole role) const {
  const auto& override_sign = role == PromptRole::kReal ? sign_real : sign_lookalike;
  return override_sign.value_or(DefaultSign(method, role));
}

void ClassifierConfig::Validate() const {
  CheckAlpha(alpha);
  if (!(tau >= -1.0 && tau <= 1.0)) throw Error("tau " + std::to_string(tau) + " outside [-1, 1]");
  if (method == Method::kShiftedPair &&
      SignFor(PromptRole::kReal) == SignFor(PromptRole::kLookalike)) {
    throw Error("shifted_pair needs opposite signs for the real and lookalike prompts");
  }
}

std::string ConfigSnapshot(const ClassifierConfig& config) {
  nlohmann::ordered_json j;
  j["method"] = std::string(ToString(config.method));
  j["alpha"] = config.alpha;
  j["tau"] = config.tau;
  j["sign_real"] = std::string(ToString(config.SignFor(PromptRole::kReal)));
  j["sign_lookalike"] = std::string(ToString(config.SignFor(PromptRole::kLookalike)));
  j["scoring"] = std::string(ToString(config.scoring));
  j["prompt_role"] = std::string(ToString(config.prompt_role));
  j["direction_mode"] = std::string(ToString(config.direction_mode));
  return j.dump();
}

Prediction PairBaselineClassify(VectorView e, VectorView t_real, VectorView t_lookalike,
                                Scoring scoring) {
  const double s_real = Similarity(e, t_real, scoring, "real prompt");
  const double s_look = Similarity(e, t_lookalike, scoring, "lookalike prompt");
  Prediction p;
  p.predicted = s_look > s_real ? Label::kLookalike : Label::kReal;
  p.score = s_look - s_real;
  p.components = {{"real", s_real}, {"lookalike", s_look}};
  return p;
}

Prediction DirectionOnlyClassify(VectorView e, VectorView d, double tau) {
  if (SquaredNorm(d) == 0.0) throw Error("zero-norm direction");
  if (SquaredNorm(e) == 0.0) throw Error("zero-norm image embedding");
  Prediction p;
  p.score = Cosine(e, d);
  p.predicted = p.score >= tau ? Label::kLookalike : Label::kReal;
  p.components = {{"direction", p.score}};
  return p;
}

Prediction ShiftedPairClassify(VectorView e, VectorView p_real, VectorView p_lookalike,
                               VectorView d, double alpha, Scoring scoring, Sign sign_real,
                               Sign sign_lookalike) {
  CheckAlpha(alpha);
  if (sign_real == sign_lookalike) {
    throw Error("shifted_pair needs opposite signs for the real and lookalike prompts");
  }
  const Vector shifted_real = Shift(p_real, d, alpha, sign_real, Mixing::kConvex);
  const Vector shifted_look = Shift(p_lookalike, d, alpha, sign_lookalike, Mixing::kConvex);
  return PairBaselineClassify(e, shifted_real, shifted_look, scoring);
}

Prediction SinglePromptClassify(VectorView e, VectorView p, PromptRole role, VectorView d,
                                double alpha, double tau, std::optional<Sign> sign_override) {
  CheckAlpha(alpha);
  const Sign sign = sign_override.value_or(DefaultSign(Method::kSinglePrompt, role));
  const Vector v = Shift(p, d, alpha, sign, Mixing::kConvex);
  if (SquaredNorm(v) == 0.0) throw Error("zero-norm shifted prompt");
  if (SquaredNorm(e) == 0.0) throw Error("zero-norm image embedding");
  Prediction out;
  out.score = Cosine(e, v);
  const Label own = LabelOf(role);
  out.predicted = out.score >= tau ? own : Opposite(own);
  out.components = {{std::string(ToString(role)), out.score}};
  return out;
}

std::string TemplateOf(std::string_view prompt_id) {
  const auto bar = prompt_id.rfind('|');
  return std::string(bar == std::string_view::npos ? prompt_id : prompt_id.substr(0, bar));
}

std::vector<std::string> PromptTemplates(const RecordSet& prompts, PromptRole role) {
  std::set<std::string> names;
  for (const auto& r : prompts) {
    if (r.modality == Modality::kText && r.label == LabelOf(role)) names.insert(TemplateOf(r.id));
  }
  return {names.begin(), names.end()};
}

PromptBank PromptBank::FromRecords(const RecordSet& prompts,
                                   const std::optional<std::string>& real_template,
                                   const std::optional<std::string>& lookalike_template) {
  PromptBank bank;
  std::map<std::pair<std::string, PromptRole>, std::size_t> seen;
  for (const auto& r : prompts) {
    if (r.modality != Modality::kText) continue;
    if (r.label == Label::kUnlabeled) continue;
    const PromptRole role = r.label == Label::kReal ? PromptRole::kReal : PromptRole::kLookalike;
    const auto& filter = role == PromptRole::kReal ? real_template : lookalike_template;
    if (filter && TemplateOf(r.id) != *filter) continue;
    const auto key = std::make_pair(r.category, role);
    if (++seen[key] > 1) {
      throw Error("category '" + r.category + "' has several " + std::string(ToString(role)) +
                  " prompts; select one template for that role");
    }
    bank.prompts_.emplace(key, r.vector);
  }
  for (const auto& [role, filter] :
       {std::pair{PromptRole::kReal, real_template}, std::pair{PromptRole::kLookalike, lookalike_template}}) {
    if (!filter) continue;
    const bool any = std::any_of(seen.begin(), seen.end(),
                                 [&](const auto& kv) { return kv.first.second == role; });
    if (!any) throw Error("no " + std::string(ToString(role)) + " prompt uses template '" + *filter + "'");
  }
  return bank;
}

bool PromptBank::Has(std::string_view category, PromptRole role) const {
  return prompts_.contains({std::string(category), role});
}

const Vector& PromptBank::Get(std::string_view category, PromptRole role) const {
  auto it = prompts_.find({std::string(category), role});
  if (it == prompts_.end()) {
    throw Error("no " + std::string(ToString(role)) + " prompt for category '" +
                std::string(category) + "'");
  }
  return it->second;
}

Prediction ClassifyRecord(const EmbeddingRecord& record, const ClassifierConfig& config,
                          const DirectionSet* dirs, const PromptBank* prompts) {
  if (config.UsesDirection() && dirs == nullptr) {
    throw Error(std::string(ToString(config.method)) + " needs a direction set");
  }
  if (config.UsesPrompts() && prompts == nullptr) {
    throw Error(std::string(ToString(config.method)) + " needs prompts");
  }
  Prediction p;
  try {
    switch (config.method) {
      case Method::kPairBaseline:
        p = PairBaselineClassify(record.vector, prompts->Get(record.category, PromptRole::kReal),
                                 prompts->Get(record.category, PromptRole::kLookalike),
                                 config.scoring);
        break;
      case Method::kDirectionOnly:
        p = DirectionOnlyClassify(record.vector, dirs->For(record.category, config.direction_mode),
                                  config.tau);
        break;
      case Method::kShiftedPair:
        p = ShiftedPairClassify(record.vector, prompts->Get(record.category, PromptRole::kReal),
                                prompts->Get(record.category, PromptRole::kLookalike),
                                dirs->For(record.category, config.direction_mode), config.alpha,
                                config.scoring, config.SignFor(PromptRole::kReal),
                                config.SignFor(PromptRole::kLookalike));
        break;
      case Method::kSinglePrompt:
        p = SinglePromptClassify(record.vector, prompts->Get(record.category, config.prompt_role),
                                 config.prompt_role,
                                 dirs->For(record.category, config.direction_mode), config.alpha,
                                 config.tau, config.SignFor(config.prompt_role));
        break;
    }
  } catch (const Error& e) {
    throw Error("record '" + record.id + "': " + e.what());
  }
  p.id = record.id;
  return p;
}

std::vector<Prediction> ClassifyRecords(const RecordSet& images, const ClassifierConfig& config,
                                        const DirectionSet* dirs, const PromptBank* prompts) {
  config.Validate();
  if (dirs != nullptr && config.UsesDirection() && dirs->dim != images.dim()) {
    throw Error("direction dimension " + std::to_string(dirs->dim) +
                " does not match image dimension " + std::to_string(images.dim()));
  }
  std::vector<Prediction> out(images.size());
  ParallelFor(images.size(), [&](std::size_t i) {
    out[i] = ClassifyRecord(images[i], config, dirs, prompts);
  });
  return out;
}

std::string SerializePredictions(const RecordSet& images,
                                 const std::vector<Prediction>& predictions,
                                 const ClassifierConfig& config) {
  if (images.size() != predictions.size()) throw Error("predictions do not align with records");
  std::string out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    nlohmann::ordered_json j;
    j["id"] = predictions[i].id;
    j["category"] = images[i].category;
    j["true_label"] = images[i].label == Label::kUnlabeled
                          ? nlohmann::ordered_json(nullptr)
                          : nlohmann::ordered_json(std::string(ToString(images[i].label)));
    j["predicted"] = std::string(ToString(predictions[i].predicted));
    j["score"] = predictions[i].score;
    j["method"] = std::string(ToString(config.method));
    j["alpha"] = config.alpha;
    j["tau"] = config.tau;
    j["scoring"] = std::string(ToString(config.scoring));
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace rola
