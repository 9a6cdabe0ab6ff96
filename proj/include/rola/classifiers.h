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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rola/direction_estimator.h"
#include "rola/embedding_store.h"
#include "rola/geometry.h"

namespace rola {

enum class Method { kPairBaseline, kDirectionOnly, kShiftedPair, kSinglePrompt };
enum class Scoring { kCosine, kDot };
enum class PromptRole { kReal, kLookalike };

std::string_view ToString(Method m);
std::string_view ToString(Scoring s);
std::string_view ToString(PromptRole r);
Method ParseMethod(std::string_view s);
Scoring ParseScoring(std::string_view s);
PromptRole ParsePromptRole(std::string_view s);
inline Label LabelOf(PromptRole r) {
  return r == PromptRole::kReal ? Label::kReal : Label::kLookalike;
}

// Every free parameter of the four classification rules.
//
// Sign conventions differ per method. For kShiftedPair the defaults are -1
// for the real prompt and +1 for the lookalike prompt (each prompt moves
// toward its own class along d). For kSinglePrompt the defaults are the
// inverted pair, +1 for a real prompt and -1 for a lookalike prompt. Setting
// sign_real / sign_lookalike overrides the method default.
struct ClassifierConfig {
  Method method = Method::kDirectionOnly;
  double alpha = 0.0;  // [0, 1]; 0 reduces shifted methods to unshifted ones
  double tau = 0.22;   // [-1, 1]; direction_only and single_prompt
  std::optional<Sign> sign_real;
  std::optional<Sign> sign_lookalike;
  Scoring scoring = Scoring::kCosine;  // pair methods only
  PromptRole prompt_role = PromptRole::kReal;
  DirectionMode direction_mode = DirectionMode::kLeaveOneOut;

  // Resolved sign for a prompt of `role` under this method.
  Sign SignFor(PromptRole role) const;
  bool UsesPrompts() const { return method != Method::kDirectionOnly; }
  bool UsesDirection() const { return method != Method::kPairBaseline; }

  // Throws Error on out-of-range alpha/tau, or non-opposite resolved signs
  // for kShiftedPair.
  void Validate() const;
};

// Compact JSON rendering of every field, with resolved signs.
std::string ConfigSnapshot(const ClassifierConfig& config);

// Method default sign for a prompt of `role` (see ClassifierConfig).
Sign DefaultSign(Method method, PromptRole role);

struct Prediction {
  std::string id;
  Label predicted = Label::kReal;
  double score = 0.0;
  std::map<std::string, double> components;
};

// Argmax over the two prompt similarities. score is
// s_lookalike - s_real; an exact tie predicts real.
Prediction PairBaselineClassify(VectorView e, VectorView t_real, VectorView t_lookalike,
                                Scoring scoring = Scoring::kCosine);

// score = cosine(e, d); lookalike iff score >= tau.
Prediction DirectionOnlyClassify(VectorView e, VectorView d, double tau);

// Convex-shifts both prompts along d (real with sign_real, lookalike with
// sign_lookalike) and runs the pair baseline on the shifted prompts.
Prediction ShiftedPairClassify(VectorView e, VectorView p_real, VectorView p_lookalike,
                               VectorView d, double alpha, Scoring scoring = Scoring::kCosine,
                               Sign sign_real = Sign::kMinus, Sign sign_lookalike = Sign::kPlus);

// v = shift(p, d, alpha, sign, convex); score = cosine(e, v). Predicts the
// role's label iff score >= tau, otherwise the opposite label. Without an
// override the sign is +1 for a real prompt and -1 for a lookalike prompt.
Prediction SinglePromptClassify(VectorView e, VectorView p, PromptRole role, VectorView d,
                                double alpha, double tau,
                                std::optional<Sign> sign_override = std::nullopt);

// One real and one lookalike text prompt per category, taken from
// text-modality records. A prompt's template name is its id up to the last
// '|' (ids look like "A photo of a real {}|cat").
class PromptBank {
 public:
  // When several prompts share a (category, role), a template filter for
  // that role must pick one of them; otherwise Error.
  static PromptBank FromRecords(const RecordSet& prompts,
                                const std::optional<std::string>& real_template = std::nullopt,
                                const std::optional<std::string>& lookalike_template = std::nullopt);

  // Throws Error when the category has no prompt for `role`.
  const Vector& Get(std::string_view category, PromptRole role) const;
  bool Has(std::string_view category, PromptRole role) const;

 private:
  std::map<std::pair<std::string, PromptRole>, Vector> prompts_;
};

std::string TemplateOf(std::string_view prompt_id);

// Distinct template names per role, sorted.
std::vector<std::string> PromptTemplates(const RecordSet& prompts, PromptRole role);

// Applies `config` to one record, selecting the record category's prompts
// and direction. `dirs` may be null for kPairBaseline, `prompts` for
// kDirectionOnly.
Prediction ClassifyRecord(const EmbeddingRecord& record, const ClassifierConfig& config,
                          const DirectionSet* dirs, const PromptBank* prompts);

// Parallel over records; output order equals input order.
std::vector<Prediction> ClassifyRecords(const RecordSet& images, const ClassifierConfig& config,
                                        const DirectionSet* dirs, const PromptBank* prompts);

// One JSON object per line: id, category, true_label, predicted, score,
// method, alpha, tau, scoring. `predictions` must align with `images`.
std::string SerializePredictions(const RecordSet& images,
                                 const std::vector<Prediction>& predictions,
                                 const ClassifierConfig& config);

}  // namespace rola
