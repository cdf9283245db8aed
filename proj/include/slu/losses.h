// Copyright 2026 The slujoint Authors.
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

// Training objectives: ASR and NLU maximum likelihood, their multi-task sum,
// and the n-best expected-cost sequence loss, plus the mapping from decoded
// candidates to scored SLU outputs.

#ifndef SLU_LOSSES_H_
#define SLU_LOSSES_H_

#include <span>
#include <string_view>
#include <vector>

#include "slu/asr.h"
#include "slu/data.h"
#include "slu/interfaces.h"
#include "slu/metrics.h"
#include "slu/nlu.h"

namespace slu {

enum class TrainingMode { kIndependent, kJointSeq, kJointMleSeq };
std::string_view to_string(TrainingMode m);
TrainingMode training_mode_from_string(std::string_view s);

enum class CostMetric { kWer, kSemer, kSluF1 };
std::string_view to_string(CostMetric m);
CostMetric cost_metric_from_string(std::string_view s);

struct ModeSpec {
  TrainingMode mode = TrainingMode::kIndependent;
  InterfaceKind interface = InterfaceKind::kText;
  bool pretrained_asr = false;
  bool pretrained_nlu = false;
};

// Rejects combinations outside the supported interface/objective matrix,
// naming the offending pair.
void validate_mode(const ModeSpec &spec);
bool mode_allowed(const ModeSpec &spec);
// Whether the interface accepts an NLU warm-started from the text NLU.
bool pretrained_nlu_allowed(InterfaceKind k);
// The joint objective an interface trains with.
TrainingMode joint_mode_for(InterfaceKind k);

Tensor asr_mle_loss(Tape &tape, const AsrModel &asr, const Tensor &x,
                    std::span<const int> y);

// Sum of per-token slot cross-entropies plus intent and domain
// cross-entropies.
Tensor nlu_loss(Tape &tape, const NluOutput &out, std::span<const int> slot_targets,
                int intent, int domain);

Tensor multitask_loss(Tape &tape, const Tensor &l_asr, const Tensor &l_nlu);

// Differentiable surrogate sum_c M(c) * softmax(log_probs)_c whose gradient
// is sum_c M(c) grad pbar(c). Costs are constants.
Tensor sequence_loss(Tape &tape, std::span<const Tensor> candidate_log_probs,
                     std::span<const double> costs);

double metric_cost(CostMetric m, const SluAnnotation &candidate,
                   const SluAnnotation &reference);

// Words of a token sequence and, per word, its first non-boundary token.
struct TokenWords {
  std::vector<std::string> words;
  std::vector<int> first_token;
};
TokenWords group_token_words(const Tokenizer &tok, std::span<const int> tokens);

// Carries reference word tags onto hypothesis words through a word-level
// edit-distance alignment; inserted words get the outside tag.
std::vector<int> align_word_tags(std::span<const std::string> ref_words,
                                 std::span<const int> ref_tags,
                                 std::span<const std::string> hyp_words);

// Per-token slot targets for a hypothesis: reference word tags carried over
// by align_word_tags, placed on each word's first token, continuation tag on
// the remaining tokens.
std::vector<int> hypothesis_slot_targets(const Tokenizer &tok,
                                         std::span<const int> hyp_tokens,
                                         std::span<const std::string> ref_words,
                                         std::span<const int> ref_tags);

struct SluCandidate {
  InterfaceOutput io;
  NluOutput nlu;
  NluPrediction prediction;
  SluAnnotation annotation;
  // Tokenizer that segments the NLU input positions into words.
  const Tokenizer *input_tokenizer = nullptr;
  std::vector<int> input_tokens;
  Tensor asr_log_prob;  // log P(w|x)
  Tensor nlu_log_prob;  // log-prob of the predicted slots and intent
  Tensor log_prob;      // sum of the two
};

struct SluModels {
  const AsrModel *asr = nullptr;
  const TnluModel *nlu = nullptr;
  InterfaceKind interface = InterfaceKind::kText;
  Tokenizers tokenizers;
  const LabelSet *labels = nullptr;
};

SluCandidate run_candidate_through_nlu(Tape &tape, const AsrExposure &exposure,
                                       const SluModels &m);

}  // namespace slu

#endif  // SLU_LOSSES_H_
