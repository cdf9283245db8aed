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

#include "slu/losses.h"

#include <cmath>

#include "slu/error.h"

namespace slu {

std::string_view to_string(TrainingMode m) {
  switch (m) {
    case TrainingMode::kIndependent: return "independent";
    case TrainingMode::kJointSeq: return "joint_seq";
    case TrainingMode::kJointMleSeq: return "joint_mle_seq";
  }
  return "?";
}

TrainingMode training_mode_from_string(std::string_view s) {
  for (TrainingMode m : {TrainingMode::kIndependent, TrainingMode::kJointSeq,
                         TrainingMode::kJointMleSeq})
    if (s == to_string(m)) return m;
  throw ConfigError(internal::StrCat(
      "unknown training mode '", s, "' (expected independent|joint_seq|joint_mle_seq)"));
}

std::string_view to_string(CostMetric m) {
  switch (m) {
    case CostMetric::kWer: return "wer";
    case CostMetric::kSemer: return "semer";
    case CostMetric::kSluF1: return "slu_f1";
  }
  return "?";
}

CostMetric cost_metric_from_string(std::string_view s) {
  for (CostMetric m : {CostMetric::kWer, CostMetric::kSemer, CostMetric::kSluF1})
    if (s == to_string(m)) return m;
  throw ConfigError(internal::StrCat("unknown cost metric '", s,
                                     "' (expected wer|semer|slu_f1)"));
}

bool pretrained_nlu_allowed(InterfaceKind k) {
  return k == InterfaceKind::kText || k == InterfaceKind::kPosterior;
}

TrainingMode joint_mode_for(InterfaceKind k) {
  return k == InterfaceKind::kText ? TrainingMode::kJointSeq
                                   : TrainingMode::kJointMleSeq;
}

void validate_mode(const ModeSpec &s) {
  const std::string pair = internal::StrCat("(interface=", to_string(s.interface),
                                            ", mode=", to_string(s.mode), ")");
  if (s.mode == TrainingMode::kIndependent) {
    if (s.interface != InterfaceKind::kText)
      throw ConfigError("independent training pipelines ASR text into NLU; " + pair +
                        " is not supported");
    if (s.pretrained_asr || s.pretrained_nlu)
      throw ConfigError("pretrained flags only apply to joint training; " + pair +
                        " has them set");
    return;
  }
  if (s.mode != joint_mode_for(s.interface))
    throw ConfigError(internal::StrCat("interface '", to_string(s.interface),
                                       "' trains jointly with mode '",
                                       to_string(joint_mode_for(s.interface)), "'; ",
                                       pair, " is not allowed"));
  if (s.pretrained_nlu && !pretrained_nlu_allowed(s.interface))
    throw ConfigError(internal::StrCat(
        "interface '", to_string(s.interface),
        "' cannot start from a pretrained NLU; ", pair, " with pretrained_nlu=true"));
}

bool mode_allowed(const ModeSpec &spec) {
  try {
    validate_mode(spec);
    return true;
  } catch (const ConfigError &) {
    return false;
  }
}

Tensor asr_mle_loss(Tape &tape, const AsrModel &asr, const Tensor &x,
                    std::span<const int> y) {
  return asr.mle_loss(tape, x, y);
}

namespace {

// -sum_i log_softmax(logits)[i, targets[i]] over the rows of a matrix.
Tensor cross_entropy(Tape &tape, const Tensor &logits, std::span<const int> targets) {
  const std::size_t rows = logits.dim(0), C = logits.dim(1);
  SLU_CHECK(rows == targets.size(), "cross entropy over ", rows, " rows with ",
            targets.size(), " targets");
  std::vector<std::size_t> idx;
  for (std::size_t r = 0; r < rows; ++r) {
    SLU_CHECK(targets[r] >= 0 && static_cast<std::size_t>(targets[r]) < C, "target ",
              targets[r], " outside [0, ", C, ")");
    idx.push_back(r * C + targets[r]);
  }
  return tape.scale(tape.sum(tape.gather(tape.log_softmax(logits, 1), idx)), -1.0);
}

Tensor label_log_prob(Tape &tape, const Tensor &logits, std::span<const int> labels) {
  if (labels.empty()) return Tensor::scalar(0.0);
  return tape.scale(cross_entropy(tape, logits, labels), -1.0);
}

}  // namespace

Tensor nlu_loss(Tape &tape, const NluOutput &out, std::span<const int> slot_targets,
                int intent, int domain) {
  SLU_CHECK(slot_targets.size() == out.slot_logits.dim(0), "nlu_loss: ",
            slot_targets.size(), " slot targets for ", out.slot_logits.dim(0),
            " NLU positions");
  const int i[1] = {intent}, d[1] = {domain};
  Tensor loss = tape.add(cross_entropy(tape, out.intent_logits, i),
                         cross_entropy(tape, out.domain_logits, d));
  if (!slot_targets.empty())
    loss = tape.add(loss, cross_entropy(tape, out.slot_logits, slot_targets));
  return loss;
}

Tensor multitask_loss(Tape &tape, const Tensor &l_asr, const Tensor &l_nlu) {
  return tape.add(l_asr, l_nlu);
}

Tensor sequence_loss(Tape &tape, std::span<const Tensor> candidate_log_probs,
                     std::span<const double> costs) {
  SLU_CHECK(!candidate_log_probs.empty(), "sequence loss over an empty n-best list");
  SLU_CHECK(candidate_log_probs.size() == costs.size(), "sequence loss: ",
            candidate_log_probs.size(), " candidates but ", costs.size(), " costs");
  for (double c : costs) SLU_CHECK(std::isfinite(c), "non-finite candidate cost ", c);
  Tensor pbar = tape.softmax(tape.stack(candidate_log_probs), 0);
  return tape.sum(tape.mul(pbar, Tensor({costs.size()}, {costs.begin(), costs.end()})));
}

double metric_cost(CostMetric m, const SluAnnotation &candidate,
                   const SluAnnotation &reference) {
  switch (m) {
    case CostMetric::kWer: {
      const EditCounts c = edit_counts(reference.words, candidate.words);
      if (c.ref_len == 0) return c.errors() > 0 ? 1.0 : 0.0;
      return static_cast<double>(c.errors()) / static_cast<double>(c.ref_len);
    }
    case CostMetric::kSemer: return semer(reference, candidate);
    case CostMetric::kSluF1: return 1.0 - slu_f1(reference, candidate);
  }
  return 0.0;
}

TokenWords group_token_words(const Tokenizer &tok, std::span<const int> tokens) {
  TokenWords tw;
  if (tok.mode() == TokenizerMode::kWord) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      tw.words.push_back(tok.symbol(tokens[i]));
      tw.first_token.push_back(static_cast<int>(i));
    }
    return tw;
  }
  std::string word;
  int first = -1;
  auto flush = [&] {
    if (first >= 0) {
      tw.words.push_back(word);
      tw.first_token.push_back(first);
    }
    word.clear();
    first = -1;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == Tokenizer::kBoundary) {
      flush();
      continue;
    }
    if (first < 0) first = static_cast<int>(i);
    word += tok.symbol(tokens[i]);
  }
  flush();
  return tw;
}

std::vector<int> align_word_tags(std::span<const std::string> ref_words,
                                 std::span<const int> ref_tags,
                                 std::span<const std::string> hyp_words) {
  SLU_CHECK(ref_words.size() == ref_tags.size(), "align_word_tags: ",
            ref_words.size(), " words but ", ref_tags.size(), " tags");
  const std::size_t n = ref_words.size(), m = hyp_words.size();
  std::vector<long> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> long & { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (ref_words[i - 1] == hyp_words[j - 1] ? 0 : 1),
                           at(i, j - 1) + 1, at(i - 1, j) + 1});
  std::vector<int> out(m, LabelSet::kOutside);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref_words[i - 1] == hyp_words[j - 1] ? 0 : 1)) {
      out[j - 1] = ref_tags[i - 1];
      --i, --j;
    } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      --j;
    } else {
      --i;
    }
  }
  return out;
}

std::vector<int> hypothesis_slot_targets(const Tokenizer &tok,
                                         std::span<const int> hyp_tokens,
                                         std::span<const std::string> ref_words,
                                         std::span<const int> ref_tags) {
  const TokenWords tw = group_token_words(tok, hyp_tokens);
  const std::vector<int> word_tags = align_word_tags(ref_words, ref_tags, tw.words);
  std::vector<int> out(hyp_tokens.size(), LabelSet::kContinuation);
  for (std::size_t w = 0; w < tw.words.size(); ++w) out[tw.first_token[w]] = word_tags[w];
  return out;
}

SluCandidate run_candidate_through_nlu(Tape &tape, const AsrExposure &exposure,
                                       const SluModels &m) {
  SLU_CHECK(m.asr && m.nlu && m.labels && m.tokenizers.asr && m.tokenizers.nlu,
            "run_candidate_through_nlu: incomplete model bundle");
  SluCandidate c;
  c.io = apply_interface(m.interface, tape, exposure, m.tokenizers);
  c.nlu = m.nlu->forward(tape, c.io);
  c.prediction = nlu_predict(c.nlu);
  if (c.io.discrete()) {
    c.input_tokenizer = m.tokenizers.nlu;
    c.input_tokens = c.io.tokens;
  } else {
    c.input_tokenizer = m.tokenizers.asr;
    c.input_tokens = exposure.tokens;
  }
  const TokenWords tw = group_token_words(*c.input_tokenizer, c.input_tokens);
  std::vector<int> word_tags;
  for (int first : tw.first_token) word_tags.push_back(c.prediction.slots[first]);
  c.annotation.words = tw.words;
  c.annotation.slots = slots_from_tags(tw.words, word_tags, *m.labels);
  c.annotation.intent = m.labels->intents.at(c.prediction.intent);
  c.annotation.domain = m.labels->domains.at(c.prediction.domain);

  const int intent[1] = {c.prediction.intent};
  c.asr_log_prob = exposure.sequence_log_prob;
  c.nlu_log_prob = tape.add(label_log_prob(tape, c.nlu.slot_logits, c.prediction.slots),
                            label_log_prob(tape, c.nlu.intent_logits, intent));
  c.log_prob = tape.add(c.asr_log_prob, c.nlu_log_prob);
  return c;
}

}  // namespace slu
