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

// Common ASR types: decoded hypotheses, n-best lists, the representations a
// model exposes to downstream NLU, and the model interface shared by the
// transducer and the attention-based recognizer.

#ifndef SLU_ASR_H_
#define SLU_ASR_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slu/optim.h"
#include "slu/tensor.h"

namespace slu {

enum class AsrKind { kRnnt, kLas };
std::string_view to_string(AsrKind k);
AsrKind asr_kind_from_string(std::string_view s);

struct AsrConfig {
  AsrKind kind = AsrKind::kRnnt;
  int feature_dim = 16;
  int vocab_size = 0;  // output symbols including the reserved ones
  int embed_dim = 32;
  int encoder_units = 64;
  int encoder_layers = 2;
  // Previous frames stacked onto each encoder input frame (zero padded).
  int left_context = 1;
  // Transducer prediction and joint networks.
  int pred_units = 64;
  int pred_layers = 1;
  int joint_units = 64;
  // Attention decoder.
  int decoder_units = 64;
  int decoder_layers = 1;
  int attention_heads = 2;
  int attention_units = 32;
  std::uint64_t seed = 1;

  void validate() const;
};

struct DecodeOptions {
  int beam_width = 4;
  int max_len = 64;
  int max_symbols_per_frame = 8;  // transducer only
};

struct Hypothesis {
  std::vector<int> tokens;
  // Transducer: log P(w|x) summed over alignments. Attention decoder:
  // sum of step log-probs, including end-of-sequence when emitted.
  double log_prob = 0.0;
  // U x (K-1): distribution over non-blank symbols behind each token.
  Tensor token_posteriors;
  // Transducer only. U x T, entry (u, t) = P(w_u | t, u-1).
  Tensor lattice_transitions;
  // Transducer only. Frame at which the surviving search path emitted each
  // token.
  std::vector<int> emission_frames;
  // Attention decoder only. U x D decoder states that emitted the tokens.
  Tensor decoder_states;
  bool ended_with_eos = false;
};

struct NBest {
  std::vector<Hypothesis> hypotheses;  // best first
  int beam_width = 0;
};

// Orders by descending log_prob, then lexicographically by tokens.
bool hypothesis_before(const Hypothesis &a, const Hypothesis &b);

// Argmax over t of each row of a U x T transition matrix; ties go to the
// smallest t.
std::vector<int> max_transition_frames(const Tensor &lattice_transitions);

// Tape-recorded representations of one utterance conditioned on a token
// sequence w.
struct AsrExposure {
  AsrKind kind = AsrKind::kRnnt;
  std::vector<int> tokens;
  Tensor h_e;  // T x E
  // Transducer: h_p is (U+1) x P, joint_hidden is T x (U+1) x J and
  // log_probs is T x (U+1) x K.
  Tensor h_p;
  Tensor joint_hidden;
  // Attention decoder: h_d is U x D and log_probs is (U+1) x (K-1), the
  // last row scoring end-of-sequence.
  Tensor h_d;
  Tensor log_probs;
  Tensor embedding;  // K x d token embedding shared with the NLU
  // Selected frame per token for the transducer hidden representation.
  std::vector<int> frames;
  Tensor sequence_log_prob;  // scalar, differentiable
};

class AsrModel {
 public:
  virtual ~AsrModel() = default;

  virtual AsrKind kind() const = 0;
  const AsrConfig &config() const { return config_; }
  ParameterList &params() { return params_; }
  const ParameterList &params() const { return params_; }
  virtual const Tensor &embedding() const = 0;

  // Negative log-likelihood of y (without reserved symbols) given x.
  virtual Tensor mle_loss(Tape &tape, const Tensor &x,
                          std::span<const int> y) const = 0;
  virtual NBest decode(const Tensor &x, const DecodeOptions &opts) const = 0;
  // Recomputes every exposed representation for hypothesis `h` on `tape`.
  virtual AsrExposure expose(Tape &tape, const Tensor &x,
                             const Hypothesis &h) const = 0;
  // Same as expose() for several hypotheses sharing one encoder pass.
  virtual std::vector<AsrExposure> expose_all(
      Tape &tape, const Tensor &x, std::span<const Hypothesis> hyps) const = 0;

 protected:
  explicit AsrModel(AsrConfig cfg) : config_(std::move(cfg)) {}
  void check_tokens(std::span<const int> y) const;
  void check_features(const Tensor &x) const;
  // Checks `x` and stacks left context frames onto it.
  Tensor encoder_input(Tape &tape, const Tensor &x) const;
  std::size_t encoder_input_dim() const;

  AsrConfig config_;
  ParameterList params_;
};

std::unique_ptr<AsrModel> make_asr_model(const AsrConfig &cfg);

}  // namespace slu

#endif  // SLU_ASR_H_
