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

// RNN transducer: recurrent encoder, prediction network over the emitted
// prefix, and a tanh joint network scoring every (frame, prefix) node.

#ifndef SLU_RNNT_H_
#define SLU_RNNT_H_

#include <span>
#include <vector>

#include "slu/asr.h"
#include "slu/nn.h"

namespace slu {

struct RnntForward {
  Tensor h_e;           // T x E
  Tensor h_p;           // (U+1) x P, row 0 is the empty prefix
  Tensor joint_hidden;  // T x (U+1) x J, after tanh
  Tensor logits;        // T x (U+1) x K
  Tensor log_probs;     // log_softmax of logits over K
};

class RnntModel : public AsrModel {
 public:
  explicit RnntModel(const AsrConfig &cfg);

  AsrKind kind() const override { return AsrKind::kRnnt; }
  const Tensor &embedding() const override { return embed_; }

  Tensor encode(Tape &tape, const Tensor &x) const;
  RnntForward forward(Tape &tape, const Tensor &x, std::span<const int> y) const;
  RnntForward forward_encoded(Tape &tape, const Tensor &h_e,
                              std::span<const int> y) const;

  Tensor mle_loss(Tape &tape, const Tensor &x,
                  std::span<const int> y) const override;
  NBest decode(const Tensor &x, const DecodeOptions &opts) const override;
  AsrExposure expose(Tape &tape, const Tensor &x,
                     const Hypothesis &h) const override;
  std::vector<AsrExposure> expose_all(
      Tape &tape, const Tensor &x, std::span<const Hypothesis> hyps) const override;

  // Fills log_prob, lattice_transitions and token_posteriors of `h` from a
  // full forward pass over its tokens.
  void rescore(const Tensor &h_e, Hypothesis &h) const;

 private:
  AsrExposure expose_encoded(Tape &tape, const Tensor &h_e,
                             const Hypothesis &h) const;

  nn::StackedLstm encoder_;
  Tensor embed_;
  nn::StackedLstm pred_;
  nn::Linear joint_enc_, joint_pred_, joint_out_;
};

// -ln P(y|x) summed over all monotone alignments of a T x (U+1) x K
// log-probability lattice. Label transitions move from (t, u) to (t, u+1)
// emitting y[u]; blank moves to (t+1, u); the path ends with a blank from
// (T-1, U).
Tensor rnnt_loss_from_log_probs(Tape &tape, const Tensor &log_probs,
                                std::span<const int> y);
Tensor rnnt_loss(Tape &tape, const Tensor &logits, std::span<const int> y);

// Same quantity as a plain log-likelihood, without a tape.
double rnnt_log_likelihood(std::span<const double> log_probs, std::size_t T,
                           std::size_t K, std::span<const int> y);

// U x T matrix of P(y_u | t, u-1) read off a lattice.
Tensor rnnt_label_transitions(const Tensor &log_probs, std::span<const int> y);

// U x (K-1) distribution over non-blank symbols at node (frames[u], u).
Tensor rnnt_token_posteriors(Tape &tape, const Tensor &log_probs,
                             std::span<const int> frames);

}  // namespace slu

#endif  // SLU_RNNT_H_
