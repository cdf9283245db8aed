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

// Listen-attend-spell recognizer: bidirectional LSTM encoder and an LSTM
// decoder with multi-head additive attention over the encoder states.

#ifndef SLU_LAS_H_
#define SLU_LAS_H_

#include <span>
#include <vector>

#include "slu/asr.h"
#include "slu/nn.h"

namespace slu {

struct LasForward {
  Tensor h_e;        // T x E
  Tensor h_d;        // U x D, states that emitted y
  Tensor log_probs;  // (U+1) x (K-1), last row scores end-of-sequence
  // attention[i][head] is the 1 x T weight row of decode step i.
  std::vector<std::vector<Tensor>> attention;
};

class LasModel : public AsrModel {
 public:
  explicit LasModel(const AsrConfig &cfg);

  AsrKind kind() const override { return AsrKind::kLas; }
  const Tensor &embedding() const override { return embed_; }

  // Output column j scores token j + 1.
  static int output_token(std::size_t column) { return static_cast<int>(column) + 1; }

  Tensor encode(Tape &tape, const Tensor &x) const;
  // Teacher-forced pass over y followed by an end-of-sequence step.
  LasForward forward(Tape &tape, const Tensor &x, std::span<const int> y) const;
  LasForward forward_encoded(Tape &tape, const Tensor &h_e,
                             std::span<const int> y) const;

  Tensor mle_loss(Tape &tape, const Tensor &x,
                  std::span<const int> y) const override;
  NBest decode(const Tensor &x, const DecodeOptions &opts) const override;
  AsrExposure expose(Tape &tape, const Tensor &x,
                     const Hypothesis &h) const override;
  std::vector<AsrExposure> expose_all(
      Tape &tape, const Tensor &x, std::span<const Hypothesis> hyps) const override;

 private:
  struct Head {
    nn::Linear query, key, value;
    Tensor score;  // A x 1
  };
  struct Memory {
    std::vector<Tensor> keys;    // per head, T x A
    std::vector<Tensor> values;  // per head, T x E/heads
  };
  struct State {
    std::vector<nn::LstmState> lstm;
    Tensor context;  // 1 x E
  };
  struct StepOut {
    Tensor h_d;        // 1 x D
    Tensor log_probs;  // 1 x (K-1)
  };

  AsrExposure expose_encoded(Tape &tape, const Tensor &h_e,
                             const Hypothesis &h) const;
  Memory attend_prepare(Tape &tape, const Tensor &h_e) const;
  State initial_state(Tape &tape) const;
  StepOut step(Tape &tape, const Memory &mem, int prev, State &state,
               std::vector<Tensor> *attention) const;

  nn::BiLstm encoder_;
  Tensor embed_;
  nn::StackedLstm decoder_;
  std::vector<Head> heads_;
  nn::Linear hidden_, output_;
};

}  // namespace slu

#endif  // SLU_LAS_H_
