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

// Transformer NLU: pre-LN self-attention encoder over [start; v], an
// optional cross-attention decoder over h_I, a per-token slot tagger and
// max-pooled intent and domain classifiers.

#ifndef SLU_NLU_H_
#define SLU_NLU_H_

#include <cstdint>
#include <span>
#include <vector>

#include "slu/interfaces.h"
#include "slu/nn.h"

namespace slu {

struct NluConfig {
  int model_dim = 64;
  int layers = 2;
  int heads = 2;
  int ff_dim = 128;
  int head_units = 64;  // hidden width of the intent and domain classifiers
  int cross_layers = 1;
  std::uint64_t seed = 2;

  void validate() const;
};

// Input/output sizes fixed by the data and the interface.
struct NluShape {
  InterfaceKind input = InterfaceKind::kText;
  int vocab_size = 0;   // NLU token vocabulary (discrete and posterior input)
  int input_dim = 0;    // width of continuous v
  int memory_dim = 0;   // width of h_I (audio attention)
  int num_tags = 0;
  int num_intents = 0;
  int num_domains = 0;

  void validate() const;
};

struct NluOutput {
  Tensor slot_logits;    // U x num_tags
  Tensor intent_logits;  // 1 x num_intents
  Tensor domain_logits;  // 1 x num_domains
  Tensor encoded;        // (U+1) x model_dim, row 0 is the start position
  // Per layer and head, rows x rows (self) or rows x T (cross).
  std::vector<Tensor> self_attention;
  std::vector<Tensor> cross_attention;
};

struct NluPrediction {
  std::vector<int> slots;
  int intent = 0;
  int domain = 0;
};

class TnluModel {
 public:
  TnluModel(const NluConfig &cfg, const NluShape &shape);

  NluOutput forward(Tape &tape, const InterfaceOutput &io) const;
  // Slot tagger on arbitrary encoder rows (no positional information).
  Tensor slot_head(Tape &tape, const Tensor &rows) const;

  const NluConfig &config() const { return config_; }
  const NluShape &shape() const { return shape_; }
  bool has_cross_decoder() const { return !cross_.empty(); }
  ParameterList &params() { return params_; }
  const ParameterList &params() const { return params_; }

 private:
  struct EncoderLayer {
    nn::LayerNorm ln1, ln2;
    nn::MultiHeadAttention attn;
    nn::FeedForward ff;
  };
  struct CrossLayer {
    nn::LayerNorm ln1, ln2, ln3;
    nn::MultiHeadAttention self_attn, cross_attn;
    nn::FeedForward ff;
  };
  struct Classifier {
    nn::Linear hidden, out;
  };

  Tensor embed_input(Tape &tape, const InterfaceOutput &io) const;
  Tensor classify(Tape &tape, const Classifier &c, const Tensor &pooled) const;

  NluConfig config_;
  NluShape shape_;
  ParameterList params_;
  Tensor start_;      // 1 x M
  Tensor embedding_;  // vocab x M (discrete and posterior input)
  nn::Linear input_proj_;
  std::vector<EncoderLayer> encoder_;
  std::vector<CrossLayer> cross_;
  nn::LayerNorm final_ln_;
  nn::Linear slot_;
  Classifier intent_, domain_;
};

// Argmax per head, ties to the smallest label.
NluPrediction nlu_predict(const NluOutput &out);
int argmax_first(std::span<const double> v);

}  // namespace slu

#endif  // SLU_NLU_H_
