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

// ASR-to-NLU interfaces. Each maps the representations exposed by an ASR
// model for a hypothesis w to a pair (v, h_I): v is the token-aligned NLU
// input and h_I an optional frame-aligned sequence for cross-attention.

#ifndef SLU_INTERFACES_H_
#define SLU_INTERFACES_H_

#include <string_view>
#include <vector>

#include "slu/asr.h"
#include "slu/data.h"

namespace slu {

enum class InterfaceKind { kText, kTiedEmbedding, kPosterior, kHidden, kAudioAttention };
std::string_view to_string(InterfaceKind k);
InterfaceKind interface_kind_from_string(std::string_view s);
// Whether v consists of NLU token ids (text, audio_attention) rather than
// continuous vectors.
bool is_discrete(InterfaceKind k);

struct InterfaceOutput {
  InterfaceKind kind = InterfaceKind::kText;
  std::vector<int> tokens;  // discrete v, NLU vocabulary
  Tensor vectors;           // continuous v, U x d
  Tensor h_i;               // T x E, audio attention only
  bool differentiable = false;

  bool discrete() const { return is_discrete(kind); }
  std::size_t length() const;
};

struct Tokenizers {
  const Tokenizer *asr = nullptr;
  const Tokenizer *nlu = nullptr;
};

// Detokenizes w with the ASR tokenizer and retokenizes with the NLU one.
InterfaceOutput text_interface(const AsrExposure &e, const Tokenizers &tok);
InterfaceOutput tied_embedding_interface(Tape &tape, const AsrExposure &e);
InterfaceOutput posterior_interface(Tape &tape, const AsrExposure &e);
InterfaceOutput hidden_interface_las(const AsrExposure &e);
// Row u is the joint hidden state at (i_u, u) of the lattice, where
// i_u = argmax_t P(w_u | t, u-1) with ties to the smallest t.
InterfaceOutput hidden_interface_rnnt(Tape &tape, const AsrExposure &e);
InterfaceOutput audio_attention_interface(const AsrExposure &e,
                                          const Tokenizers &tok);

InterfaceOutput apply_interface(InterfaceKind kind, Tape &tape,
                                const AsrExposure &e, const Tokenizers &tok);

// Width of continuous v for a given ASR configuration.
std::size_t interface_dim(InterfaceKind kind, const AsrConfig &asr);

}  // namespace slu

#endif  // SLU_INTERFACES_H_
