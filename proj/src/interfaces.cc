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

#include "slu/interfaces.h"

#include "slu/error.h"
#include "slu/rnnt.h"

namespace slu {

std::string_view to_string(InterfaceKind k) {
  switch (k) {
    case InterfaceKind::kText: return "text";
    case InterfaceKind::kTiedEmbedding: return "tied_embedding";
    case InterfaceKind::kPosterior: return "posterior";
    case InterfaceKind::kHidden: return "hidden";
    case InterfaceKind::kAudioAttention: return "audio_attention";
  }
  return "?";
}

InterfaceKind interface_kind_from_string(std::string_view s) {
  for (InterfaceKind k : {InterfaceKind::kText, InterfaceKind::kTiedEmbedding,
                          InterfaceKind::kPosterior, InterfaceKind::kHidden,
                          InterfaceKind::kAudioAttention})
    if (s == to_string(k)) return k;
  throw ConfigError(internal::StrCat(
      "unknown interface '", s,
      "' (expected text|tied_embedding|posterior|hidden|audio_attention)"));
}

bool is_discrete(InterfaceKind k) {
  return k == InterfaceKind::kText || k == InterfaceKind::kAudioAttention;
}

std::size_t InterfaceOutput::length() const {
  return discrete() ? tokens.size() : vectors.dim(0);
}

namespace {

std::vector<int> retokenize(const AsrExposure &e, const Tokenizers &tok) {
  SLU_CHECK(tok.asr && tok.nlu, "text-based interfaces need both tokenizers");
  return tok.nlu->tokenize(tok.asr->detokenize(e.tokens));
}

}  // namespace

InterfaceOutput text_interface(const AsrExposure &e, const Tokenizers &tok) {
  InterfaceOutput o;
  o.kind = InterfaceKind::kText;
  o.tokens = retokenize(e, tok);
  return o;
}

InterfaceOutput tied_embedding_interface(Tape &tape, const AsrExposure &e) {
  SLU_CHECK(e.embedding.defined(), "exposure carries no token embedding");
  InterfaceOutput o;
  o.kind = InterfaceKind::kTiedEmbedding;
  o.differentiable = true;
  o.vectors = e.tokens.empty() ? Tensor({0, e.embedding.dim(1)})
                               : tape.embedding(e.embedding, e.tokens);
  return o;
}

InterfaceOutput posterior_interface(Tape &tape, const AsrExposure &e) {
  SLU_CHECK(e.log_probs.defined(), "exposure carries no token posteriors");
  InterfaceOutput o;
  o.kind = InterfaceKind::kPosterior;
  o.differentiable = true;
  const std::size_t U = e.tokens.size();
  if (e.kind == AsrKind::kRnnt) {
    SLU_CHECK(e.frames.size() == U, "missing lattice transitions for posteriors");
    o.vectors = rnnt_token_posteriors(tape, e.log_probs, e.frames);
  } else {
    const std::size_t C = e.log_probs.dim(1);
    o.vectors = U == 0 ? Tensor({0, C}) : tape.exp(tape.slice(e.log_probs, 0, 0, U));
  }
  return o;
}

InterfaceOutput hidden_interface_las(const AsrExposure &e) {
  SLU_CHECK(e.kind == AsrKind::kLas,
            "hidden_interface_las called on a transducer exposure");
  SLU_CHECK(e.h_d.defined(), "exposure carries no decoder states");
  InterfaceOutput o;
  o.kind = InterfaceKind::kHidden;
  o.differentiable = true;
  o.vectors = e.h_d;
  return o;
}

InterfaceOutput hidden_interface_rnnt(Tape &tape, const AsrExposure &e) {
  SLU_CHECK(e.kind == AsrKind::kRnnt,
            "hidden_interface_rnnt called on an attention-decoder exposure");
  SLU_CHECK(e.joint_hidden.defined(), "exposure carries no joint hidden states");
  const std::size_t U = e.tokens.size();
  SLU_CHECK(e.frames.size() == U, "missing lattice transitions: ",
            e.frames.size(), " selected frames for ", U, " tokens");
  const std::size_t U1 = e.joint_hidden.dim(1), J = e.joint_hidden.dim(2);
  InterfaceOutput o;
  o.kind = InterfaceKind::kHidden;
  o.differentiable = true;
  if (U == 0) {
    o.vectors = Tensor({0, J});
    return o;
  }
  std::vector<std::size_t> idx;
  idx.reserve(U * J);
  for (std::size_t u = 0; u < U; ++u)
    for (std::size_t j = 0; j < J; ++j)
      idx.push_back((e.frames[u] * U1 + u) * J + j);
  o.vectors = tape.reshape(tape.gather(e.joint_hidden, idx), {U, J});
  return o;
}

InterfaceOutput audio_attention_interface(const AsrExposure &e,
                                          const Tokenizers &tok) {
  SLU_CHECK(e.h_e.defined(), "exposure carries no encoder states");
  InterfaceOutput o;
  o.kind = InterfaceKind::kAudioAttention;
  o.differentiable = true;
  o.tokens = retokenize(e, tok);
  o.h_i = e.h_e;
  return o;
}

InterfaceOutput apply_interface(InterfaceKind kind, Tape &tape,
                                const AsrExposure &e, const Tokenizers &tok) {
  switch (kind) {
    case InterfaceKind::kText: return text_interface(e, tok);
    case InterfaceKind::kTiedEmbedding: return tied_embedding_interface(tape, e);
    case InterfaceKind::kPosterior: return posterior_interface(tape, e);
    case InterfaceKind::kHidden:
      return e.kind == AsrKind::kLas ? hidden_interface_las(e)
                                     : hidden_interface_rnnt(tape, e);
    case InterfaceKind::kAudioAttention: return audio_attention_interface(e, tok);
  }
  throw Error("unreachable interface kind");
}

std::size_t interface_dim(InterfaceKind kind, const AsrConfig &asr) {
  switch (kind) {
    case InterfaceKind::kTiedEmbedding: return asr.embed_dim;
    case InterfaceKind::kPosterior: return asr.vocab_size - 1;
    case InterfaceKind::kHidden:
      return asr.kind == AsrKind::kLas ? asr.decoder_units : asr.joint_units;
    case InterfaceKind::kText:
    case InterfaceKind::kAudioAttention: return 0;
  }
  return 0;
}

}  // namespace slu
