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

#include "slu/nlu.h"

#include <cmath>

#include "slu/error.h"

namespace slu {

void NluConfig::validate() const {
  auto positive = [](int v, const char *name) {
    if (v < 1)
      throw ConfigError(internal::StrCat("nlu.", name, " must be >= 1, got ", v));
  };
  positive(model_dim, "model_dim");
  positive(layers, "layers");
  positive(heads, "heads");
  positive(ff_dim, "ff_dim");
  positive(head_units, "head_units");
  positive(cross_layers, "cross_layers");
  if (model_dim % heads != 0)
    throw ConfigError(internal::StrCat("nlu.model_dim (", model_dim,
                                       ") must be divisible by nlu.heads (", heads, ")"));
}

void NluShape::validate() const {
  SLU_CHECK(num_tags >= 2 && num_intents >= 1 && num_domains >= 1,
            "NLU needs at least two tags, one intent and one domain");
  if (is_discrete(input) || input == InterfaceKind::kPosterior)
    SLU_CHECK(vocab_size >= 1, "NLU token vocabulary is empty");
  if (input == InterfaceKind::kPosterior)
    SLU_CHECK(input_dim == vocab_size - 1, "posterior input of width ", input_dim,
              " needs an NLU vocabulary shared with the ASR model (size ",
              input_dim + 1, "), got ", vocab_size);
  if (!is_discrete(input)) SLU_CHECK(input_dim >= 1, "continuous NLU input needs a width");
  if (input == InterfaceKind::kAudioAttention)
    SLU_CHECK(memory_dim >= 1, "audio attention needs the encoder width");
}

TnluModel::TnluModel(const NluConfig &cfg, const NluShape &shape)
    : config_(cfg), shape_(shape) {
  config_.validate();
  shape_.validate();
  std::mt19937_64 rng(cfg.seed);
  nn::ParamBuilder pb("nlu", &rng, &params_);
  const std::size_t M = cfg.model_dim, H = cfg.heads;
  start_ = pb.uniform("start", {1, M}, 1.0 / std::sqrt(static_cast<double>(M)));
  if (is_discrete(shape.input) || shape.input == InterfaceKind::kPosterior)
    embedding_ = pb.uniform("input.embedding", {static_cast<std::size_t>(shape.vocab_size), M},
                            1.0 / std::sqrt(static_cast<double>(M)));
  else
    input_proj_ = nn::Linear(pb.child("input.proj"), shape.input_dim, M);
  for (int l = 0; l < cfg.layers; ++l) {
    nn::ParamBuilder lb = pb.child("encoder.layer" + std::to_string(l));
    encoder_.push_back({nn::LayerNorm(lb.child("ln1"), M), nn::LayerNorm(lb.child("ln2"), M),
                        nn::MultiHeadAttention(lb.child("attn"), M, M, M, H),
                        nn::FeedForward(lb.child("ff"), M, cfg.ff_dim)});
  }
  final_ln_ = nn::LayerNorm(pb.child("final_ln"), M);
  slot_ = nn::Linear(pb.child("slot"), M, shape.num_tags);
  intent_ = {nn::Linear(pb.child("intent.hidden"), M, cfg.head_units),
             nn::Linear(pb.child("intent.out"), cfg.head_units, shape.num_intents)};
  domain_ = {nn::Linear(pb.child("domain.hidden"), M, cfg.head_units),
             nn::Linear(pb.child("domain.out"), cfg.head_units, shape.num_domains)};
  if (shape.input == InterfaceKind::kAudioAttention) {
    // Zero output projections make each block start as the identity.
    for (int l = 0; l < cfg.cross_layers; ++l) {
      nn::ParamBuilder lb = pb.child("cross.layer" + std::to_string(l));
      cross_.push_back(
          {nn::LayerNorm(lb.child("ln1"), M), nn::LayerNorm(lb.child("ln2"), M),
           nn::LayerNorm(lb.child("ln3"), M),
           nn::MultiHeadAttention(lb.child("self_attn"), M, M, M, H, true),
           nn::MultiHeadAttention(lb.child("cross_attn"), M, shape.memory_dim, M, H, true),
           nn::FeedForward(lb.child("ff"), M, cfg.ff_dim, true)});
    }
  }
}

Tensor TnluModel::embed_input(Tape &tape, const InterfaceOutput &io) const {
  const std::size_t M = config_.model_dim;
  SLU_CHECK(io.kind == shape_.input, "NLU built for '", to_string(shape_.input),
            "' input received '", to_string(io.kind), "'");
  if (io.discrete()) {
    if (io.tokens.empty()) return Tensor({0, M});
    return tape.embedding(embedding_, io.tokens);
  }
  SLU_CHECK(io.vectors.defined() && io.vectors.rank() == 2,
            "continuous NLU input must be a U x d matrix");
  SLU_CHECK(io.vectors.dim(1) == static_cast<std::size_t>(shape_.input_dim),
            "continuous NLU input has width ", io.vectors.dim(1), ", expected ",
            shape_.input_dim);
  if (io.vectors.dim(0) == 0) return Tensor({0, M});
  if (io.kind == InterfaceKind::kPosterior) {
    // Expected embedding under the posterior over non-blank tokens.
    Tensor rows = tape.slice(embedding_, 0, 1, embedding_.dim(0));
    return tape.matmul(io.vectors, rows);
  }
  return input_proj_(tape, io.vectors);
}

Tensor TnluModel::slot_head(Tape &tape, const Tensor &rows) const {
  return slot_(tape, rows);
}

Tensor TnluModel::classify(Tape &tape, const Classifier &c,
                           const Tensor &pooled) const {
  return c.out(tape, tape.relu(c.hidden(tape, pooled)));
}

NluOutput TnluModel::forward(Tape &tape, const InterfaceOutput &io) const {
  SLU_CHECK(!io.h_i.defined() || has_cross_decoder(),
            "interface provides h_I but the NLU has no cross-attention decoder");
  SLU_CHECK(io.h_i.defined() || !has_cross_decoder(),
            "NLU cross-attention decoder needs h_I from the interface");
  if (io.h_i.defined())
    SLU_CHECK(io.h_i.rank() == 2 &&
                  io.h_i.dim(1) == static_cast<std::size_t>(shape_.memory_dim),
              "h_I must be T x ", shape_.memory_dim, ", got ", shape_str(io.h_i.shape()));

  Tensor v = embed_input(tape, io);
  const std::size_t U = v.dim(0), M = config_.model_dim;
  Tensor x = U == 0 ? start_ : tape.concat({start_, v}, 0);
  x = tape.add(x, nn::sinusoidal_positions(U + 1, M));

  NluOutput out;
  for (const EncoderLayer &l : encoder_) {
    Tensor n = l.ln1(tape, x);
    x = tape.add(x, l.attn(tape, n, n, &out.self_attention));
    x = tape.add(x, l.ff(tape, l.ln2(tape, x)));
  }
  for (const CrossLayer &l : cross_) {
    Tensor n = l.ln1(tape, x);
    x = tape.add(x, l.self_attn(tape, n, n, &out.self_attention));
    x = tape.add(x, l.cross_attn(tape, l.ln2(tape, x), io.h_i, &out.cross_attention));
    x = tape.add(x, l.ff(tape, l.ln3(tape, x)));
  }
  x = final_ln_(tape, x);
  out.encoded = x;
  out.slot_logits = U == 0 ? Tensor({0, static_cast<std::size_t>(shape_.num_tags)})
                           : slot_(tape, tape.slice(x, 0, 1, U + 1));
  Tensor pooled = tape.max_pool(x);
  out.intent_logits = classify(tape, intent_, pooled);
  out.domain_logits = classify(tape, domain_, pooled);
  return out;
}

int argmax_first(std::span<const double> v) {
  SLU_CHECK(!v.empty(), "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

NluPrediction nlu_predict(const NluOutput &out) {
  NluPrediction p;
  const std::size_t U = out.slot_logits.dim(0), S = out.slot_logits.dim(1);
  const std::span<const double> s = out.slot_logits.data();
  for (std::size_t u = 0; u < U; ++u) p.slots.push_back(argmax_first(s.subspan(u * S, S)));
  p.intent = argmax_first(out.intent_logits.data());
  p.domain = argmax_first(out.domain_logits.data());
  return p;
}

}  // namespace slu
