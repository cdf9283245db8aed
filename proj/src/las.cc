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

#include "slu/las.h"

#include <algorithm>
#include <cmath>

#include "slu/data.h"
#include "slu/error.h"

namespace slu {

LasModel::LasModel(const AsrConfig &cfg) : AsrModel(cfg) {
  config_.kind = AsrKind::kLas;
  config_.validate();
  std::mt19937_64 rng(cfg.seed);
  nn::ParamBuilder pb("las", &rng, &params_);
  const std::size_t E = cfg.encoder_units,
                    K = cfg.vocab_size, Dm = cfg.embed_dim,
                    S = cfg.decoder_units, A = cfg.attention_units,
                    H = cfg.attention_heads;
  encoder_ = nn::BiLstm(pb.child("encoder"), encoder_input_dim(), E / 2, cfg.encoder_layers);
  embed_ = pb.uniform("embedding", {K, Dm}, 1.0 / std::sqrt(static_cast<double>(Dm)));
  decoder_ = nn::StackedLstm(pb.child("decoder"), Dm + E, S, cfg.decoder_layers);
  for (std::size_t h = 0; h < H; ++h) {
    nn::ParamBuilder hb = pb.child("attention.head" + std::to_string(h));
    Head head{nn::Linear(hb.child("query"), S, A),
              nn::Linear(hb.child("key"), E, A),
              nn::Linear(hb.child("value"), E, E / H),
              hb.xavier("score", A, 1)};
    heads_.push_back(std::move(head));
  }
  hidden_ = nn::Linear(pb.child("hidden"), S + E, S);
  output_ = nn::Linear(pb.child("output"), S, K - 1);
}

Tensor LasModel::encode(Tape &tape, const Tensor &x) const {
  return encoder_.forward(tape, encoder_input(tape, x));
}

LasModel::Memory LasModel::attend_prepare(Tape &tape, const Tensor &h_e) const {
  Memory m;
  for (const Head &h : heads_) {
    m.keys.push_back(h.key(tape, h_e));
    m.values.push_back(h.value(tape, h_e));
  }
  return m;
}

LasModel::State LasModel::initial_state(Tape &tape) const {
  return State{decoder_.initial_state(tape),
               Tensor({1, static_cast<std::size_t>(config_.encoder_units)})};
}

LasModel::StepOut LasModel::step(Tape &tape, const Memory &mem, int prev,
                                 State &state,
                                 std::vector<Tensor> *attention) const {
  const int id[1] = {prev};
  Tensor in = tape.concat({tape.embedding(embed_, id), state.context}, 1);
  Tensor s = decoder_.step(tape, in, state.lstm);
  std::vector<Tensor> ctx;
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const Head &head = heads_[h];
    const std::size_t T = mem.keys[h].dim(0), A = mem.keys[h].dim(1);
    Tensor q = tape.reshape(head.query(tape, s), {A});
    Tensor e = tape.matmul(tape.tanh(tape.add(mem.keys[h], q)), head.score);
    Tensor w = tape.softmax(tape.reshape(e, {1, T}), 1);
    if (attention) attention->push_back(w);
    ctx.push_back(tape.matmul(w, mem.values[h]));
  }
  state.context = ctx.size() == 1 ? ctx[0] : tape.concat(std::span<const Tensor>(ctx), 1);
  StepOut out;
  out.h_d = tape.tanh(hidden_(tape, tape.concat({s, state.context}, 1)));
  out.log_probs = tape.log_softmax(output_(tape, out.h_d), 1);
  return out;
}

LasForward LasModel::forward(Tape &tape, const Tensor &x,
                             std::span<const int> y) const {
  return forward_encoded(tape, encode(tape, x), y);
}

LasForward LasModel::forward_encoded(Tape &tape, const Tensor &h_e,
                                     std::span<const int> y) const {
  check_tokens(y);
  LasForward f;
  f.h_e = h_e;
  const Memory mem = attend_prepare(tape, f.h_e);
  State state = initial_state(tape);
  std::vector<Tensor> hd, lp;
  for (std::size_t i = 0; i <= y.size(); ++i) {
    const int prev = i == 0 ? Tokenizer::kBlank : y[i - 1];
    f.attention.emplace_back();
    StepOut o = step(tape, mem, prev, state, &f.attention.back());
    if (i < y.size()) hd.push_back(o.h_d);
    lp.push_back(o.log_probs);
  }
  f.h_d = hd.empty() ? Tensor({0, static_cast<std::size_t>(config_.decoder_units)})
                     : tape.concat(std::span<const Tensor>(hd), 0);
  f.log_probs = tape.concat(std::span<const Tensor>(lp), 0);
  return f;
}

namespace {

// Sum of log_probs[i, y_i - 1] over the tokens, plus the end-of-sequence
// row when `with_eos`.
Tensor sequence_score(Tape &tape, const Tensor &log_probs,
                      std::span<const int> y, bool with_eos) {
  const std::size_t C = log_probs.dim(1);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < y.size(); ++i) idx.push_back(i * C + (y[i] - 1));
  if (with_eos) idx.push_back(y.size() * C + (Tokenizer::kEos - 1));
  if (idx.empty()) return Tensor::scalar(0.0);
  return tape.sum(tape.gather(log_probs, idx));
}

}  // namespace

Tensor LasModel::mle_loss(Tape &tape, const Tensor &x,
                          std::span<const int> y) const {
  const LasForward f = forward(tape, x, y);
  return tape.scale(sequence_score(tape, f.log_probs, y, true), -1.0);
}

NBest LasModel::decode(const Tensor &x, const DecodeOptions &opts) const {
  SLU_CHECK(opts.beam_width >= 1, "beam_width must be >= 1, got ", opts.beam_width);
  SLU_CHECK(opts.max_len >= 1, "max_len must be >= 1, got ", opts.max_len);
  SLU_CHECK(x.rank() == 2 && x.dim(0) > 0, "cannot decode empty audio");
  Tape nt(false);
  const Tensor h_e = encode(nt, x);
  const Memory mem = attend_prepare(nt, h_e);
  const std::size_t width = static_cast<std::size_t>(opts.beam_width);

  struct Beam {
    std::vector<int> tokens;
    double score = 0.0;
    State state;
    std::vector<Tensor> h_d, post;
  };
  std::vector<Beam> active(1);
  active[0].state = initial_state(nt);
  std::vector<Hypothesis> finished;

  auto finish = [](const Beam &b, bool eos) {
    Hypothesis h;
    h.tokens = b.tokens;
    h.log_prob = b.score;
    h.ended_with_eos = eos;
    return h;
  };

  while (!active.empty()) {
    struct Cand {
      std::size_t parent;
      int token;
      double score;
      std::vector<int> tokens;
    };
    std::vector<Cand> cands;
    std::vector<StepOut> outs;
    std::vector<State> states;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const Beam &b = active[a];
      State st = b.state;
      const int prev = b.tokens.empty() ? Tokenizer::kBlank : b.tokens.back();
      outs.push_back(step(nt, mem, prev, st, nullptr));
      states.push_back(std::move(st));
      const std::span<const double> lp = outs.back().log_probs.data();
      for (std::size_t j = 0; j < lp.size(); ++j) {
        Cand c{a, output_token(j), b.score + lp[j], b.tokens};
        if (c.token != Tokenizer::kEos) c.tokens.push_back(c.token);
        cands.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(),
                      [](const Cand &a, const Cand &b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.tokens != b.tokens) return a.tokens < b.tokens;
                        return (a.token == Tokenizer::kEos) > (b.token == Tokenizer::kEos);
                      });
    std::vector<Beam> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Cand &c = cands[i];
      const Beam &parent = active[c.parent];
      if (c.token == Tokenizer::kEos) {
        Hypothesis h = finish(parent, true);
        h.log_prob = c.score;
        if (!parent.h_d.empty()) {
          h.decoder_states = nt.concat(std::span<const Tensor>(parent.h_d), 0);
          h.token_posteriors = nt.concat(std::span<const Tensor>(parent.post), 0);
        }
        finished.push_back(std::move(h));
        continue;
      }
      Beam b;
      b.tokens = c.tokens;
      b.score = c.score;
      b.state = states[c.parent];
      b.h_d = parent.h_d;
      b.h_d.push_back(outs[c.parent].h_d);
      b.post = parent.post;
      b.post.push_back(nt.exp(outs[c.parent].log_probs));
      if (static_cast<int>(b.tokens.size()) >= opts.max_len) {
        Hypothesis h = finish(b, false);
        h.decoder_states = nt.concat(std::span<const Tensor>(b.h_d), 0);
        h.token_posteriors = nt.concat(std::span<const Tensor>(b.post), 0);
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(b));
      }
    }
    active = std::move(next);
  }

  const std::size_t C = static_cast<std::size_t>(config_.vocab_size - 1);
  for (Hypothesis &h : finished)
    if (h.tokens.empty()) {
      h.decoder_states = Tensor({0, static_cast<std::size_t>(config_.decoder_units)});
      h.token_posteriors = Tensor({0, C});
    }
  std::sort(finished.begin(), finished.end(), hypothesis_before);
  if (finished.size() > width) finished.resize(width);
  NBest out;
  out.beam_width = opts.beam_width;
  out.hypotheses = std::move(finished);
  return out;
}

AsrExposure LasModel::expose(Tape &tape, const Tensor &x,
                             const Hypothesis &h) const {
  return expose_encoded(tape, encode(tape, x), h);
}

std::vector<AsrExposure> LasModel::expose_all(
    Tape &tape, const Tensor &x, std::span<const Hypothesis> hyps) const {
  const Tensor h_e = encode(tape, x);
  std::vector<AsrExposure> out;
  for (const Hypothesis &h : hyps) out.push_back(expose_encoded(tape, h_e, h));
  return out;
}

AsrExposure LasModel::expose_encoded(Tape &tape, const Tensor &h_e,
                                     const Hypothesis &h) const {
  const LasForward f = forward_encoded(tape, h_e, h.tokens);
  AsrExposure e;
  e.kind = AsrKind::kLas;
  e.tokens = h.tokens;
  e.h_e = f.h_e;
  e.h_d = f.h_d;
  e.log_probs = f.log_probs;
  e.embedding = embed_;
  e.sequence_log_prob = sequence_score(tape, f.log_probs, h.tokens, h.ended_with_eos);
  return e;
}

}  // namespace slu
