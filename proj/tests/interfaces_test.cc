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

#include <cmath>
#include <random>

#include "doctest.h"
#include "slu/error.h"
#include "slu/gradcheck.h"
#include "slu/interfaces.h"
#include "slu/losses.h"
#include "slu/nlu.h"
#include "slu/rnnt.h"
#include "test_util.h"

using namespace slu;
using namespace slu::testing;

namespace {

std::vector<int> scan_argmax(const Tensor &m) {
  std::vector<int> out;
  for (std::size_t u = 0; u < m.dim(0); ++u) {
    int best = 0;
    for (std::size_t t = 1; t < m.dim(1); ++t)
      if (m.at(u, t) > m.at(u, best)) best = static_cast<int>(t);
    out.push_back(best);
  }
  return out;
}

NluShape shape_for(InterfaceKind k, const AsrConfig &asr, const Tokenizer &nlu_tok) {
  NluShape s;
  s.input = k;
  s.vocab_size = k == InterfaceKind::kPosterior ? asr.vocab_size : nlu_tok.size();
  s.input_dim = static_cast<int>(interface_dim(k, asr));
  s.memory_dim = k == InterfaceKind::kAudioAttention ? asr.encoder_units : 0;
  s.num_tags = 6;
  s.num_intents = 3;
  s.num_domains = 2;
  return s;
}

Tensor weighted_sum(Tape &tape, const Tensor &a, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> w(a.numel());
  for (double &x : w) x = n(rng);
  return tape.sum(tape.mul(a, Tensor(a.shape(), std::move(w))));
}

// Scalar probe of every NLU head.
Tensor nlu_probe(Tape &tape, const NluOutput &o) {
  Tensor s = tape.add(weighted_sum(tape, o.intent_logits, 1),
                      weighted_sum(tape, o.domain_logits, 2));
  if (o.slot_logits.dim(0) > 0) s = tape.add(s, weighted_sum(tape, o.slot_logits, 3));
  return s;
}

const Tokenizer &word_tokenizer() {
  static const Tokenizer tok(TokenizerMode::kWord, {"aa", "bb", "cc", "dd"});
  return tok;
}

}  // namespace

TEST_CASE("max-transition frames match an independent scan") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 7), coarse(0, 3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t U = dim(rng), T = trial % 5 == 0 ? 1 : dim(rng);
    std::vector<double> v(U * T);
    // Coarse values make ties common.
    for (double &x : v) x = 0.25 * coarse(rng);
    const Tensor m({U, T}, v);
    const std::vector<int> got = max_transition_frames(m);
    REQUIRE(got == scan_argmax(m));
    if (T == 1)
      for (int f : got) CHECK(f == 0);
  }
}

TEST_CASE("rnnt hidden interface picks the joint state at the selected frames") {
  const AsrConfig cfg = tiny_config(AsrKind::kRnnt, 5);
  RnntModel m(cfg);
  std::mt19937_64 rng(2);
  const Tensor x = random_features(rng, 6, 4);
  Hypothesis h;
  h.tokens = {3, 4, 3};
  Tape tape(false);
  const AsrExposure e = m.expose(tape, x, h);
  const InterfaceOutput io = hidden_interface_rnnt(tape, e);
  REQUIRE(io.vectors.dim(0) == 3);
  REQUIRE(io.vectors.dim(1) == static_cast<std::size_t>(cfg.joint_units));
  const std::vector<int> frames =
      scan_argmax(rnnt_label_transitions(e.log_probs, h.tokens));
  for (std::size_t u = 0; u < 3; ++u)
    for (int j = 0; j < cfg.joint_units; ++j)
      CHECK(io.vectors.at(u, j) == e.joint_hidden.at(frames[u], u, j));
}

TEST_CASE("posterior interface equals decode-time posteriors") {
  for (AsrKind kind : {AsrKind::kRnnt, AsrKind::kLas}) {
    CAPTURE(to_string(kind));
    const auto m = make_asr_model(tiny_config(kind, 6, 8));
    std::mt19937_64 rng(4);
    const Tensor x = random_features(rng, 7, 4);
    DecodeOptions opts;
    opts.beam_width = 3;
    opts.max_len = 5;
    const NBest nb = m->decode(x, opts);
    const std::vector<Hypothesis> &hyps = nb.hypotheses;
    Tape tape(false);
    const std::vector<AsrExposure> ex = m->expose_all(tape, x, hyps);
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      const InterfaceOutput io = posterior_interface(tape, ex[i]);
      REQUIRE(io.vectors.dim(0) == hyps[i].tokens.size());
      REQUIRE(io.vectors.numel() == hyps[i].token_posteriors.numel());
      for (std::size_t k = 0; k < io.vectors.numel(); ++k)
        CHECK(io.vectors.data()[k] ==
              doctest::Approx(hyps[i].token_posteriors.data()[k]).epsilon(1e-10));
      for (std::size_t u = 0; u < io.vectors.dim(0); ++u) {
        double s = 0.0;
        for (std::size_t j = 0; j < io.vectors.dim(1); ++j) s += io.vectors.at(u, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("interface widths match their declared dimension") {
  const Tokenizers toks{&word_tokenizer(), &word_tokenizer()};
  for (AsrKind kind : {AsrKind::kRnnt, AsrKind::kLas}) {
    const AsrConfig cfg = tiny_config(kind, word_tokenizer().size());
    const auto m = make_asr_model(cfg);
    std::mt19937_64 rng(3);
    const Tensor x = random_features(rng, 5, 4);
    Hypothesis h;
    h.tokens = {4, 6};
    Tape tape(false);
    const AsrExposure e = m->expose(tape, x, h);
    for (InterfaceKind k : {InterfaceKind::kTiedEmbedding, InterfaceKind::kPosterior,
                            InterfaceKind::kHidden}) {
      const InterfaceOutput io = apply_interface(k, tape, e, toks);
      CHECK(io.vectors.dim(0) == 2);
      CHECK(io.vectors.dim(1) == interface_dim(k, cfg));
      CHECK(io.differentiable);
    }
    const InterfaceOutput text = apply_interface(InterfaceKind::kText, tape, e, toks);
    CHECK(text.tokens == std::vector<int>{4, 6});
    CHECK_FALSE(text.differentiable);
    const InterfaceOutput aa = apply_interface(InterfaceKind::kAudioAttention, tape, e, toks);
    CHECK(aa.h_i.dim(0) == 5);
    CHECK(aa.h_i.dim(1) == static_cast<std::size_t>(cfg.encoder_units));
  }
}

TEST_CASE("empty hypothesis yields empty interface outputs") {
  const Tokenizers toks{&word_tokenizer(), &word_tokenizer()};
  for (AsrKind kind : {AsrKind::kRnnt, AsrKind::kLas}) {
    const auto m = make_asr_model(tiny_config(kind, word_tokenizer().size()));
    std::mt19937_64 rng(3);
    Tape tape(false);
    const AsrExposure e = m->expose(tape, random_features(rng, 3, 4), Hypothesis{});
    for (InterfaceKind k : {InterfaceKind::kText, InterfaceKind::kTiedEmbedding,
                            InterfaceKind::kPosterior, InterfaceKind::kHidden,
                            InterfaceKind::kAudioAttention})
      CHECK(apply_interface(k, tape, e, toks).length() == 0);
  }
}

TEST_CASE("text interface passes no gradient to the recognizer") {
  const Tokenizers toks{&word_tokenizer(), &word_tokenizer()};
  const AsrConfig cfg = tiny_config(AsrKind::kRnnt, word_tokenizer().size());
  RnntModel asr(cfg);
  TnluModel nlu(tiny_nlu_config(), shape_for(InterfaceKind::kText, cfg, word_tokenizer()));
  std::mt19937_64 rng(9);
  Hypothesis h;
  h.tokens = {4, 5};
  Tape tape;
  const AsrExposure e = asr.expose(tape, random_features(rng, 4, 4), h);
  const NluOutput o = nlu.forward(tape, text_interface(e, toks));
  const std::vector<int> tags = {2, 3};
  tape.backward(nlu_loss(tape, o, tags, 1, 0));
  for (const NamedTensor &p : asr.params())
    for (double g : p.tensor.has_grad() ? p.tensor.grad() : std::span<const double>())
      CHECK(g == 0.0);
  bool nlu_moved = false;
  for (const NamedTensor &p : nlu.params())
    if (p.tensor.has_grad())
      for (double g : p.tensor.grad()) nlu_moved |= g != 0.0;
  CHECK(nlu_moved);
}

TEST_CASE("tied embedding gradient is the sum of its two uses") {
  const AsrConfig cfg = tiny_config(AsrKind::kRnnt, word_tokenizer().size());
  RnntModel asr(cfg);
  TnluModel nlu(tiny_nlu_config(),
                shape_for(InterfaceKind::kTiedEmbedding, cfg, word_tokenizer()));
  std::mt19937_64 rng(5);
  const Tensor x = random_features(rng, 5, 4);
  const std::vector<int> y = {4, 6, 4};
  const std::vector<int> tags = {2, 3, 0};
  Tensor &table = find_param(asr.params(), "rnnt.embedding");

  auto grad_of = [&](bool with_asr, bool with_nlu) {
    zero_grads(asr.params());
    zero_grads(nlu.params());
    Tape tape;
    Hypothesis h;
    h.tokens = y;
    const AsrExposure e = asr.expose(tape, x, h);
    Tensor loss = Tensor::scalar(0.0);
    if (with_asr) loss = tape.add(loss, tape.scale(e.sequence_log_prob, -1.0));
    if (with_nlu)
      loss = tape.add(loss, nlu_loss(tape, nlu.forward(tape, tied_embedding_interface(tape, e)),
                                     tags, 2, 1));
    tape.backward(loss);
    return std::vector<double>(table.grad().begin(), table.grad().end());
  };
  const std::vector<double> both = grad_of(true, true);
  const std::vector<double> a = grad_of(true, false);
  const std::vector<double> n = grad_of(false, true);
  double nlu_norm = 0.0;
  for (std::size_t i = 0; i < both.size(); ++i) {
    CHECK(both[i] == doctest::Approx(a[i] + n[i]).epsilon(1e-12));
    nlu_norm += n[i] * n[i];
  }
  CHECK(nlu_norm > 0.0);
  // Rows of tokens absent from y get no gradient from the NLU side.
  const std::size_t d = table.dim(1);
  for (int row : {0, 1, 2, 3, 5})
    for (std::size_t j = 0; j < d; ++j) CHECK(n[row * d + j] == 0.0);
}

TEST_CASE("gradients flow through continuous interfaces to the recognizer") {
  struct Case {
    AsrKind kind;
    InterfaceKind iface;
  };
  for (Case c : {Case{AsrKind::kLas, InterfaceKind::kHidden},
                 Case{AsrKind::kRnnt, InterfaceKind::kHidden},
                 Case{AsrKind::kRnnt, InterfaceKind::kPosterior},
                 Case{AsrKind::kLas, InterfaceKind::kPosterior},
                 Case{AsrKind::kRnnt, InterfaceKind::kAudioAttention},
                 Case{AsrKind::kLas, InterfaceKind::kTiedEmbedding}}) {
    CAPTURE(to_string(c.kind));
    CAPTURE(to_string(c.iface));
    const AsrConfig cfg = tiny_config(c.kind, word_tokenizer().size(), 12);
    const auto asr = make_asr_model(cfg);
    TnluModel nlu(tiny_nlu_config(), shape_for(c.iface, cfg, word_tokenizer()));
    // A nonzero cross decoder so h_I actually reaches the outputs.
    std::mt19937_64 prng(99);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (NamedTensor &p : nlu.params())
      if (p.name.rfind("nlu.cross", 0) == 0)
        for (double &v : p.tensor.mutable_data()) v += noise(prng);
    const Tokenizers toks{&word_tokenizer(), &word_tokenizer()};
    std::mt19937_64 rng(6);
    const Tensor x = random_features(rng, 4, 4);
    Hypothesis h;
    h.tokens = {5, 4};
    GradCheckOptions o;
    o.max_coords_per_param = 3;
    o.rtol = 1e-3;
    const GradCheckReport r = grad_check(
        [&](Tape &tape) {
          const AsrExposure e = asr->expose(tape, x, h);
          return nlu_probe(tape, nlu.forward(tape, apply_interface(c.iface, tape, e, toks)));
        },
        asr->params(), o);
    CHECK_MESSAGE(r.passed, "max rel error ", r.max_rel_error);
  }
}
