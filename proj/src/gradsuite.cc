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

#include "slu/gradsuite.h"

#include <random>

#include "slu/error.h"
#include "slu/losses.h"

namespace slu {
namespace {

constexpr int kFeatureDim = 3;

AsrConfig tiny_asr(AsrKind kind, int vocab, std::uint64_t seed) {
  AsrConfig c;
  c.kind = kind;
  c.feature_dim = kFeatureDim;
  c.vocab_size = vocab;
  c.embed_dim = 4;
  c.encoder_units = 8;
  c.encoder_layers = 1;
  c.pred_units = 5;
  c.joint_units = 6;
  c.decoder_units = 6;
  c.attention_heads = 2;
  c.attention_units = 4;
  c.seed = seed;
  return c;
}

NluConfig tiny_nlu(std::uint64_t seed) {
  NluConfig c;
  c.model_dim = 8;
  c.layers = 1;
  c.heads = 2;
  c.ff_dim = 10;
  c.head_units = 6;
  c.cross_layers = 1;
  c.seed = seed;
  return c;
}

struct Fixture {
  Tokenizer tokenizer{TokenizerMode::kWord, {"aa", "bb", "cc", "dd"}};
  LabelSet labels{{"i0", "i1", "i2"}, {"d0", "d1"}, {"s0", "s1"}};
  Tensor features;
  // Reference transcript, its slot tags and labels.
  std::vector<int> reference = {4, 5};
  std::vector<int> tags = {2, 3};
  int intent = 1;
  int domain = 0;
  // Fixed n-best list for the sequence loss.
  std::vector<std::vector<int>> nbest = {{4, 5}, {4, 6}, {5}};
  std::vector<double> costs = {0.0, 0.5, 1.0};
};

Tensor random_matrix(std::mt19937_64 &rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double &x : v) x = n(rng);
  return Tensor({rows, cols}, std::move(v));
}

std::unique_ptr<TnluModel> make_nlu(InterfaceKind iface, const AsrConfig &asr,
                                    const Fixture &fx, std::uint64_t seed) {
  NluShape s;
  s.input = iface;
  s.vocab_size = fx.tokenizer.size();
  s.input_dim = static_cast<int>(interface_dim(iface, asr));
  s.memory_dim = iface == InterfaceKind::kAudioAttention ? asr.encoder_units : 0;
  s.num_tags = fx.labels.num_tags();
  s.num_intents = static_cast<int>(fx.labels.intents.size());
  s.num_domains = static_cast<int>(fx.labels.domains.size());
  auto nlu = std::make_unique<TnluModel>(tiny_nlu(seed), s);
  // A fresh cross decoder is the identity; perturb it so h_I matters.
  std::mt19937_64 rng(seed ^ 0x5eedull);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (NamedTensor &p : nlu->params())
    if (p.name.rfind("nlu.cross", 0) == 0)
      for (double &v : p.tensor.mutable_data()) v += noise(rng);
  return nlu;
}

ParameterList joined(const ParameterList &a, const ParameterList &b) {
  ParameterList out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Hypothesis hypothesis(const std::vector<int> &tokens) {
  Hypothesis h;
  h.tokens = tokens;
  return h;
}

}  // namespace

std::vector<GradCheckReport> run_grad_suite(const GradSuiteOptions &opts) {
  SLU_CHECK(opts.frames >= 1, "grad suite needs at least one frame");
  Fixture fx;
  std::mt19937_64 rng(opts.seed);
  fx.features = random_matrix(rng, static_cast<std::size_t>(opts.frames), kFeatureDim);
  GradCheckOptions gc;
  gc.eps = opts.eps;
  gc.rtol = opts.rtol;
  gc.max_coords_per_param = opts.max_coords_per_param;
  gc.seed = opts.seed;

  std::vector<GradCheckReport> reports;
  auto record = [&](std::string name, GradCheckReport r) {
    r.name = std::move(name);
    reports.push_back(std::move(r));
  };
  const Tokenizers toks{&fx.tokenizer, &fx.tokenizer};

  for (AsrKind kind : {AsrKind::kRnnt, AsrKind::kLas}) {
    const AsrConfig cfg = tiny_asr(kind, fx.tokenizer.size(), opts.seed + 11);
    const auto asr = make_asr_model(cfg);
    const std::string tag(to_string(kind));
    record("asr_mle/" + tag, grad_check(
                                 [&](Tape &tape) {
                                   return asr_mle_loss(tape, *asr, fx.features, fx.reference);
                                 },
                                 asr->params(), gc));

    for (InterfaceKind iface :
         {InterfaceKind::kText, InterfaceKind::kTiedEmbedding, InterfaceKind::kPosterior,
          InterfaceKind::kHidden, InterfaceKind::kAudioAttention}) {
      const auto nlu = make_nlu(iface, cfg, fx, opts.seed + 23);
      const SluModels models{asr.get(), nlu.get(), iface, toks, &fx.labels};
      const ParameterList params = joined(asr->params(), nlu->params());
      const std::string suffix = tag + "/" + std::string(to_string(iface));

      auto reference_nlu_loss = [&](Tape &tape) {
        const AsrExposure e = asr->expose(tape, fx.features, hypothesis(fx.reference));
        const NluOutput out = nlu->forward(tape, apply_interface(iface, tape, e, toks));
        return nlu_loss(tape, out, fx.tags, fx.intent, fx.domain);
      };
      record("nlu/" + suffix, grad_check(reference_nlu_loss, params, gc));
      record("multitask/" + suffix,
             grad_check(
                 [&](Tape &tape) {
                   return multitask_loss(
                       tape, asr_mle_loss(tape, *asr, fx.features, fx.reference),
                       reference_nlu_loss(tape));
                 },
                 params, gc));
      record("sequence/" + suffix,
             grad_check(
                 [&](Tape &tape) {
                   std::vector<Hypothesis> hyps;
                   for (const auto &t : fx.nbest) hyps.push_back(hypothesis(t));
                   std::vector<Tensor> log_probs;
                   for (const AsrExposure &e : asr->expose_all(tape, fx.features, hyps))
                     log_probs.push_back(run_candidate_through_nlu(tape, e, models).log_prob);
                   return sequence_loss(tape, log_probs, fx.costs);
                 },
                 params, gc));
    }
  }
  return reports;
}

}  // namespace slu
