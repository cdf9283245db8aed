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
#include "slu/losses.h"
#include "slu/rnnt.h"
#include "test_util.h"

using namespace slu;
using namespace slu::testing;

namespace {

constexpr InterfaceKind kAllInterfaces[] = {
    InterfaceKind::kText, InterfaceKind::kTiedEmbedding, InterfaceKind::kPosterior,
    InterfaceKind::kHidden, InterfaceKind::kAudioAttention};
constexpr TrainingMode kAllModes[] = {TrainingMode::kIndependent, TrainingMode::kJointSeq,
                                      TrainingMode::kJointMleSeq};

// Candidate log-probs as functions of a parameter vector theta.
struct ToyCandidates {
  Tensor theta;
  ToyCandidates() : theta({4}, {0.3, -0.7, 1.1, 0.2}, true) {}
  std::vector<Tensor> log_probs(Tape &tape, std::size_t n, double shift = 0.0) const {
    std::vector<Tensor> out;
    for (std::size_t c = 0; c < n; ++c) {
      std::vector<double> w(4);
      for (std::size_t j = 0; j < 4; ++j) w[j] = std::sin(1.0 + c * 1.7 + j * 0.9);
      Tensor lp = tape.sum(tape.mul(tape.tanh(theta), Tensor({4}, w)));
      out.push_back(tape.add(lp, Tensor::scalar(shift)));
    }
    return out;
  }
  std::vector<double> grad(std::span<const double> costs, double shift = 0.0) {
    theta.clear_grad();
    Tape tape;
    const std::vector<Tensor> lp = log_probs(tape, costs.size(), shift);
    tape.backward(sequence_loss(tape, lp, costs));
    if (!theta.has_grad()) return std::vector<double>(4, 0.0);
    return {theta.grad().begin(), theta.grad().end()};
  }
};

SluAnnotation annotation(std::vector<std::string> words, std::vector<Slot> slots,
                         std::string intent) {
  SluAnnotation a;
  a.words = std::move(words);
  a.slots = std::move(slots);
  a.intent = std::move(intent);
  a.domain = "d";
  return a;
}

}  // namespace

TEST_CASE("mode matrix admits exactly the supported combinations") {
  int allowed = 0;
  for (TrainingMode mode : kAllModes)
    for (InterfaceKind k : kAllInterfaces)
      for (int flags = 0; flags < 4; ++flags) {
        const ModeSpec s{mode, k, (flags & 1) != 0, (flags & 2) != 0};
        bool expect;
        if (mode == TrainingMode::kIndependent)
          expect = k == InterfaceKind::kText && flags == 0;
        else if (k == InterfaceKind::kText)
          expect = mode == TrainingMode::kJointSeq;
        else
          expect = mode == TrainingMode::kJointMleSeq &&
                   (!s.pretrained_nlu || k == InterfaceKind::kPosterior);
        CAPTURE(to_string(mode));
        CAPTURE(to_string(k));
        CAPTURE(flags);
        CHECK(mode_allowed(s) == expect);
        allowed += expect;
      }
  CHECK(allowed == 15);
}

TEST_CASE("rejections name the offending pair") {
  const ModeSpec tied{TrainingMode::kJointMleSeq, InterfaceKind::kTiedEmbedding, false, true};
  try {
    validate_mode(tied);
    FAIL("expected rejection");
  } catch (const ConfigError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("tied_embedding") != std::string::npos);
    CHECK(msg.find("joint_mle_seq") != std::string::npos);
    CHECK(msg.find("pretrained_nlu") != std::string::npos);
  }
  CHECK_THROWS_AS(validate_mode({TrainingMode::kJointSeq, InterfaceKind::kHidden}),
                  ConfigError);
  CHECK_THROWS_AS(training_mode_from_string("joint"), ConfigError);
  CHECK_THROWS_AS(cost_metric_from_string("cer"), ConfigError);
  CHECK(training_mode_from_string("joint_mle_seq") == TrainingMode::kJointMleSeq);
  CHECK(cost_metric_from_string("slu_f1") == CostMetric::kSluF1);
}

TEST_CASE("uniform nlu logits give the closed-form cross-entropy") {
  NluOutput o;
  o.slot_logits = Tensor({3, 8});
  o.intent_logits = Tensor({1, 5});
  o.domain_logits = Tensor({1, 4});
  Tape tape;
  const std::vector<int> tags = {0, 5, 7};
  CHECK(nlu_loss(tape, o, tags, 2, 3).item() ==
        doctest::Approx(3 * std::log(8.0) + std::log(5.0) + std::log(4.0)).epsilon(1e-13));
}

TEST_CASE("confident correct nlu logits give near-zero loss") {
  NluOutput o;
  const std::vector<int> tags = {1, 0, 2};
  std::vector<double> s(3 * 4, 0.0);
  for (std::size_t u = 0; u < 3; ++u) s[u * 4 + tags[u]] = 50.0;
  o.slot_logits = Tensor({3, 4}, s);
  o.intent_logits = Tensor({1, 3}, {0, 0, 50});
  o.domain_logits = Tensor({1, 2}, {50, 0});
  Tape tape;
  const double l = nlu_loss(tape, o, tags, 2, 0).item();
  CHECK(l >= 0.0);
  CHECK(l <= 1e-6);
}

TEST_CASE("multitask loss adds values and gradients") {
  Tape tape;
  CHECK(multitask_loss(tape, Tensor::scalar(2.0), Tensor::scalar(3.5)).item() == 5.5);
  CHECK(multitask_loss(tape, Tensor::scalar(0.0), Tensor::scalar(1.25)).item() == 1.25);

  const AsrConfig cfg = tiny_config(AsrKind::kLas, 7);
  const auto asr = make_asr_model(cfg);
  NluShape shape;
  shape.input = InterfaceKind::kHidden;
  shape.input_dim = cfg.decoder_units;
  shape.num_tags = 4;
  shape.num_intents = 2;
  shape.num_domains = 2;
  TnluModel nlu(tiny_nlu_config(), shape);
  std::mt19937_64 rng(3);
  const Tensor x = random_features(rng, 4, 4);
  const std::vector<int> y = {3, 5, 6};
  const std::vector<int> tags = {2, 3, 0};
  ParameterList all = asr->params();
  all.insert(all.end(), nlu.params().begin(), nlu.params().end());
  auto grads = [&](bool a, bool n) {
    zero_grads(all);
    Tape t;
    Hypothesis h;
    h.tokens = y;
    Tensor la = asr_mle_loss(t, *asr, x, y);
    const AsrExposure e = asr->expose(t, x, h);
    Tensor ln = nlu_loss(t, nlu.forward(t, hidden_interface_las(e)), tags, 1, 0);
    t.backward(a && n ? multitask_loss(t, la, ln) : a ? la : ln);
    std::vector<double> g;
    for (const NamedTensor &p : all)
      for (std::size_t i = 0; i < p.tensor.numel(); ++i)
        g.push_back(p.tensor.has_grad() ? p.tensor.grad()[i] : 0.0);
    return g;
  };
  const std::vector<double> both = grads(true, true), ga = grads(true, false),
                            gn = grads(false, true);
  for (std::size_t i = 0; i < both.size(); ++i)
    REQUIRE(both[i] == doctest::Approx(ga[i] + gn[i]).epsilon(1e-12));
}

TEST_CASE("sequence loss identities") {
  ToyCandidates toy;
  SUBCASE("singleton n-best has zero gradient") {
    const std::vector<double> c = {0.7};
    for (double g : toy.grad(c)) CHECK(std::abs(g) <= 1e-10);
  }
  SUBCASE("equal costs have zero gradient") {
    const std::vector<double> c = {0.4, 0.4, 0.4};
    for (double g : toy.grad(c)) CHECK(std::abs(g) <= 1e-10);
  }
  SUBCASE("cost shift and probability scale leave the gradient unchanged") {
    const std::vector<double> c = {0.0, 0.5, 1.0, 0.25};
    const std::vector<double> shifted = {3.0, 3.5, 4.0, 3.25};
    const std::vector<double> base = toy.grad(c);
    const std::vector<double> gs = toy.grad(shifted);
    const std::vector<double> gp = toy.grad(c, std::log(17.0));
    double norm = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(base[j] - gs[j]) <= 1e-10);
      CHECK(std::abs(base[j] - gp[j]) <= 1e-10);
      norm += std::abs(base[j]);
    }
    CHECK(norm > 1e-3);
  }
}

TEST_CASE("sequence loss value and errors") {
  Tape tape;
  const std::vector<Tensor> lp = {Tensor::scalar(std::log(1.0)), Tensor::scalar(std::log(3.0))};
  const std::vector<double> c = {1.0, 0.0};
  CHECK(sequence_loss(tape, lp, c).item() == doctest::Approx(0.25).epsilon(1e-14));
  const std::vector<double> short_costs = {1.0};
  CHECK_THROWS_AS(sequence_loss(tape, lp, short_costs), Error);
  CHECK_THROWS_AS(sequence_loss(tape, {}, {}), Error);
  const std::vector<double> bad = {1.0, NAN};
  CHECK_THROWS_AS(sequence_loss(tape, lp, bad), Error);
}

TEST_CASE("sequence loss gradient matches finite differences") {
  ToyCandidates toy;
  const std::vector<double> costs = {0.0, 0.6, 1.0};
  GradCheckOptions o;
  const GradCheckReport r = grad_check(
      [&](Tape &tape) { return sequence_loss(tape, toy.log_probs(tape, 3), costs); },
      ParameterList{{"theta", toy.theta}}, o);
  CHECK_MESSAGE(r.passed, "max rel error ", r.max_rel_error);
}

TEST_CASE("metric costs") {
  const SluAnnotation ref =
      annotation({"play", "jazz", "in", "kitchen"},
                 {{"genre", {"jazz"}}, {"room", {"kitchen"}}}, "play_music");
  for (CostMetric m : {CostMetric::kWer, CostMetric::kSemer, CostMetric::kSluF1})
    CHECK(metric_cost(m, ref, ref) == 0.0);
  const SluAnnotation wrong_slot =
      annotation({"play", "jazz", "in", "kitchen"},
                 {{"genre", {"jazz"}}, {"room", {"hall"}}}, "play_music");
  // Intent counts as a slot: one substitution out of three.
  CHECK(metric_cost(CostMetric::kSemer, wrong_slot, ref) == doctest::Approx(1.0 / 3.0));
  SluAnnotation two = annotation({"a", "b"}, {{"x", {"a"}}, {"y", {"b"}}}, "");
  SluAnnotation two_wrong = annotation({"a", "b"}, {{"x", {"a"}}, {"y", {"c"}}}, "");
  CHECK(metric_cost(CostMetric::kSemer, two_wrong, two) == 0.5);
  const SluAnnotation one_sub = annotation({"play", "rock", "in", "kitchen"}, {}, "");
  const SluAnnotation three = annotation({"play", "jazz", "now"}, {}, "");
  const SluAnnotation three_sub = annotation({"play", "rock", "now"}, {}, "");
  CHECK(metric_cost(CostMetric::kWer, three_sub, three) == doctest::Approx(1.0 / 3.0));
  CHECK(metric_cost(CostMetric::kWer, one_sub, ref) == 0.25);
  CHECK(metric_cost(CostMetric::kSluF1, annotation({}, {}, "play_music"), ref) == 1.0);
}

TEST_CASE("token grouping in word and char mode") {
  const Tokenizer words(TokenizerMode::kWord, {"aa", "bb"});
  const std::vector<int> wt = words.tokenize("bb aa bb");
  const TokenWords tw = group_token_words(words, wt);
  CHECK(tw.words == std::vector<std::string>{"bb", "aa", "bb"});
  CHECK(tw.first_token == std::vector<int>{0, 1, 2});

  const Tokenizer chars = Tokenizer::from_texts(TokenizerMode::kChar, {"ab ba"});
  const std::vector<int> ct = chars.tokenize("ab ba a");
  const TokenWords cw = group_token_words(chars, ct);
  CHECK(cw.words == std::vector<std::string>{"ab", "ba", "a"});
  CHECK(cw.first_token == std::vector<int>{0, 3, 6});
  // Stray boundaries (as a decoder may emit) do not create empty words.
  const std::vector<int> stray = {Tokenizer::kBoundary, ct[0], Tokenizer::kBoundary,
                                  Tokenizer::kBoundary, ct[1]};
  const TokenWords sw = group_token_words(chars, stray);
  CHECK(sw.words.size() == 2);
  CHECK(sw.first_token == std::vector<int>{1, 4});
}

TEST_CASE("reference tags follow the edit alignment onto the hypothesis") {
  const std::vector<std::string> ref = {"play", "jazz", "in", "the", "kitchen"};
  const std::vector<int> tags = {0, 2, 0, 0, 4};
  const std::vector<std::string> same = ref;
  CHECK(align_word_tags(ref, tags, same) == tags);
  const std::vector<std::string> sub = {"play", "rock", "in", "the", "kitchen"};
  CHECK(align_word_tags(ref, tags, sub) == tags);
  const std::vector<std::string> ins = {"play", "uh", "jazz", "in", "the", "kitchen"};
  CHECK(align_word_tags(ref, tags, ins) == std::vector<int>{0, 0, 2, 0, 0, 4});
  const std::vector<std::string> del = {"play", "in", "the", "kitchen"};
  CHECK(align_word_tags(ref, tags, del) == std::vector<int>{0, 0, 0, 4});
  CHECK(align_word_tags(ref, tags, {}).empty());
  const std::vector<std::string> none;
  const std::vector<int> no_tags;
  CHECK(align_word_tags(none, no_tags, sub) == std::vector<int>(5, 0));
}

TEST_CASE("candidate pipeline recovers the reference annotation") {
  const Tokenizer tok(TokenizerMode::kWord, {"play", "jazz", "rock", "in", "kitchen"});
  LabelSet labels;
  labels.intents = {"other", "play_music"};
  labels.domains = {"d", "music"};
  labels.slot_types = {"genre", "room"};
  const AsrConfig cfg = tiny_config(AsrKind::kRnnt, tok.size());
  RnntModel asr(cfg);
  NluShape shape;
  shape.input = InterfaceKind::kText;
  shape.vocab_size = tok.size();
  shape.num_tags = labels.num_tags();
  shape.num_intents = 2;
  shape.num_domains = 2;
  TnluModel nlu(tiny_nlu_config(), shape);
  // Force intent and domain through the output biases.
  const std::vector<int> tags = {0, 2, 0, 4};
  find_param(nlu.params(), "nlu.intent.out.b").mutable_data()[1] = 1e3;
  find_param(nlu.params(), "nlu.domain.out.b").mutable_data()[1] = 1e3;
  std::mt19937_64 rng(1);
  const SluModels models{&asr, &nlu, InterfaceKind::kText, {&tok, &tok}, &labels};
  Hypothesis h;
  h.tokens = tok.tokenize("play jazz in kitchen");
  Tape tape;
  const std::vector<AsrExposure> ex =
      asr.expose_all(tape, random_features(rng, 5, 4), std::span(&h, 1));
  SluCandidate c = run_candidate_through_nlu(tape, ex[0], models);
  CHECK(c.annotation.words == std::vector<std::string>{"play", "jazz", "in", "kitchen"});
  CHECK(c.annotation.intent == "play_music");
  CHECK(c.annotation.domain == "music");
  CHECK(c.log_prob.item() ==
        doctest::Approx(c.asr_log_prob.item() + c.nlu_log_prob.item()).epsilon(1e-14));
  CHECK(c.asr_log_prob.item() == doctest::Approx(ex[0].sequence_log_prob.item()));
  CHECK(c.nlu_log_prob.item() <= 0.0);
  // The candidate's own labels give its nlu log-prob.
  Tape t2;
  const NluOutput o = nlu.forward(t2, text_interface(ex[0], models.tokenizers));
  const int intent = c.prediction.intent;
  double expect = 0.0;
  {
    NluOutput no_domain = o;
    no_domain.domain_logits = Tensor({1, 1});
    expect = -nlu_loss(t2, no_domain, c.prediction.slots, intent, 0).item();
  }
  CHECK(c.nlu_log_prob.item() == doctest::Approx(expect).epsilon(1e-12));
  SluAnnotation ref;
  ref.words = c.annotation.words;
  ref.slots = slots_from_tags(ref.words, tags, labels);
  ref.intent = "play_music";
  ref.domain = "music";
  SluAnnotation forced = c.annotation;
  forced.slots = ref.slots;
  CHECK(metric_cost(CostMetric::kSemer, forced, ref) == 0.0);
}

TEST_CASE("hypothesis slot targets in char mode") {
  const Tokenizer chars = Tokenizer::from_texts(TokenizerMode::kChar, {"ab ba c"});
  const std::vector<std::string> ref = {"ab", "ba", "c"};
  const std::vector<int> ref_tags = {0, 2, 3};
  const std::vector<int> hyp = chars.tokenize("ab c ba c");
  // ab | c | ba | c  ->  "c" is an insertion.
  const std::vector<int> got = hypothesis_slot_targets(chars, hyp, ref, ref_tags);
  const int X = LabelSet::kContinuation;
  CHECK(got == std::vector<int>{0, X, X, 0, X, 2, X, X, 3});
  CHECK(got.size() == hyp.size());
}
