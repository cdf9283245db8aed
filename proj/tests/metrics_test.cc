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

#include <algorithm>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "slu/error.h"
#include "slu/metrics.h"

using namespace slu;

namespace {

std::vector<std::string> W(const char *s) { return split_words(s); }

// Minimum edit cost by trying every edit script, no memoisation.
long exhaustive_edits(const std::vector<std::string> &r, std::size_t i,
                      const std::vector<std::string> &h, std::size_t j) {
  if (i == r.size()) return static_cast<long>(h.size() - j);
  if (j == h.size()) return static_cast<long>(r.size() - i);
  const long keep = exhaustive_edits(r, i + 1, h, j + 1) + (r[i] == h[j] ? 0 : 1);
  const long ins = exhaustive_edits(r, i, h, j + 1) + 1;
  const long del = exhaustive_edits(r, i + 1, h, j) + 1;
  return std::min({keep, ins, del});
}

std::vector<std::string> random_words(std::mt19937_64 &rng, std::size_t max_len,
                                      std::size_t min_len = 0) {
  static const char *kPool[] = {"a", "b", "c", "d"};
  std::vector<std::string> out(min_len + rng() % (max_len - min_len + 1));
  for (auto &w : out) w = kPool[rng() % 4];
  return out;
}

SluAnnotation ann(const char *words, std::vector<Slot> slots,
                  const char *intent = "on", const char *domain = "home") {
  return SluAnnotation{W(words), std::move(slots), intent, domain};
}

SluAnnotation random_annotation(std::mt19937_64 &rng) {
  static const char *kNames[] = {"device", "place", "time"};
  static const char *kValues[] = {"lamp", "fan", "living room", "kitchen", "now"};
  static const char *kIntents[] = {"on", "off", "set"};
  SluAnnotation a;
  a.words = random_words(rng, 6, 1);
  a.intent = kIntents[rng() % 3];
  a.domain = "home";
  const int n = static_cast<int>(rng() % 4);
  for (int i = 0; i < n; ++i) a.slots.push_back({kNames[rng() % 3], kValues[rng() % 5]});
  return a;
}

}  // namespace

TEST_CASE("wer examples") {
  CHECK(wer(W("turn on lights"), W("turn on lights")) == 0.0);
  CHECK(wer(W("turn on lights"), W("turn off lights")) == doctest::Approx(1.0 / 3));
  const EditCounts c = edit_counts(W("turn on lights"), {});
  CHECK(c.del == 3);
  CHECK(wer(W("turn on lights"), {}) == 1.0);
  CHECK_THROWS_AS(wer({}, W("a")), Error);
  CHECK(edit_counts({}, W("a b")).ins == 2);
}

TEST_CASE("alignment tie-break prefers substitution, then insertion") {
  // "a b" vs "c": one sub plus one del rather than two dels and an ins.
  EditCounts c = edit_counts(W("a b"), W("c"));
  CHECK(c.sub == 1);
  CHECK(c.del == 1);
  CHECK(c.ins == 0);
  // "a" vs "b a": the insertion keeps "a" aligned.
  c = edit_counts(W("a"), W("b a"));
  CHECK(c.ins == 1);
  CHECK(c.sub == 0);
}

TEST_CASE("wer dynamic program agrees with exhaustive edit scripts") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto r = random_words(rng, 6), h = random_words(rng, 6);
    const EditCounts c = edit_counts(r, h);
    CHECK(c.errors() == exhaustive_edits(r, 0, h, 0));
    CHECK(c.ins - c.del == static_cast<long>(h.size()) - static_cast<long>(r.size()));
    CHECK(c.ref_len == static_cast<long>(r.size()));
  }
}

TEST_CASE("ser counts utterances with errors") {
  std::vector<std::vector<std::string>> refs{W("a b"), W("c"), W("d e"), W("f")};
  CHECK(ser(refs, refs) == 0.0);
  auto hyps = refs;
  hyps[2] = W("d");
  CHECK(ser(refs, hyps) == 25.0);
  CHECK_THROWS_AS(ser({}, {}), Error);

  std::mt19937_64 rng(3);
  refs.clear();
  hyps.clear();
  long bad = 0;
  for (int i = 0; i < 200; ++i) {
    refs.push_back(random_words(rng, 4, 1));
    hyps.push_back(random_words(rng, 4));
    bad += refs.back() != hyps.back();
  }
  CHECK(ser(refs, hyps) == doctest::Approx(100.0 * bad / 200));
}

TEST_CASE("icer and intent accuracy") {
  IntentScore s = icer_intacc({"a", "b"}, {"a", "b"});
  CHECK(s.icer == 0.0);
  CHECK(s.int_acc == 100.0);
  std::vector<std::string> r(8, "x"), h(8, "x");
  h[1] = h[5] = "y";
  s = icer_intacc(r, h);
  CHECK(s.icer == 25.0);
  CHECK(s.int_acc == 75.0);
  CHECK_THROWS_AS(icer_intacc({}, {}), Error);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::string> a(1 + rng() % 13), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = std::to_string(rng() % 3);
      b[i] = std::to_string(rng() % 3);
    }
    s = icer_intacc(a, b);
    CHECK(s.icer + s.int_acc == 100.0);
  }
}

TEST_CASE("semer hand alignments") {
  const SluAnnotation ref = ann("turn on lights", {{"device", "lights"}});
  CHECK(semer(ref, ref) == 0.0);
  const SluAnnotation sub = ann("turn on fan", {{"device", "fan"}});
  const SlotErrors e = semer_counts(ref, sub);
  CHECK(e.sub == 1);
  CHECK(e.ins + e.del == 0);
  CHECK(semer(ref, sub) == 0.5);
  CHECK(semer(ref, SluAnnotation{}) == 1.0);
  // Wrong intent plus an extra slot: one sub, one ins over two slots.
  const SluAnnotation extra =
      ann("turn off lights now", {{"device", "lights"}, {"time", "now"}}, "off");
  CHECK(semer(ref, extra) == 1.0);
  // Many insertions push SemER above one.
  const SluAnnotation many = ann("x", {{"device", "lights"}, {"a", "1"}, {"b", "2"}, {"c", "3"}});
  CHECK(semer(ref, many) == 1.5);
  CHECK_THROWS_AS(semer(SluAnnotation{}, ref), Error);
}

TEST_CASE("duplicate slot names pair in order of appearance") {
  const std::vector<Slot> ref{{"device", "lamp"}, {"device", "fan"}};
  const std::vector<Slot> hyp{{"device", "fan"}, {"device", "tv"}};
  const SlotAlignment a = align_slots(ref, hyp);
  REQUIRE(a.exact.size() == 1);
  CHECK(a.exact[0] == std::make_pair(1, 0));
  REQUIRE(a.substitutions.size() == 1);
  CHECK(a.substitutions[0] == std::make_pair(0, 1));
}

TEST_CASE("slu-f1 worked substitution example") {
  const SluAnnotation ref = ann("living room lights", {{"device", "living room lights"}});
  const SluAnnotation hyp = ann("living lights", {{"device", "living lights"}});
  const SluF1Tallies t = slu_f1_tallies(ref, hyp);
  CHECK(t.word.tp == doctest::Approx(2.0 / 3));
  CHECK(t.word.fp == doctest::Approx(1.0 / 3));
  CHECK(t.word.fn == doctest::Approx(1.0 / 3));
  CHECK(t.word.f1() == doctest::Approx(2.0 / 3));
  CHECK(t.chars.tp == doctest::Approx(13.0 / 18));
  CHECK(t.chars.f1() == doctest::Approx(13.0 / 18));
  CHECK(slu_f1(ref, hyp) == doctest::Approx(25.0 / 36));
  CHECK(slu_f1(ref, ref) == 1.0);
  CHECK(slu_f1(ref, ann("x", {})) == 0.0);
}

TEST_CASE("slu-f1 bounds and exactness") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 500; ++t) {
    const SluAnnotation r = random_annotation(rng), h = random_annotation(rng);
    const double f = slu_f1(r, h);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    const SlotAlignment a = align_slots(r.slots, h.slots);
    const bool all_exact = a.substitutions.empty() && a.deleted.empty() && a.inserted.empty();
    CHECK((f == 1.0) == all_exact);
    CHECK(semer(r, r) == 0.0);
    const SlotErrors e = semer_counts(r, h);
    CHECK((e.errors() == 0) == (all_exact && r.intent == h.intent));
  }
}

TEST_CASE("corpus evaluation pools tallies") {
  std::mt19937_64 rng(4);
  std::vector<SluAnnotation> refs, hyps;
  for (int i = 0; i < 60; ++i) {
    refs.push_back(random_annotation(rng));
    hyps.push_back(random_annotation(rng));
    if (i % 3 == 0) hyps.back() = refs.back();
  }
  const MetricReport m = evaluate_corpus(refs, hyps);
  long edits = 0, len = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    edits += exhaustive_edits(refs[i].words, 0, hyps[i].words, 0);
    len += static_cast<long>(refs[i].words.size());
  }
  REQUIRE(m.wer.has_value());
  CHECK(*m.wer == doctest::Approx(100.0 * edits / len));
  CHECK(m.int_acc + m.icer == 100.0);

  const MetricReport one = evaluate_corpus({refs[1]}, {hyps[1]});
  CHECK(*one.wer == doctest::Approx(100.0 * wer(refs[1].words, hyps[1].words)));
  CHECK(one.semer == doctest::Approx(100.0 * semer(refs[1], hyps[1])));
  CHECK(one.slu_f1 == doctest::Approx(slu_f1(refs[1], hyps[1])));

  auto refs2 = refs, hyps2 = hyps;
  refs2.insert(refs2.end(), refs.begin(), refs.end());
  hyps2.insert(hyps2.end(), hyps.begin(), hyps.end());
  const MetricReport d = evaluate_corpus(refs2, hyps2);
  CHECK(*d.wer == doctest::Approx(*m.wer).epsilon(1e-14));
  CHECK(d.ser == doctest::Approx(m.ser).epsilon(1e-14));
  CHECK(d.icer == doctest::Approx(m.icer).epsilon(1e-14));
  CHECK(d.semer == doctest::Approx(m.semer).epsilon(1e-14));
  CHECK(d.slu_f1 == doctest::Approx(m.slu_f1).epsilon(1e-14));

  CHECK_THROWS_AS(evaluate_corpus(refs, {}), Error);
  const MetricReport text = evaluate_corpus(refs, hyps, false);
  CHECK_FALSE(text.wer.has_value());
  const auto j = nlohmann::json::parse(text.to_json());
  CHECK(j["wer"].is_null());
  for (const char *k : {"icer", "int_acc", "semer", "slu_f1", "slot_errors", "f1_word"})
    CHECK(j.contains(k));
}
