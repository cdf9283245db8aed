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

#include "slu/metrics.h"

#include <algorithm>

#include "json.hpp"
#include "slu/error.h"

namespace slu {

namespace {

template <typename Seq>
EditCounts levenshtein(const Seq &ref, const Seq &hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<long> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> long & { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<long>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<long>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1),
                           at(i, j - 1) + 1, at(i - 1, j) + 1});
  EditCounts c;
  c.ref_len = static_cast<long>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++c.sub;
        --i, --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++c.ins;
      --j;
    } else {
      ++c.del;
      --i;
    }
  }
  return c;
}

double percent(long num, long den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::vector<Slot> with_intent(const SluAnnotation &a) {
  std::vector<Slot> out;
  if (!a.intent.empty()) out.push_back({"intent", a.intent});
  out.insert(out.end(), a.slots.begin(), a.slots.end());
  return out;
}

}  // namespace

EditCounts &EditCounts::operator+=(const EditCounts &o) {
  sub += o.sub;
  ins += o.ins;
  del += o.del;
  ref_len += o.ref_len;
  return *this;
}

EditCounts edit_counts(std::span<const std::string> ref,
                       std::span<const std::string> hyp) {
  return levenshtein(ref, hyp);
}

EditCounts char_edit_counts(std::string_view ref, std::string_view hyp) {
  return levenshtein(ref, hyp);
}

double wer(std::span<const std::string> ref, std::span<const std::string> hyp) {
  SLU_CHECK(!ref.empty(), "wer: empty reference");
  const EditCounts c = edit_counts(ref, hyp);
  return static_cast<double>(c.errors()) / static_cast<double>(c.ref_len);
}

double ser(const std::vector<std::vector<std::string>> &refs,
           const std::vector<std::vector<std::string>> &hyps) {
  SLU_CHECK(!refs.empty(), "ser: empty corpus");
  SLU_CHECK(refs.size() == hyps.size(), "ser: ", refs.size(),
            " references but ", hyps.size(), " hypotheses");
  long bad = 0;
  for (std::size_t i = 0; i < refs.size(); ++i)
    bad += edit_counts(refs[i], hyps[i]).errors() > 0;
  return percent(bad, static_cast<long>(refs.size()));
}

IntentScore icer_intacc(const std::vector<std::string> &ref_intents,
                        const std::vector<std::string> &hyp_intents) {
  SLU_CHECK(!ref_intents.empty(), "icer: empty corpus");
  SLU_CHECK(ref_intents.size() == hyp_intents.size(), "icer: ",
            ref_intents.size(), " references but ", hyp_intents.size(),
            " hypotheses");
  long wrong = 0;
  for (std::size_t i = 0; i < ref_intents.size(); ++i)
    wrong += ref_intents[i] != hyp_intents[i];
  IntentScore s;
  s.icer = percent(wrong, static_cast<long>(ref_intents.size()));
  s.int_acc = 100.0 - s.icer;
  return s;
}

SluAnnotation SluAnnotation::from_utterance(const Utterance &u) {
  return SluAnnotation{split_words(u.transcript), u.slots, u.intent, u.domain};
}

SlotAlignment align_slots(const std::vector<Slot> &ref,
                          const std::vector<Slot> &hyp) {
  SlotAlignment a;
  std::vector<char> ref_used(ref.size(), 0), hyp_used(hyp.size(), 0);
  for (std::size_t r = 0; r < ref.size(); ++r)
    for (std::size_t h = 0; h < hyp.size(); ++h)
      if (!hyp_used[h] && hyp[h] == ref[r]) {
        a.exact.emplace_back(r, h);
        ref_used[r] = hyp_used[h] = 1;
        break;
      }
  for (std::size_t r = 0; r < ref.size(); ++r) {
    if (ref_used[r]) continue;
    for (std::size_t h = 0; h < hyp.size(); ++h)
      if (!hyp_used[h] && hyp[h].name == ref[r].name) {
        a.substitutions.emplace_back(r, h);
        ref_used[r] = hyp_used[h] = 1;
        break;
      }
    if (!ref_used[r]) a.deleted.push_back(static_cast<int>(r));
  }
  for (std::size_t h = 0; h < hyp.size(); ++h)
    if (!hyp_used[h]) a.inserted.push_back(static_cast<int>(h));
  return a;
}

SlotErrors &SlotErrors::operator+=(const SlotErrors &o) {
  sub += o.sub;
  ins += o.ins;
  del += o.del;
  ref_slots += o.ref_slots;
  return *this;
}

SlotErrors semer_counts(const SluAnnotation &ref, const SluAnnotation &hyp) {
  const std::vector<Slot> r = with_intent(ref), h = with_intent(hyp);
  const SlotAlignment a = align_slots(r, h);
  SlotErrors e;
  e.sub = static_cast<long>(a.substitutions.size());
  e.ins = static_cast<long>(a.inserted.size());
  e.del = static_cast<long>(a.deleted.size());
  e.ref_slots = static_cast<long>(r.size());
  return e;
}

double semer(const SluAnnotation &ref, const SluAnnotation &hyp) {
  const SlotErrors e = semer_counts(ref, hyp);
  SLU_CHECK(e.ref_slots > 0, "semer: reference has neither intent nor slots");
  return static_cast<double>(e.errors()) / static_cast<double>(e.ref_slots);
}

double F1Tally::f1() const {
  const double den = 2.0 * tp + fp + fn;
  return den == 0.0 ? 1.0 : 2.0 * tp / den;
}

F1Tally &F1Tally::operator+=(const F1Tally &o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

SluF1Tallies &SluF1Tallies::operator+=(const SluF1Tallies &o) {
  word += o.word;
  chars += o.chars;
  return *this;
}

SluF1Tallies slu_f1_tallies(const SluAnnotation &ref, const SluAnnotation &hyp) {
  const SlotAlignment a = align_slots(ref.slots, hyp.slots);
  SluF1Tallies t;
  const double exact = static_cast<double>(a.exact.size());
  t.word.tp = t.chars.tp = exact;
  t.word.fn = t.chars.fn = static_cast<double>(a.deleted.size());
  t.word.fp = t.chars.fp = static_cast<double>(a.inserted.size());
  for (const auto &[r, h] : a.substitutions) {
    const std::string &rv = ref.slots[r].value, &hv = hyp.slots[h].value;
    const std::vector<std::string> rw = split_words(rv), hw = split_words(hv);
    const EditCounts wc = edit_counts(rw, hw);
    const EditCounts cc = char_edit_counts(rv, hv);
    auto rate = [](const EditCounts &c) {
      if (c.ref_len == 0) return 1.0;
      return std::clamp(static_cast<double>(c.errors()) / c.ref_len, 0.0, 1.0);
    };
    const double dw = rate(wc), dc = rate(cc);
    t.word.tp += 1.0 - dw;
    t.word.fn += dw;
    t.word.fp += dw;
    t.chars.tp += 1.0 - dc;
    t.chars.fn += dc;
    t.chars.fp += dc;
  }
  return t;
}

double slu_f1(const SluAnnotation &ref, const SluAnnotation &hyp) {
  return slu_f1_tallies(ref, hyp).f1();
}

std::string MetricReport::to_json() const {
  using nlohmann::json;
  json j;
  j["wer"] = wer ? json(*wer) : json(nullptr);
  j["ser"] = wer ? json(ser) : json(nullptr);
  j["icer"] = icer;
  j["int_acc"] = int_acc;
  j["semer"] = semer;
  j["slu_f1"] = slu_f1;
  j["utterances"] = utterances;
  j["utterances_with_word_errors"] = utterances_with_word_errors;
  j["intent_errors"] = intent_errors;
  j["word_edits"] = {{"sub", words.sub}, {"ins", words.ins},
                     {"del", words.del}, {"ref_len", words.ref_len}};
  j["slot_errors"] = {{"sub", slots.sub}, {"ins", slots.ins},
                      {"del", slots.del}, {"ref_slots", slots.ref_slots}};
  j["f1_word"] = {{"tp", f1.word.tp}, {"fp", f1.word.fp}, {"fn", f1.word.fn},
                  {"f1", f1.word.f1()}};
  j["f1_char"] = {{"tp", f1.chars.tp}, {"fp", f1.chars.fp},
                  {"fn", f1.chars.fn}, {"f1", f1.chars.f1()}};
  return j.dump(2);
}

MetricReport evaluate_corpus(const std::vector<SluAnnotation> &refs,
                             const std::vector<SluAnnotation> &hyps,
                             bool score_transcripts) {
  SLU_CHECK(refs.size() == hyps.size(), "evaluate_corpus: ", refs.size(),
            " references but ", hyps.size(), " hypotheses");
  SLU_CHECK(!refs.empty(), "evaluate_corpus: empty corpus");
  MetricReport m;
  m.utterances = static_cast<long>(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (score_transcripts) {
      const EditCounts c = edit_counts(refs[i].words, hyps[i].words);
      m.words += c;
      m.utterances_with_word_errors += c.errors() > 0;
    }
    m.intent_errors += refs[i].intent != hyps[i].intent;
    m.slots += semer_counts(refs[i], hyps[i]);
    m.f1 += slu_f1_tallies(refs[i], hyps[i]);
  }
  if (score_transcripts) {
    SLU_CHECK(m.words.ref_len > 0, "evaluate_corpus: all references are empty");
    m.wer = percent(m.words.errors(), m.words.ref_len);
    m.ser = percent(m.utterances_with_word_errors, m.utterances);
  }
  m.icer = percent(m.intent_errors, m.utterances);
  m.int_acc = 100.0 - m.icer;
  SLU_CHECK(m.slots.ref_slots > 0, "evaluate_corpus: no reference slots");
  m.semer = percent(m.slots.errors(), m.slots.ref_slots);
  m.slu_f1 = m.f1.f1();
  return m;
}

}  // namespace slu
