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

// Recognition and understanding metrics: WER, SER, ICER/IntAcc, SemER and
// SLU-F1, per utterance and pooled over a corpus.

#ifndef SLU_METRICS_H_
#define SLU_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slu/data.h"

namespace slu {

struct EditCounts {
  long sub = 0;
  long ins = 0;
  long del = 0;
  long ref_len = 0;

  long errors() const { return sub + ins + del; }
  EditCounts &operator+=(const EditCounts &o);
};

// Levenshtein alignment. On equal cost the backtrace prefers substitution,
// then insertion, then deletion. Empty references are allowed here.
EditCounts edit_counts(std::span<const std::string> ref,
                       std::span<const std::string> hyp);
// Character-level counts over the raw strings, spaces included.
EditCounts char_edit_counts(std::string_view ref, std::string_view hyp);

// Word error rate as a fraction. Throws on an empty reference.
double wer(std::span<const std::string> ref, std::span<const std::string> hyp);

// Percentage of utterances with at least one word error.
double ser(const std::vector<std::vector<std::string>> &refs,
           const std::vector<std::vector<std::string>> &hyps);

struct IntentScore {
  double icer = 0.0;     // percent
  double int_acc = 0.0;  // percent
};
IntentScore icer_intacc(const std::vector<std::string> &ref_intents,
                        const std::vector<std::string> &hyp_intents);

struct SluAnnotation {
  std::vector<std::string> words;
  std::vector<Slot> slots;
  std::string intent;
  std::string domain;

  static SluAnnotation from_utterance(const Utterance &u);
};

// Result of pairing reference and hypothesis slots. Exact (name, value)
// matches are taken first in order of appearance, then remaining slots
// pair up by name alone as substitutions.
struct SlotAlignment {
  std::vector<std::pair<int, int>> exact;          // (ref, hyp)
  std::vector<std::pair<int, int>> substitutions;  // (ref, hyp)
  std::vector<int> deleted;                        // ref indices
  std::vector<int> inserted;                       // hyp indices
};
SlotAlignment align_slots(const std::vector<Slot> &ref,
                          const std::vector<Slot> &hyp);

struct SlotErrors {
  long sub = 0;
  long ins = 0;
  long del = 0;
  long ref_slots = 0;

  long errors() const { return sub + ins + del; }
  SlotErrors &operator+=(const SlotErrors &o);
};

// Counts with the intent treated as one extra slot named "intent".
SlotErrors semer_counts(const SluAnnotation &ref, const SluAnnotation &hyp);
// Fraction; may exceed 1. Throws if the reference has no slots at all.
double semer(const SluAnnotation &ref, const SluAnnotation &hyp);

struct F1Tally {
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;

  // 1 when there is nothing to score.
  double f1() const;
  F1Tally &operator+=(const F1Tally &o);
};

struct SluF1Tallies {
  F1Tally word;
  F1Tally chars;

  double f1() const { return 0.5 * (word.f1() + chars.f1()); }
  SluF1Tallies &operator+=(const SluF1Tallies &o);
};

// Slot-only tallies; substitutions are partial TPs weighted by the clamped
// word and character error rates of the value.
SluF1Tallies slu_f1_tallies(const SluAnnotation &ref, const SluAnnotation &hyp);
double slu_f1(const SluAnnotation &ref, const SluAnnotation &hyp);

struct MetricReport {
  std::optional<double> wer;  // percent; unset when scoring reference text
  double ser = 0.0;           // percent
  double icer = 0.0;          // percent
  double int_acc = 0.0;       // percent
  double semer = 0.0;         // percent
  double slu_f1 = 0.0;        // ratio in [0, 1]

  long utterances = 0;
  long utterances_with_word_errors = 0;
  long intent_errors = 0;
  EditCounts words;
  SlotErrors slots;
  SluF1Tallies f1;

  std::string to_json() const;
};

// Pools raw counts over the corpus before forming rates. With
// score_transcripts=false the word-level fields are left empty.
MetricReport evaluate_corpus(const std::vector<SluAnnotation> &refs,
                             const std::vector<SluAnnotation> &hyps,
                             bool score_transcripts = true);

}  // namespace slu

#endif  // SLU_METRICS_H_
