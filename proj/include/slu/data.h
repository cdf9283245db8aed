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

#ifndef SLU_DATA_H_
#define SLU_DATA_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slu/tensor.h"

namespace slu {

struct Slot {
  std::string name;
  std::string value;  // space-separated words
  bool operator==(const Slot &) const = default;
};

struct Utterance {
  std::string id;
  Tensor features;  // T x feature_dim
  std::string transcript;
  std::vector<Slot> slots;  // in transcript order
  std::string intent;
  std::string domain;
};

// Exact equality including the bit patterns of every feature value.
bool same_utterance(const Utterance &a, const Utterance &b);

std::vector<std::string> split_words(std::string_view text);
std::string join_words(const std::vector<std::string> &words);

// ------------------------------------------------------------- tokenizer

enum class TokenizerMode { kWord, kChar };

class Tokenizer {
 public:
  static constexpr int kBlank = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;
  // Char mode only: the word-boundary symbol, always id 3.
  static constexpr int kBoundary = 3;

  Tokenizer() = default;
  // `symbols` are the non-reserved entries (words, or single characters).
  Tokenizer(TokenizerMode mode, std::vector<std::string> symbols);
  static Tokenizer from_texts(TokenizerMode mode,
                              const std::vector<std::string> &texts);

  TokenizerMode mode() const { return mode_; }
  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string &symbol(int id) const;
  const std::vector<std::string> &symbols() const { return symbols_; }

  std::vector<int> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const int> tokens) const;

  // For each token: index of the word it belongs to, and whether it is the
  // word's first token. Char-mode boundary tokens belong to the word before.
  struct TokenWord {
    int word;
    bool first;
  };
  std::vector<TokenWord> word_alignment(std::span<const int> tokens) const;

 private:
  TokenizerMode mode_ = TokenizerMode::kWord;
  std::vector<std::string> symbols_;  // index == id
  std::vector<std::pair<std::string, int>> index_;  // sorted for lookup
  int lookup(std::string_view s) const;
};

std::string_view to_string(TokenizerMode m);
TokenizerMode tokenizer_mode_from_string(std::string_view s);

// ---------------------------------------------------------------- labels

// Label inventories plus the slot tag scheme: 0 = O, 1 = continuation (non
// initial token of a split word), 2+2k = B-k, 3+2k = I-k.
struct LabelSet {
  std::vector<std::string> intents;
  std::vector<std::string> domains;
  std::vector<std::string> slot_types;

  static constexpr int kOutside = 0;
  static constexpr int kContinuation = 1;

  int num_tags() const { return 2 + 2 * static_cast<int>(slot_types.size()); }
  int intent_id(std::string_view name) const;
  int domain_id(std::string_view name) const;
  int slot_type_id(std::string_view name) const;
  static int begin_tag(int slot_type) { return 2 + 2 * slot_type; }
  static int inside_tag(int slot_type) { return 3 + 2 * slot_type; }

  static LabelSet from_utterances(const std::vector<Utterance> &utts);
};

// Word-level BIO tags of an utterance; slot values are located left to right
// in the transcript. Throws if a slot value is not a span after the previous.
std::vector<int> word_slot_tags(const Utterance &utt, const LabelSet &labels);

// Rebuilds slots from words and word-level tags (I without a matching open
// slot starts a new one).
std::vector<Slot> slots_from_tags(const std::vector<std::string> &words,
                                  std::span<const int> word_tags,
                                  const LabelSet &labels);

// Word tags expanded to tokens: first token keeps the tag, the rest get
// the continuation tag.
std::vector<int> token_tags_from_word_tags(const Tokenizer &tok,
                                           std::span<const int> tokens,
                                           std::span<const int> word_tags);
// Inverse: tag of each word = tag of its first token.
std::vector<int> word_tags_from_token_tags(const Tokenizer &tok,
                                           std::span<const int> tokens,
                                           std::span<const int> token_tags);

// ------------------------------------------------------------ generation

struct GrammarIntent {
  std::string name;
  std::string domain;
  // Patterns such as "turn on the {device} in {place}".
  std::vector<std::string> patterns;
};

struct Grammar {
  std::vector<std::pair<std::string, std::vector<std::string>>> slot_lexicons;
  std::vector<GrammarIntent> intents;
};

struct CorpusSpec {
  int vocab_size = 48;
  int num_intents = 8;
  int num_slot_types = 4;
  int num_domains = 3;
  // Empty -> generated deterministically from the counts above and `seed`.
  Grammar grammar;
  int utterance_count = 500;
  int feature_dim = 16;
  int frames_min = 1;
  int frames_max = 3;
  double noise_std = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// Resolves the grammar (explicit or generated).
Grammar resolve_grammar(const CorpusSpec &spec);

std::vector<Utterance> generate_corpus(const CorpusSpec &spec);

// Fixed unit-norm prototype vector of a word (depends on spec.seed and the
// word string only).
std::vector<double> word_prototype(const std::string &word,
                                   const CorpusSpec &spec);

// k frames per word, k uniform in [frames_min, frames_max], each frame the
// word prototype plus N(0, noise_std^2) noise.
Tensor synth_audio(const std::vector<std::string> &words,
                   const CorpusSpec &spec, std::uint64_t seed);

struct CorpusSplits {
  std::vector<Utterance> train, dev, test;
};
// 80/10/10 by ordering on a stable hash of the utterance id.
CorpusSplits split_corpus(const std::vector<Utterance> &utts);

std::uint64_t stable_hash(std::string_view s);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

// ------------------------------------------------------------------ files

// One JSON object per line: id, features, transcript, slots, intent, domain.
void write_dataset(const std::string &path, const std::vector<Utterance> &utts);
std::vector<Utterance> read_dataset(const std::string &path);

std::string corpus_spec_to_json(const CorpusSpec &spec);
CorpusSpec corpus_spec_from_json(const std::string &text);

}  // namespace slu

#endif  // SLU_DATA_H_
