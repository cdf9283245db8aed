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

#include "slu/data.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "slu/error.h"

namespace slu {

using nlohmann::json;

bool same_utterance(const Utterance &a, const Utterance &b) {
  if (a.id != b.id || a.transcript != b.transcript || a.slots != b.slots ||
      a.intent != b.intent || a.domain != b.domain)
    return false;
  if (a.features.defined() != b.features.defined()) return false;
  if (!a.features.defined()) return true;
  if (a.features.shape() != b.features.shape()) return false;
  return std::memcmp(a.features.data().data(), b.features.data().data(),
                     a.features.numel() * sizeof(double)) == 0;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_words(const std::vector<std::string> &words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

// ------------------------------------------------------------- tokenizer

Tokenizer::Tokenizer(TokenizerMode mode, std::vector<std::string> symbols)
    : mode_(mode) {
  symbols_ = {"<blank>", "</s>", "<unk>"};
  if (mode_ == TokenizerMode::kChar) symbols_.push_back("|");
  std::set<std::string> seen(symbols_.begin(), symbols_.end());
  for (std::string &s : symbols) {
    SLU_CHECK(!s.empty(), "empty tokenizer symbol");
    if (mode_ == TokenizerMode::kChar)
      SLU_CHECK(s.size() == 1, "char tokenizer symbol '", s,
                "' is not a single character");
    if (seen.insert(s).second) symbols_.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i)
    index_.emplace_back(symbols_[i], static_cast<int>(i));
  std::sort(index_.begin(), index_.end());
}

Tokenizer Tokenizer::from_texts(TokenizerMode mode,
                                const std::vector<std::string> &texts) {
  std::set<std::string> units;
  for (const std::string &t : texts)
    for (const std::string &w : split_words(t)) {
      if (mode == TokenizerMode::kWord) {
        units.insert(w);
      } else {
        for (char c : w) units.insert(std::string(1, c));
      }
    }
  return Tokenizer(mode, std::vector<std::string>(units.begin(), units.end()));
}

const std::string &Tokenizer::symbol(int id) const {
  SLU_CHECK(id >= 0 && id < size(), "token id ", id, " outside vocabulary of ",
            size());
  return symbols_[id];
}

int Tokenizer::lookup(std::string_view s) const {
  auto it = std::lower_bound(
      index_.begin(), index_.end(), s,
      [](const std::pair<std::string, int> &e, std::string_view k) {
        return std::string_view(e.first) < k;
      });
  if (it != index_.end() && it->first == s) return it->second;
  return kUnk;
}

std::vector<int> Tokenizer::tokenize(std::string_view text) const {
  std::vector<int> out;
  const std::vector<std::string> words = split_words(text);
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (mode_ == TokenizerMode::kWord) {
      out.push_back(lookup(words[w]));
    } else {
      if (w) out.push_back(kBoundary);
      for (char c : words[w]) out.push_back(lookup(std::string_view(&c, 1)));
    }
  }
  return out;
}

std::string Tokenizer::detokenize(std::span<const int> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int id = tokens[i];
    if (mode_ == TokenizerMode::kWord) {
      if (i) out += ' ';
      out += symbol(id);
    } else {
      out += id == kBoundary ? std::string(" ") : symbol(id);
    }
  }
  return out;
}

std::vector<Tokenizer::TokenWord> Tokenizer::word_alignment(
    std::span<const int> tokens) const {
  std::vector<TokenWord> out;
  out.reserve(tokens.size());
  if (mode_ == TokenizerMode::kWord) {
    for (std::size_t i = 0; i < tokens.size(); ++i)
      out.push_back({static_cast<int>(i), true});
    return out;
  }
  int word = 0;
  bool at_start = true;
  for (int id : tokens) {
    if (id == kBoundary) {
      out.push_back({word, false});
      ++word;
      at_start = true;
    } else {
      out.push_back({word, at_start});
      at_start = false;
    }
  }
  return out;
}

std::string_view to_string(TokenizerMode m) {
  return m == TokenizerMode::kWord ? "word" : "char";
}

TokenizerMode tokenizer_mode_from_string(std::string_view s) {
  if (s == "word") return TokenizerMode::kWord;
  if (s == "char") return TokenizerMode::kChar;
  throw ConfigError(internal::StrCat("unknown tokenizer mode '", s,
                                     "' (expected word|char)"));
}

// ---------------------------------------------------------------- labels

namespace {
int find_label(const std::vector<std::string> &v, std::string_view name,
               const char *what) {
  auto it = std::find(v.begin(), v.end(), name);
  SLU_CHECK(it != v.end(), "unknown ", what, " '", name, "'");
  return static_cast<int>(it - v.begin());
}
}  // namespace

int LabelSet::intent_id(std::string_view name) const {
  return find_label(intents, name, "intent");
}
int LabelSet::domain_id(std::string_view name) const {
  return find_label(domains, name, "domain");
}
int LabelSet::slot_type_id(std::string_view name) const {
  return find_label(slot_types, name, "slot type");
}

LabelSet LabelSet::from_utterances(const std::vector<Utterance> &utts) {
  std::set<std::string> in, dom, st;
  for (const Utterance &u : utts) {
    in.insert(u.intent);
    dom.insert(u.domain);
    for (const Slot &s : u.slots) st.insert(s.name);
  }
  return LabelSet{{in.begin(), in.end()}, {dom.begin(), dom.end()},
                  {st.begin(), st.end()}};
}

std::vector<int> word_slot_tags(const Utterance &utt, const LabelSet &labels) {
  const std::vector<std::string> words = split_words(utt.transcript);
  std::vector<int> tags(words.size(), LabelSet::kOutside);
  std::size_t pos = 0;
  for (const Slot &s : utt.slots) {
    const std::vector<std::string> value = split_words(s.value);
    SLU_CHECK(!value.empty(), "utterance ", utt.id, ": empty value for slot ",
              s.name);
    std::size_t found = words.size();
    for (std::size_t i = pos; i + value.size() <= words.size(); ++i)
      if (std::equal(value.begin(), value.end(), words.begin() + i)) {
        found = i;
        break;
      }
    SLU_CHECK(found < words.size(), "utterance ", utt.id, ": slot value '",
              s.value, "' is not a span of the transcript");
    const int type = labels.slot_type_id(s.name);
    tags[found] = LabelSet::begin_tag(type);
    for (std::size_t k = 1; k < value.size(); ++k)
      tags[found + k] = LabelSet::inside_tag(type);
    pos = found + value.size();
  }
  return tags;
}

std::vector<Slot> slots_from_tags(const std::vector<std::string> &words,
                                  std::span<const int> word_tags,
                                  const LabelSet &labels) {
  SLU_CHECK(words.size() == word_tags.size(), "slots_from_tags: ",
            words.size(), " words but ", word_tags.size(), " tags");
  std::vector<Slot> out;
  int open = -1;  // slot type of the currently open slot
  for (std::size_t i = 0; i < words.size(); ++i) {
    const int tag = word_tags[i];
    if (tag < 2 || tag >= labels.num_tags()) {
      open = -1;
      continue;
    }
    const int type = (tag - 2) / 2;
    const bool inside = (tag - 2) % 2 == 1;
    if (inside && open == type) {
      out.back().value += " " + words[i];
    } else {
      out.push_back({labels.slot_types[type], words[i]});
      open = type;
    }
  }
  return out;
}

std::vector<int> token_tags_from_word_tags(const Tokenizer &tok,
                                           std::span<const int> tokens,
                                           std::span<const int> word_tags) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const Tokenizer::TokenWord &tw : tok.word_alignment(tokens)) {
    SLU_CHECK(tw.word < static_cast<int>(word_tags.size()),
              "token maps to word ", tw.word, " but only ", word_tags.size(),
              " word tags");
    out.push_back(tw.first ? word_tags[tw.word] : LabelSet::kContinuation);
  }
  return out;
}

std::vector<int> word_tags_from_token_tags(const Tokenizer &tok,
                                           std::span<const int> tokens,
                                           std::span<const int> token_tags) {
  SLU_CHECK(tokens.size() == token_tags.size(), "token/tag length mismatch");
  std::vector<int> out;
  const auto align = tok.word_alignment(tokens);
  for (std::size_t i = 0; i < align.size(); ++i)
    if (align[i].first) out.push_back(token_tags[i]);
  return out;
}

// ------------------------------------------------------------ generation

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);  // splitmix64
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void CorpusSpec::validate() const {
  if (grammar.intents.empty()) {
    SLU_CHECK(num_intents >= 1 && num_domains >= 1 && num_slot_types >= 1,
              "corpus spec needs at least one intent, domain and slot type");
    SLU_CHECK(vocab_size >= num_slot_types, "vocab_size (", vocab_size,
              ") must be >= num_slot_types (", num_slot_types, ")");
  }
  SLU_CHECK(utterance_count >= 0, "utterance_count must be >= 0");
  SLU_CHECK(feature_dim >= 1, "feature_dim must be >= 1");
  SLU_CHECK(frames_min >= 1 && frames_max >= frames_min,
            "frames_per_token range [", frames_min, ", ", frames_max,
            "] invalid (min must be >= 1 and <= max)");
  SLU_CHECK(noise_std >= 0.0, "noise_std must be >= 0");
}

namespace {

std::vector<std::string> make_words(int count, std::uint64_t seed) {
  static const char *kOnsets[] = {"b", "d", "f", "g", "k", "l", "m",
                                  "n", "p", "r", "s", "t", "v", "z"};
  static const char *kVowels[] = {"a", "e", "i", "o", "u"};
  std::vector<std::string> syllables;
  for (const char *c : kOnsets)
    for (const char *v : kVowels) syllables.push_back(std::string(c) + v);
  std::vector<std::string> all;
  for (const std::string &a : syllables)
    for (const std::string &b : syllables)
      if (a != b) all.push_back(a + b);
  std::mt19937_64 rng(mix_seed(seed, 0x5eed));
  std::shuffle(all.begin(), all.end(), rng);
  SLU_CHECK(count <= static_cast<int>(all.size()), "vocab_size ", count,
            " too large");
  all.resize(count);
  return all;
}

const char *kSlotNames[] = {"device", "place", "time",  "person",
                            "food",   "color", "song",  "city"};

Grammar generate_grammar(const CorpusSpec &spec) {
  const int s_types = spec.num_slot_types;
  const int per_type =
      std::max(2, std::min(5, spec.vocab_size / std::max(1, 3 * s_types)));
  const int carriers = spec.vocab_size - s_types * per_type;
  SLU_CHECK(carriers >= 2 * spec.num_intents + 2, "vocab_size ",
            spec.vocab_size, " too small for ", spec.num_intents,
            " intents and ", s_types, " slot types");
  std::vector<std::string> words = make_words(spec.vocab_size, spec.seed);
  std::mt19937_64 rng(mix_seed(spec.seed, 0x6a11));
  Grammar g;
  std::size_t next = 0;
  for (int k = 0; k < s_types; ++k) {
    std::string name = k < 8 ? kSlotNames[k] : "slot" + std::to_string(k);
    std::vector<std::string> pool(words.begin() + next,
                                  words.begin() + next + per_type);
    next += per_type;
    std::vector<std::string> lex = pool;
    // A couple of two-word values so multi-token slots occur.
    for (int j = 0; j < 2; ++j)
      lex.push_back(pool[j] + " " + pool[(j + 1) % per_type]);
    g.slot_lexicons.emplace_back(std::move(name), std::move(lex));
  }
  std::vector<std::string> carrier(words.begin() + next, words.end());
  const int exclusive = 2 * spec.num_intents;
  std::vector<std::string> shared(carrier.begin() + exclusive, carrier.end());
  for (int i = 0; i < spec.num_intents; ++i) {
    GrammarIntent gi;
    gi.name = "intent" + std::to_string(i);
    gi.domain = "domain" + std::to_string(i % spec.num_domains);
    for (int p = 0; p < 2; ++p) {
      std::vector<std::string> parts;
      parts.push_back(carrier[2 * i + p]);
      const int n_shared = 1 + static_cast<int>(rng() % 2);
      std::vector<std::string> sh = shared;
      std::shuffle(sh.begin(), sh.end(), rng);
      for (int j = 0; j < n_shared; ++j) parts.push_back(sh[j]);
      const int n_slots = 1 + static_cast<int>(rng() % std::min(2, s_types));
      std::vector<int> types(s_types);
      std::iota(types.begin(), types.end(), 0);
      std::shuffle(types.begin(), types.end(), rng);
      for (int j = 0; j < n_slots; ++j)
        parts.push_back("{" + g.slot_lexicons[types[j]].first + "}");
      // Keep the intent's own carrier word first, shuffle the rest.
      std::shuffle(parts.begin() + 1, parts.end(), rng);
      std::string pat;
      for (const std::string &s : parts) pat += (pat.empty() ? "" : " ") + s;
      gi.patterns.push_back(pat);
    }
    g.intents.push_back(std::move(gi));
  }
  return g;
}

}  // namespace

Grammar resolve_grammar(const CorpusSpec &spec) {
  spec.validate();
  Grammar g = spec.grammar.intents.empty() ? generate_grammar(spec) : spec.grammar;
  for (const auto &[name, lex] : g.slot_lexicons)
    SLU_CHECK(!lex.empty(), "slot type '", name, "' has an empty lexicon");
  for (const GrammarIntent &gi : g.intents) {
    SLU_CHECK(!gi.patterns.empty(), "intent '", gi.name, "' has no patterns");
    for (const std::string &p : gi.patterns)
      for (const std::string &w : split_words(p))
        if (w.size() > 2 && w.front() == '{' && w.back() == '}') {
          const std::string name = w.substr(1, w.size() - 2);
          auto it = std::find_if(g.slot_lexicons.begin(), g.slot_lexicons.end(),
                                 [&](const auto &e) { return e.first == name; });
          SLU_CHECK(it != g.slot_lexicons.end(), "intent '", gi.name,
                    "' uses slot '", name, "' which has no lexicon");
        }
  }
  return g;
}

std::vector<double> word_prototype(const std::string &word,
                                   const CorpusSpec &spec) {
  std::mt19937_64 rng(mix_seed(spec.seed ^ 0x70707070ull, stable_hash(word)));
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(spec.feature_dim);
  double norm = 0.0;
  for (double &x : v) {
    x = n(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double &x : v) x /= norm;
  return v;
}

Tensor synth_audio(const std::vector<std::string> &words,
                   const CorpusSpec &spec, std::uint64_t seed) {
  SLU_CHECK(!words.empty(), "synth_audio needs at least one token");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t span = static_cast<std::size_t>(spec.frames_max - spec.frames_min + 1);
  std::vector<double> frames;
  std::size_t t = 0;
  for (const std::string &w : words) {
    const std::vector<double> proto = word_prototype(w, spec);
    const int k = spec.frames_min + static_cast<int>(rng() % span);
    for (int f = 0; f < k; ++f, ++t)
      for (double p : proto)
        frames.push_back(p + (spec.noise_std > 0.0 ? spec.noise_std * noise(rng) : 0.0));
  }
  return Tensor({t, static_cast<std::size_t>(spec.feature_dim)}, std::move(frames));
}

std::vector<Utterance> generate_corpus(const CorpusSpec &spec) {
  const Grammar g = resolve_grammar(spec);
  std::map<std::string, const std::vector<std::string> *> lex;
  for (const auto &[name, values] : g.slot_lexicons) lex[name] = &values;
  std::vector<Utterance> out;
  out.reserve(spec.utterance_count);
  for (int i = 0; i < spec.utterance_count; ++i) {
    std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(i)));
    Utterance u;
    char id[32];
    std::snprintf(id, sizeof(id), "utt%05d", i);
    u.id = id;
    std::vector<std::string> words;
    bool ok = false;
    for (int attempt = 0; attempt < 32 && !ok; ++attempt) {
      const GrammarIntent &gi = g.intents[rng() % g.intents.size()];
      const std::string &pat = gi.patterns[rng() % gi.patterns.size()];
      words.clear();
      u.slots.clear();
      for (const std::string &part : split_words(pat)) {
        if (part.size() > 2 && part.front() == '{' && part.back() == '}') {
          const std::string name = part.substr(1, part.size() - 2);
          const std::vector<std::string> &values = *lex.at(name);
          const std::string &value = values[rng() % values.size()];
          for (std::string &w : split_words(value)) words.push_back(std::move(w));
          u.slots.push_back({name, value});
        } else {
          words.push_back(part);
        }
      }
      u.intent = gi.name;
      u.domain = gi.domain;
      // Adjacent repeats would be acoustically inseparable.
      ok = !words.empty() &&
           std::adjacent_find(words.begin(), words.end()) == words.end();
    }
    SLU_CHECK(ok, "grammar cannot produce an utterance without repeated "
                  "adjacent words (utterance ", i, ")");
    u.transcript = join_words(words);
    u.features = synth_audio(words, spec, mix_seed(spec.seed ^ 0xa0d10ull, i));
    out.push_back(std::move(u));
  }
  return out;
}

CorpusSplits split_corpus(const std::vector<Utterance> &utts) {
  std::vector<std::size_t> order(utts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const std::uint64_t ha = stable_hash(utts[a].id), hb = stable_hash(utts[b].id);
    return ha != hb ? ha < hb : utts[a].id < utts[b].id;
  });
  const std::size_t n = utts.size();
  const std::size_t n_train = (n * 8 + 5) / 10;
  const std::size_t n_dev = (n + 5) / 10;
  CorpusSplits s;
  for (std::size_t k = 0; k < n; ++k) {
    const Utterance &u = utts[order[k]];
    if (k < n_train)
      s.train.push_back(u);
    else if (k < n_train + n_dev)
      s.dev.push_back(u);
    else
      s.test.push_back(u);
  }
  return s;
}

// ------------------------------------------------------------------ files

namespace {

json utterance_to_json(const Utterance &u) {
  json feats = json::array();
  if (u.features.defined()) {
    const std::size_t rows = u.features.dim(0), cols = u.features.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < cols; ++c) row.push_back(u.features.at(r, c));
      feats.push_back(std::move(row));
    }
  }
  json slots = json::array();
  for (const Slot &s : u.slots) slots.push_back(json::array({s.name, s.value}));
  return json{{"id", u.id},         {"features", feats},   {"transcript", u.transcript},
              {"slots", slots},     {"intent", u.intent},  {"domain", u.domain}};
}

const json &field(const json &j, const char *name, std::size_t line) {
  auto it = j.find(name);
  if (it == j.end())
    throw FormatError(internal::StrCat("line ", line, ": missing field '", name, "'"));
  return *it;
}

Utterance utterance_from_json(const json &j, std::size_t line) {
  if (!j.is_object())
    throw FormatError(internal::StrCat("line ", line, ": record is not an object"));
  try {
    Utterance u;
    u.id = field(j, "id", line).get<std::string>();
    u.transcript = field(j, "transcript", line).get<std::string>();
    u.intent = field(j, "intent", line).get<std::string>();
    u.domain = field(j, "domain", line).get<std::string>();
    for (const json &s : field(j, "slots", line)) {
      if (!s.is_array() || s.size() != 2)
        throw FormatError(internal::StrCat(
            "line ", line, ": slot entries must be [name, value] pairs"));
      u.slots.push_back({s[0].get<std::string>(), s[1].get<std::string>()});
    }
    const json &f = field(j, "features", line);
    std::size_t cols = 0;
    std::vector<double> data;
    for (const json &row : f) {
      if (cols == 0) cols = row.size();
      if (row.size() != cols)
        throw FormatError(internal::StrCat("line ", line,
                                           ": ragged feature matrix"));
      for (const json &v : row) data.push_back(v.get<double>());
    }
    u.features = Tensor({f.size(), cols}, std::move(data));
    return u;
  } catch (const json::exception &e) {
    throw FormatError(internal::StrCat("line ", line, ": ", e.what()));
  }
}

}  // namespace

void write_dataset(const std::string &path, const std::vector<Utterance> &utts) {
  std::ofstream os(path);
  SLU_CHECK(os, "cannot open '", path, "' for writing");
  for (const Utterance &u : utts) os << utterance_to_json(u).dump() << '\n';
  SLU_CHECK(os.good(), "write to '", path, "' failed");
}

std::vector<Utterance> read_dataset(const std::string &path) {
  std::ifstream is(path);
  SLU_CHECK(is, "cannot open dataset '", path, "'");
  std::vector<Utterance> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (split_words(text).empty()) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error &e) {
      throw FormatError(internal::StrCat(path, ": line ", line,
                                         ": malformed record: ", e.what()));
    }
    try {
      out.push_back(utterance_from_json(j, line));
    } catch (const FormatError &e) {
      throw FormatError(internal::StrCat(path, ": ", e.what()));
    }
  }
  return out;
}

std::string corpus_spec_to_json(const CorpusSpec &spec) {
  json j{{"vocab_size", spec.vocab_size},
         {"num_intents", spec.num_intents},
         {"num_slot_types", spec.num_slot_types},
         {"num_domains", spec.num_domains},
         {"utterance_count", spec.utterance_count},
         {"feature_dim", spec.feature_dim},
         {"frames_per_token", json::array({spec.frames_min, spec.frames_max})},
         {"noise_std", spec.noise_std},
         {"seed", spec.seed}};
  if (!spec.grammar.intents.empty()) {
    json lex = json::object();
    for (const auto &[name, values] : spec.grammar.slot_lexicons) lex[name] = values;
    json intents = json::array();
    for (const GrammarIntent &gi : spec.grammar.intents)
      intents.push_back(
          {{"name", gi.name}, {"domain", gi.domain}, {"patterns", gi.patterns}});
    j["grammar"] = {{"slot_lexicons", lex}, {"intents", intents}};
  }
  return j.dump(2);
}

CorpusSpec corpus_spec_from_json(const std::string &text) {
  CorpusSpec spec;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(internal::StrCat("corpus spec is not valid JSON: ", e.what()));
  }
  try {
    spec.vocab_size = j.value("vocab_size", spec.vocab_size);
    spec.num_intents = j.value("num_intents", spec.num_intents);
    spec.num_slot_types = j.value("num_slot_types", spec.num_slot_types);
    spec.num_domains = j.value("num_domains", spec.num_domains);
    spec.utterance_count = j.value("utterance_count", spec.utterance_count);
    spec.feature_dim = j.value("feature_dim", spec.feature_dim);
    if (j.contains("frames_per_token")) {
      const json &r = j["frames_per_token"];
      SLU_CHECK(r.is_array() && r.size() == 2,
                "frames_per_token must be a [min, max] pair");
      spec.frames_min = r[0].get<int>();
      spec.frames_max = r[1].get<int>();
    }
    spec.noise_std = j.value("noise_std", spec.noise_std);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("grammar")) {
      const json &g = j["grammar"];
      for (auto &[name, values] : g.at("slot_lexicons").items())
        spec.grammar.slot_lexicons.emplace_back(
            name, values.get<std::vector<std::string>>());
      for (const json &gi : g.at("intents"))
        spec.grammar.intents.push_back(
            {gi.at("name").get<std::string>(), gi.at("domain").get<std::string>(),
             gi.at("patterns").get<std::vector<std::string>>()});
      spec.num_intents = static_cast<int>(spec.grammar.intents.size());
      spec.num_slot_types = static_cast<int>(spec.grammar.slot_lexicons.size());
    }
  } catch (const json::exception &e) {
    throw ConfigError(internal::StrCat("corpus spec: ", e.what()));
  }
  spec.validate();
  return spec;
}

}  // namespace slu
