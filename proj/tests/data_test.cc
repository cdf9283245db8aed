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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "slu/data.h"
#include "slu/error.h"

using namespace slu;

namespace {

std::string temp_path(const std::string &name) {
  return (std::filesystem::temp_directory_path() /
          ("slu_data_test_" + name)).string();
}

std::string read_file(const std::string &path) {
  std::ifstream is(path);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("corpus generation is deterministic in the seed") {
  CorpusSpec spec;
  spec.utterance_count = 60;
  spec.noise_std = 0.1;
  const auto a = generate_corpus(spec);
  const auto b = generate_corpus(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_utterance(a[i], b[i]));
  spec.seed = 2;
  const auto c = generate_corpus(spec);
  int differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differ += !same_utterance(a[i], c[i]);
  CHECK(differ > 0);
}

TEST_CASE("100 utterances split 80/10/10 and disjointly") {
  CorpusSpec spec;
  spec.utterance_count = 100;
  const auto s = split_corpus(generate_corpus(spec));
  CHECK(s.train.size() == 80);
  CHECK(s.dev.size() == 10);
  CHECK(s.test.size() == 10);
  std::set<std::string> ids;
  for (const auto *part : {&s.train, &s.dev, &s.test})
    for (const Utterance &u : *part) ids.insert(u.id);
  CHECK(ids.size() == 100);
}

TEST_CASE("slot values are in-order spans of the transcript") {
  CorpusSpec spec;
  spec.utterance_count = 500;
  const auto corpus = generate_corpus(spec);
  int multiword = 0;
  for (const Utterance &u : corpus) {
    const auto words = split_words(u.transcript);
    std::size_t pos = 0;
    for (const Slot &s : u.slots) {
      const auto value = split_words(s.value);
      REQUIRE(!value.empty());
      multiword += value.size() > 1;
      bool found = false;
      for (std::size_t i = pos; i + value.size() <= words.size() && !found; ++i)
        if (std::equal(value.begin(), value.end(), words.begin() + i)) {
          found = true;
          pos = i + value.size();
        }
      CHECK_MESSAGE(found, u.id, ": ", s.value, " in ", u.transcript);
    }
    for (std::size_t i = 1; i < words.size(); ++i) CHECK(words[i] != words[i - 1]);
    CHECK(u.features.dim(1) == 16u);
  }
  CHECK(multiword > 0);
  const LabelSet labels = LabelSet::from_utterances(corpus);
  CHECK(labels.intents.size() == 8);
  CHECK(labels.domains.size() == 3);
  CHECK(labels.slot_types.size() == 4);
}

TEST_CASE("tags round-trip to slots") {
  CorpusSpec spec;
  spec.utterance_count = 200;
  const auto corpus = generate_corpus(spec);
  const LabelSet labels = LabelSet::from_utterances(corpus);
  for (const Utterance &u : corpus) {
    const auto tags = word_slot_tags(u, labels);
    CHECK(slots_from_tags(split_words(u.transcript), tags, labels) == u.slots);
  }
}

TEST_CASE("noise-free single token gives identical prototype frames") {
  CorpusSpec spec;
  spec.frames_min = spec.frames_max = 2;
  const Tensor x = synth_audio({"hello"}, spec, 99);
  REQUIRE(x.dim(0) == 2u);
  const auto proto = word_prototype("hello", spec);
  double norm = 0.0;
  for (std::size_t j = 0; j < proto.size(); ++j) {
    CHECK(x.at(0, j) == proto[j]);
    CHECK(x.at(1, j) == proto[j]);
    norm += proto[j] * proto[j];
  }
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(synth_audio({}, spec, 1), Error);
}

TEST_CASE("frame count stays within the per-token range") {
  CorpusSpec spec;
  spec.frames_min = 2;
  spec.frames_max = 4;
  spec.utterance_count = 100;
  for (const Utterance &u : generate_corpus(spec)) {
    const std::size_t n = split_words(u.transcript).size();
    CHECK(u.features.dim(0) >= 2 * n);
    CHECK(u.features.dim(0) <= 4 * n);
  }
}

TEST_CASE("nearest-prototype decoding recovers every noise-free transcript") {
  CorpusSpec spec;
  spec.utterance_count = 300;
  const auto corpus = generate_corpus(spec);
  std::set<std::string> vocab;
  for (const Utterance &u : corpus)
    for (const auto &w : split_words(u.transcript)) vocab.insert(w);
  std::vector<std::pair<std::string, std::vector<double>>> protos;
  for (const auto &w : vocab) protos.emplace_back(w, word_prototype(w, spec));
  for (const Utterance &u : corpus) {
    std::vector<std::string> decoded;
    for (std::size_t t = 0; t < u.features.dim(0); ++t) {
      double best = 1e300;
      std::string arg;
      for (const auto &[w, p] : protos) {
        double d = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
          const double e = u.features.at(t, j) - p[j];
          d += e * e;
        }
        if (d < best) best = d, arg = w;
      }
      if (decoded.empty() || decoded.back() != arg) decoded.push_back(arg);
    }
    CHECK(join_words(decoded) == u.transcript);
  }
}

TEST_CASE("tokenizer edge cases") {
  Tokenizer tok(TokenizerMode::kWord, {"turn", "on", "lights"});
  CHECK(tok.tokenize("").empty());
  CHECK(tok.detokenize(std::vector<int>{}).empty());
  CHECK(tok.tokenize("zzz") == std::vector<int>{Tokenizer::kUnk});
  CHECK(tok.symbol(0) == "<blank>");
  CHECK(tok.symbol(1) == "</s>");
  CHECK(tok.symbol(2) == "<unk>");
  CHECK_THROWS_AS(tok.symbol(99), Error);
  CHECK(tok.tokenize("turn on lights") == tok.tokenize("turn on lights"));
}

TEST_CASE("tokenizer round trip on random in-vocabulary sentences") {
  CorpusSpec spec;
  spec.utterance_count = 50;
  std::vector<std::string> texts;
  for (const Utterance &u : generate_corpus(spec)) texts.push_back(u.transcript);
  for (TokenizerMode mode : {TokenizerMode::kWord, TokenizerMode::kChar}) {
    const Tokenizer tok = Tokenizer::from_texts(mode, texts);
    std::vector<std::string> words;
    for (const auto &t : texts)
      for (const auto &w : split_words(t)) words.push_back(w);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
      std::vector<std::string> s(1 + rng() % 8);
      for (auto &w : s) w = words[rng() % words.size()];
      const std::string text = join_words(s);
      const auto ids = tok.tokenize(text);
      for (int id : ids) CHECK(id != Tokenizer::kUnk);
      CHECK(tok.detokenize(ids) == text);
      const auto align = tok.word_alignment(ids);
      int firsts = 0;
      for (const auto &a : align) firsts += a.first;
      CHECK(firsts == static_cast<int>(s.size()));
    }
  }
}

TEST_CASE("char tokenizer attaches the boundary to the preceding word") {
  Tokenizer tok(TokenizerMode::kChar, {"a", "b"});
  const auto ids = tok.tokenize("ab b");
  REQUIRE(ids.size() == 4);
  CHECK(ids[2] == Tokenizer::kBoundary);
  const auto align = tok.word_alignment(ids);
  CHECK(align[0].word == 0);
  CHECK(align[0].first);
  CHECK_FALSE(align[1].first);
  CHECK(align[2].word == 0);
  CHECK(align[3].word == 1);
  CHECK(align[3].first);
  const std::vector<int> word_tags{2, 4};
  const auto tt = token_tags_from_word_tags(tok, ids, word_tags);
  CHECK(tt == std::vector<int>{2, 1, 1, 4});
  CHECK(word_tags_from_token_tags(tok, ids, tt) == word_tags);
}

TEST_CASE("dataset files round trip exactly") {
  CorpusSpec spec;
  spec.utterance_count = 50;
  spec.noise_std = 0.3;
  const auto corpus = generate_corpus(spec);
  const std::string path = temp_path("roundtrip.jsonl");
  write_dataset(path, corpus);
  const auto back = read_dataset(path);
  REQUIRE(back.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    CHECK(same_utterance(corpus[i], back[i]));
  std::remove(path.c_str());
}

TEST_CASE("dataset reader errors") {
  const std::string path = temp_path("errors.jsonl");
  { std::ofstream(path) << ""; }
  CHECK(read_dataset(path).empty());

  CorpusSpec spec;
  spec.utterance_count = 3;
  write_dataset(path, generate_corpus(spec));
  std::string text = read_file(path);
  const std::size_t second_end = text.find('\n', text.find('\n') + 1);
  { std::ofstream(path) << text.substr(0, second_end - 10) << "\n"; }
  try {
    read_dataset(path);
    FAIL("expected an error");
  } catch (const FormatError &e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  { std::ofstream(path) << R"({"id":"x","features":[],"slots":[],"intent":"a","domain":"b"})" << "\n"; }
  try {
    read_dataset(path);
    FAIL("expected an error");
  } catch (const FormatError &e) {
    CHECK(std::string(e.what()).find("transcript") != std::string::npos);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_dataset(temp_path("does_not_exist")), Error);
}

TEST_CASE("grammar errors") {
  CorpusSpec spec;
  spec.grammar.slot_lexicons = {{"device", {}}};
  spec.grammar.intents = {{"on", "home", {"turn on {device}"}}};
  CHECK_THROWS_AS(generate_corpus(spec), Error);
  spec.grammar.slot_lexicons = {{"device", {"lamp"}}};
  spec.grammar.intents = {{"on", "home", {"turn on {room}"}}};
  CHECK_THROWS_AS(generate_corpus(spec), Error);
  spec.grammar.intents = {{"on", "home", {"lamp {device}"}}};
  CHECK_THROWS_AS(generate_corpus(spec), Error);

  CorpusSpec bad;
  bad.frames_min = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = CorpusSpec();
  bad.vocab_size = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("explicit grammar and spec JSON round trip") {
  CorpusSpec spec;
  spec.grammar.slot_lexicons = {{"device", {"lamp", "kettle", "fan"}},
                                {"place", {"kitchen", "living room"}}};
  spec.grammar.intents = {{"on", "home", {"turn on the {device}", "switch {device} on in {place}"}},
                          {"off", "home", {"turn off the {device}"}}};
  spec.utterance_count = 30;
  const CorpusSpec back = corpus_spec_from_json(corpus_spec_to_json(spec));
  CHECK(back.grammar.intents.size() == 2);
  const auto a = generate_corpus(spec), b = generate_corpus(back);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_utterance(a[i], b[i]));
  CHECK_THROWS_AS(corpus_spec_from_json("{"), ConfigError);
  CHECK_THROWS_AS(corpus_spec_from_json(R"({"frames_per_token":[3,1]})"), Error);
}
