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

#include "slu/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "slu/checkpoint.h"
#include "slu/error.h"

namespace slu {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kAsrSeedSalt = 0xa5;
constexpr std::uint64_t kNluSeedSalt = 0x41;
constexpr std::uint64_t kShuffleSalt = 0x5f;

// Runs fn(i) for i in [0, n) on up to `threads` workers; each index is
// handled exactly once and results land in caller-owned slots.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (std::thread &t : pool) t.join();
  for (const std::exception_ptr &e : errors)
    if (e) std::rethrow_exception(e);
}

json labels_to_json(const LabelSet &l) {
  return {{"intents", l.intents}, {"domains", l.domains}, {"slot_types", l.slot_types}};
}

LabelSet labels_from_json(const json &j) {
  LabelSet l;
  l.intents = j.at("intents").get<std::vector<std::string>>();
  l.domains = j.at("domains").get<std::vector<std::string>>();
  l.slot_types = j.at("slot_types").get<std::vector<std::string>>();
  return l;
}

json system_metadata(const SluSystem &sys) {
  const AsrConfig &a = sys.asr->config();
  const NluConfig &n = sys.nlu->config();
  const NluShape &s = sys.nlu->shape();
  std::vector<std::string> symbols(sys.tokenizer.symbols().begin() +
                                       (sys.tokenizer.mode() == TokenizerMode::kChar ? 4 : 3),
                                   sys.tokenizer.symbols().end());
  json asr = {{"kind", to_string(a.kind)},
              {"feature_dim", a.feature_dim},
              {"vocab_size", a.vocab_size},
              {"embed_dim", a.embed_dim},
              {"encoder_units", a.encoder_units},
              {"encoder_layers", a.encoder_layers},
              {"left_context", a.left_context},
              {"pred_units", a.pred_units},
              {"pred_layers", a.pred_layers},
              {"joint_units", a.joint_units},
              {"decoder_units", a.decoder_units},
              {"decoder_layers", a.decoder_layers},
              {"attention_heads", a.attention_heads},
              {"attention_units", a.attention_units},
              {"seed", a.seed}};
  json nlu = {{"model_dim", n.model_dim}, {"layers", n.layers},
              {"heads", n.heads},         {"ff_dim", n.ff_dim},
              {"head_units", n.head_units}, {"cross_layers", n.cross_layers},
              {"seed", n.seed},           {"input_dim", s.input_dim},
              {"memory_dim", s.memory_dim}};
  return {{"format", "slujoint-system"},
          {"library_version", kLibraryVersion},
          {"interface", to_string(sys.interface)},
          {"tokenizer", {{"mode", to_string(sys.tokenizer.mode())}, {"symbols", symbols}}},
          {"labels", labels_to_json(sys.labels)},
          {"feature_norm", {{"mean", sys.norm.mean}, {"inv_std", sys.norm.inv_std}}},
          {"asr", asr},
          {"nlu", nlu}};
}

struct Snapshot {
  std::vector<std::vector<double>> values;
};

Snapshot snapshot(const ParameterList &params) {
  Snapshot s;
  for (const NamedTensor &p : params)
    s.values.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return s;
}

void restore(const Snapshot &s, ParameterList &params) {
  for (std::size_t i = 0; i < params.size(); ++i)
    std::copy(s.values[i].begin(), s.values[i].end(), params[i].tensor.mutable_data().begin());
}

void copy_parameters(const ParameterList &from, ParameterList &to) {
  for (NamedTensor &p : to) {
    auto it = std::find_if(from.begin(), from.end(),
                           [&](const NamedTensor &q) { return q.name == p.name; });
    if (it == from.end())
      throw FormatError("warm start has no parameter '" + p.name + "'");
    if (it->tensor.shape() != p.tensor.shape())
      throw ShapeError("warm start parameter '" + p.name + "' has shape " +
                       shape_str(it->tensor.shape()) + ", expected " +
                       shape_str(p.tensor.shape()));
    std::copy(it->tensor.data().begin(), it->tensor.data().end(),
              p.tensor.mutable_data().begin());
  }
}

// Training targets of one utterance.
struct Example {
  const Utterance *utt = nullptr;
  Tensor x;  // normalized features
  std::vector<int> tokens;
  std::vector<std::string> words;
  std::vector<int> word_tags;
  std::vector<int> token_tags;
  int intent = 0;
  int domain = 0;
  SluAnnotation reference;
};

std::vector<Example> make_examples(const std::vector<Utterance> &utts, const SluSystem &sys) {
  const Tokenizer &tok = sys.tokenizer;
  const LabelSet &labels = sys.labels;
  std::vector<Example> out;
  out.reserve(utts.size());
  for (const Utterance &u : utts) {
    Example e;
    e.utt = &u;
    e.x = sys.norm.apply(u.features);
    e.tokens = tok.tokenize(u.transcript);
    e.words = split_words(u.transcript);
    e.word_tags = word_slot_tags(u, labels);
    e.token_tags = token_tags_from_word_tags(tok, e.tokens, e.word_tags);
    e.intent = labels.intent_id(u.intent);
    e.domain = labels.domain_id(u.domain);
    e.reference = SluAnnotation::from_utterance(u);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(mix_seed(seed ^ kShuffleSalt, static_cast<std::uint64_t>(epoch)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Tracks the best dev SemER over epochs and the matching parameters.
class BestKeeper {
 public:
  BestKeeper(ParameterList &asr, ParameterList &nlu) : asr_(asr), nlu_(nlu) {}

  void offer(int epoch, double semer) {
    if (best_epoch_ >= 0 && !(semer < best_)) return;
    best_ = semer;
    best_epoch_ = epoch;
    asr_snap_ = snapshot(asr_);
    nlu_snap_ = snapshot(nlu_);
  }
  // Returns the selected epoch.
  int restore_best(int last_epoch) {
    if (best_epoch_ < 0) return last_epoch;
    restore(asr_snap_, asr_);
    restore(nlu_snap_, nlu_);
    return best_epoch_;
  }

 private:
  ParameterList &asr_, &nlu_;
  double best_ = 0.0;
  int best_epoch_ = -1;
  Snapshot asr_snap_, nlu_snap_;
};

void finish_report(const RunConfig &cfg, const SluSystem &sys, const PreparedData &data,
                   RunReport &report) {
  const DecodeOptions opts = decode_options(cfg);
  report.dev = evaluate_system(sys, data.splits.dev, opts, cfg.threads);
  if (!data.splits.test.empty())
    report.test = evaluate_system(sys, data.splits.test, opts, cfg.threads);
  if (sys.asr->kind() == AsrKind::kRnnt)
    report.dev_monotone_percent =
        monotone_selection_percent(sys, data.splits.dev, opts, cfg.threads);
}

}  // namespace

FeatureNorm FeatureNorm::fit(const std::vector<Utterance> &utts) {
  SLU_CHECK(!utts.empty(), "feature normalization needs at least one utterance");
  const std::size_t F = utts.front().features.dim(1);
  std::vector<double> sum(F, 0.0), sq(F, 0.0);
  double n = 0.0;
  for (const Utterance &u : utts) {
    const std::span<const double> x = u.features.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      sum[i % F] += x[i];
      sq[i % F] += x[i] * x[i];
    }
    n += static_cast<double>(u.features.dim(0));
  }
  FeatureNorm f;
  for (std::size_t j = 0; j < F; ++j) {
    const double m = sum[j] / n, var = sq[j] / n - m * m;
    f.mean.push_back(m);
    f.inv_std.push_back(var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0);
  }
  return f;
}

Tensor FeatureNorm::apply(const Tensor &features) const {
  if (mean.empty()) return features;
  const std::size_t F = mean.size();
  SLU_CHECK(features.rank() == 2 && features.dim(1) == F, "features of shape ",
            shape_str(features.shape()), " do not match the ", F, "-dim normalizer");
  std::vector<double> v(features.data().begin(), features.data().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - mean[i % F]) * inv_std[i % F];
  return Tensor(features.shape(), std::move(v));
}

SluModels SluSystem::models() const {
  return {asr.get(), nlu.get(), interface, {&tokenizer, &tokenizer}, &labels};
}

PreparedData prepare_data(const RunConfig &cfg) {
  PreparedData d;
  if (cfg.data.corpus) {
    d.splits = split_corpus(generate_corpus(*cfg.data.corpus));
  } else {
    d.splits.train = read_dataset(cfg.data.train_path);
    d.splits.dev = read_dataset(cfg.data.dev_path);
    if (!cfg.data.test_path.empty()) d.splits.test = read_dataset(cfg.data.test_path);
  }
  SLU_CHECK(!d.splits.train.empty(), "training split is empty");
  SLU_CHECK(!d.splits.dev.empty(), "dev split is empty");
  std::vector<std::string> texts;
  for (const Utterance &u : d.splits.train) texts.push_back(u.transcript);
  d.tokenizer = Tokenizer::from_texts(cfg.tokenizer, texts);
  d.labels = LabelSet::from_utterances(d.splits.train);
  d.norm = FeatureNorm::fit(d.splits.train);
  d.feature_dim = static_cast<int>(d.splits.train.front().features.dim(1));
  for (const auto *split : {&d.splits.train, &d.splits.dev, &d.splits.test})
    for (const Utterance &u : *split)
      SLU_CHECK(u.features.dim(1) == static_cast<std::size_t>(d.feature_dim), "utterance ",
                u.id, " has feature dim ", u.features.dim(1), ", expected ", d.feature_dim);
  return d;
}

SluSystem build_system(const RunConfig &cfg, const PreparedData &data,
                       InterfaceKind interface) {
  const Tokenizer &tok = data.tokenizer;
  const LabelSet &labels = data.labels;
  SluSystem sys;
  sys.tokenizer = tok;
  sys.labels = labels;
  sys.norm = data.norm;
  sys.interface = interface;
  AsrConfig a = cfg.asr;
  a.vocab_size = tok.size();
  a.feature_dim = data.feature_dim;
  a.seed = mix_seed(cfg.seed, kAsrSeedSalt);
  sys.asr = make_asr_model(a);
  NluConfig n = cfg.nlu;
  n.seed = mix_seed(cfg.seed, kNluSeedSalt);
  NluShape s;
  s.input = interface;
  s.vocab_size = tok.size();
  s.input_dim = static_cast<int>(interface_dim(interface, a));
  s.memory_dim = interface == InterfaceKind::kAudioAttention ? a.encoder_units : 0;
  s.num_tags = labels.num_tags();
  s.num_intents = static_cast<int>(labels.intents.size());
  s.num_domains = static_cast<int>(labels.domains.size());
  sys.nlu = std::make_unique<TnluModel>(n, s);
  return sys;
}

void save_system(const SluSystem &sys, const std::string &dir) {
  fs::create_directories(dir);
  const std::string meta = system_metadata(sys).dump();
  save_checkpoint((fs::path(dir) / "asr.ckpt").string(), meta, sys.asr->params());
  save_checkpoint((fs::path(dir) / "nlu.ckpt").string(), meta, sys.nlu->params());
}

SluSystem load_system(const std::string &dir) {
  const Checkpoint asr_ck = load_checkpoint((fs::path(dir) / "asr.ckpt").string());
  const Checkpoint nlu_ck = load_checkpoint((fs::path(dir) / "nlu.ckpt").string());
  json m;
  try {
    m = json::parse(asr_ck.metadata);
  } catch (const json::exception &e) {
    throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  if (m.value("format", "") != "slujoint-system")
    throw FormatError("checkpoint in '" + dir + "' does not describe an SLU system");
  SluSystem sys;
  try {
    const json &t = m.at("tokenizer");
    sys.tokenizer = Tokenizer(tokenizer_mode_from_string(t.at("mode").get<std::string>()),
                              t.at("symbols").get<std::vector<std::string>>());
    sys.labels = labels_from_json(m.at("labels"));
    sys.norm.mean = m.at("feature_norm").at("mean").get<std::vector<double>>();
    sys.norm.inv_std = m.at("feature_norm").at("inv_std").get<std::vector<double>>();
    sys.interface = interface_kind_from_string(m.at("interface").get<std::string>());
    const json &a = m.at("asr");
    AsrConfig ac;
    ac.kind = asr_kind_from_string(a.at("kind").get<std::string>());
    ac.feature_dim = a.at("feature_dim");
    ac.vocab_size = a.at("vocab_size");
    ac.embed_dim = a.at("embed_dim");
    ac.encoder_units = a.at("encoder_units");
    ac.encoder_layers = a.at("encoder_layers");
    ac.left_context = a.at("left_context");
    ac.pred_units = a.at("pred_units");
    ac.pred_layers = a.at("pred_layers");
    ac.joint_units = a.at("joint_units");
    ac.decoder_units = a.at("decoder_units");
    ac.decoder_layers = a.at("decoder_layers");
    ac.attention_heads = a.at("attention_heads");
    ac.attention_units = a.at("attention_units");
    ac.seed = a.at("seed");
    sys.asr = make_asr_model(ac);
    const json &n = m.at("nlu");
    NluConfig nc;
    nc.model_dim = n.at("model_dim");
    nc.layers = n.at("layers");
    nc.heads = n.at("heads");
    nc.ff_dim = n.at("ff_dim");
    nc.head_units = n.at("head_units");
    nc.cross_layers = n.at("cross_layers");
    nc.seed = n.at("seed");
    NluShape s;
    s.input = sys.interface;
    s.vocab_size = sys.tokenizer.size();
    s.input_dim = n.at("input_dim");
    s.memory_dim = n.at("memory_dim");
    s.num_tags = sys.labels.num_tags();
    s.num_intents = static_cast<int>(sys.labels.intents.size());
    s.num_domains = static_cast<int>(sys.labels.domains.size());
    sys.nlu = std::make_unique<TnluModel>(nc, s);
  } catch (const json::exception &e) {
    throw FormatError(std::string("malformed checkpoint metadata: ") + e.what());
  }
  assign_parameters(asr_ck, sys.asr->params());
  assign_parameters(nlu_ck, sys.nlu->params());
  return sys;
}

DecodeOptions decode_options(const RunConfig &cfg) {
  DecodeOptions o;
  o.beam_width = cfg.beam_width;
  o.max_len = cfg.max_decode_len;
  o.max_symbols_per_frame = cfg.max_symbols_per_frame;
  return o;
}

SluCandidate run_slu(const SluSystem &sys, Tape &tape, const Tensor &raw_features,
                     const DecodeOptions &opts) {
  const Tensor features = sys.norm.apply(raw_features);
  const NBest nb = sys.asr->decode(features, opts);
  SLU_CHECK(!nb.hypotheses.empty(), "decoder returned no hypotheses");
  const std::vector<AsrExposure> ex =
      sys.asr->expose_all(tape, features, std::span(nb.hypotheses.data(), 1));
  return run_candidate_through_nlu(tape, ex[0], sys.models());
}

MetricReport evaluate_system(const SluSystem &sys, const std::vector<Utterance> &utts,
                             const DecodeOptions &opts, int threads,
                             std::vector<SluAnnotation> *hyps) {
  std::vector<SluAnnotation> refs(utts.size()), out(utts.size());
  parallel_for(utts.size(), threads, [&](std::size_t i) {
    Tape tape(false);
    refs[i] = SluAnnotation::from_utterance(utts[i]);
    out[i] = run_slu(sys, tape, utts[i].features, opts).annotation;
  });
  MetricReport r = evaluate_corpus(refs, out);
  if (hyps) *hyps = std::move(out);
  return r;
}

double monotone_selection_percent(const SluSystem &sys, const std::vector<Utterance> &utts,
                                  const DecodeOptions &opts, int threads) {
  SLU_CHECK(sys.asr->kind() == AsrKind::kRnnt, "frame selection needs a transducer");
  if (utts.empty()) return 0.0;
  std::vector<char> monotone(utts.size(), 0);
  parallel_for(utts.size(), threads, [&](std::size_t i) {
    const NBest nb = sys.asr->decode(sys.norm.apply(utts[i].features), opts);
    SLU_CHECK(!nb.hypotheses.empty(), "decoder returned no hypotheses");
    const Hypothesis &h = nb.hypotheses.front();
    const std::vector<int> frames =
        h.tokens.empty() ? std::vector<int>{} : max_transition_frames(h.lattice_transitions);
    monotone[i] = std::is_sorted(frames.begin(), frames.end());
  });
  const double n = std::count(monotone.begin(), monotone.end(), 1);
  return 100.0 * n / static_cast<double>(utts.size());
}

MetricReport evaluate_nlu_on_text(const SluSystem &sys, const std::vector<Utterance> &utts) {
  SLU_CHECK(sys.interface == InterfaceKind::kText,
            "ground-truth-text evaluation needs a text-input NLU");
  std::vector<SluAnnotation> refs, hyps;
  for (const Utterance &u : utts) {
    Tape tape(false);
    AsrExposure e;
    e.tokens = sys.tokenizer.tokenize(u.transcript);
    const Tokenizers toks{&sys.tokenizer, &sys.tokenizer};
    const NluPrediction p = nlu_predict(sys.nlu->forward(tape, text_interface(e, toks)));
    const TokenWords tw = group_token_words(sys.tokenizer, e.tokens);
    std::vector<int> word_tags;
    for (int first : tw.first_token) word_tags.push_back(p.slots[first]);
    SluAnnotation h;
    h.words = tw.words;
    h.slots = slots_from_tags(tw.words, word_tags, sys.labels);
    h.intent = sys.labels.intents.at(p.intent);
    h.domain = sys.labels.domains.at(p.domain);
    refs.push_back(SluAnnotation::from_utterance(u));
    hyps.push_back(std::move(h));
  }
  return evaluate_corpus(refs, hyps, /*score_transcripts=*/false);
}

std::string RunReport::to_json() const {
  json j;
  j["config"] = json::parse(config_json);
  j["config_hash"] = config_hash;
  j["library_version"] = kLibraryVersion;
  json ep = json::array();
  for (const EpochLog &e : epochs)
    ep.push_back({{"phase", e.phase},
                  {"epoch", e.epoch},
                  {"asr_loss", e.asr_loss},
                  {"nlu_loss", e.nlu_loss},
                  {"seq_loss", e.seq_loss},
                  {"dev_semer", e.dev_semer ? json(*e.dev_semer) : json(nullptr)}});
  j["epochs"] = ep;
  j["best_epoch"] = best_epoch;
  j["dev"] = json::parse(dev.to_json());
  j["test"] = test.utterances > 0 ? json::parse(test.to_json()) : json(nullptr);
  auto opt = [](const std::optional<MetricReport> &m) {
    return m ? json::parse(m->to_json()) : json(nullptr);
  };
  j["nlu_text_dev"] = opt(nlu_text_dev);
  j["nlu_text_test"] = opt(nlu_text_test);
  j["warm_start_dev"] = opt(warm_start_dev);
  j["dev_monotone_percent"] = dev_monotone_percent ? json(*dev_monotone_percent) : json(nullptr);
  j["wall_seconds"] = wall_seconds;
  return j.dump(2);
}

RunReport train_independent(const RunConfig &cfg) {
  SLU_CHECK(cfg.mode == TrainingMode::kIndependent, "train_independent called with mode '",
            to_string(cfg.mode), "'");
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const PreparedData data = prepare_data(cfg);
  SluSystem sys = build_system(cfg, data, InterfaceKind::kText);
  const std::vector<Example> train = make_examples(data.splits.train, sys);
  Adam asr_opt(sys.asr->params(), {.lr = cfg.lr});
  Adam nlu_opt(sys.nlu->params(), {.lr = cfg.nlu_lr > 0.0 ? cfg.nlu_lr : cfg.lr});
  const DecodeOptions opts = decode_options(cfg);

  RunReport report;
  report.config_json = run_config_to_json(cfg).dump();
  report.config_hash = config_hash(cfg);
  BestKeeper best(sys.asr->params(), sys.nlu->params());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog log;
    log.phase = "independent";
    log.epoch = epoch;
    const std::vector<std::size_t> order = epoch_order(train.size(), cfg.seed, epoch);
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - b);
      zero_grads(sys.asr->params());
      zero_grads(sys.nlu->params());
      for (std::size_t i = b; i < end; ++i) {
        const Example &ex = train[order[i]];
        Tape tape;
        Tensor la = sys.asr->mle_loss(tape, ex.x, ex.tokens);
        InterfaceOutput io;
        io.kind = InterfaceKind::kText;
        io.tokens = ex.tokens;
        Tensor ln = nlu_loss(tape, sys.nlu->forward(tape, io), ex.token_tags, ex.intent,
                             ex.domain);
        log.asr_loss += la.item();
        log.nlu_loss += ln.item();
        tape.backward(tape.scale(tape.add(la, ln), scale));
      }
      clip_grad_norm(sys.asr->params(), cfg.grad_clip);
      clip_grad_norm(sys.nlu->params(), cfg.grad_clip);
      asr_opt.step();
      nlu_opt.step();
    }
    log.asr_loss /= static_cast<double>(train.size());
    log.nlu_loss /= static_cast<double>(train.size());
    if (cfg.select_best) {
      log.dev_semer = evaluate_system(sys, data.splits.dev, opts, cfg.threads).semer;
      best.offer(epoch, *log.dev_semer);
    }
    report.epochs.push_back(log);
  }
  report.best_epoch = cfg.select_best ? best.restore_best(cfg.epochs) : cfg.epochs;
  finish_report(cfg, sys, data, report);
  report.nlu_text_dev = evaluate_nlu_on_text(sys, data.splits.dev);
  if (!data.splits.test.empty()) report.nlu_text_test = evaluate_nlu_on_text(sys, data.splits.test);
  save_system(sys, cfg.output_dir);
  report.wall_seconds = seconds_since(t0);
  return report;
}

RunReport train_joint(const RunConfig &cfg) {
  SLU_CHECK(cfg.mode != TrainingMode::kIndependent, "train_joint called with mode 'independent'");
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const PreparedData data = prepare_data(cfg);
  SluSystem sys = build_system(cfg, data, cfg.interface);
  RunReport report;
  report.config_json = run_config_to_json(cfg).dump();
  report.config_hash = config_hash(cfg);

  if (cfg.pretrained_asr || cfg.pretrained_nlu) {
    std::string warm_dir = cfg.init_from;
    if (warm_dir.empty()) {
      RunConfig ind = cfg;
      ind.mode = TrainingMode::kIndependent;
      ind.interface = InterfaceKind::kText;
      ind.pretrained_asr = ind.pretrained_nlu = ind.freeze_asr = false;
      ind.output_dir = (fs::path(cfg.output_dir) / "independent").string();
      const RunReport r = train_independent(ind);
      report.epochs = r.epochs;
      warm_dir = ind.output_dir;
    }
    const SluSystem warm = load_system(warm_dir);
    SLU_CHECK(warm.tokenizer.symbols() == sys.tokenizer.symbols(),
              "warm-start vocabulary in '", warm_dir, "' does not match the data");
    if (cfg.pretrained_asr) copy_parameters(warm.asr->params(), sys.asr->params());
    if (cfg.pretrained_nlu) copy_parameters(warm.nlu->params(), sys.nlu->params());
  }
  const DecodeOptions opts = decode_options(cfg);
  report.warm_start_dev = evaluate_system(sys, data.splits.dev, opts, cfg.threads);

  const std::vector<Example> train = make_examples(data.splits.train, sys);
  ParameterList trainable = sys.nlu->params();
  if (!cfg.freeze_asr)
    trainable.insert(trainable.end(), sys.asr->params().begin(), sys.asr->params().end());
  Adam opt(trainable, {.lr = cfg.joint_lr});
  DecodeOptions nbest_opts = opts;
  nbest_opts.beam_width = std::max(cfg.beam_width, cfg.nbest_size);
  const bool with_mle = cfg.mode == TrainingMode::kJointMleSeq;
  const SluModels models = sys.models();

  BestKeeper best(sys.asr->params(), sys.nlu->params());
  for (int epoch = 1; epoch <= cfg.joint_epochs; ++epoch) {
    EpochLog log;
    log.phase = "joint";
    log.epoch = epoch;
    const std::vector<std::size_t> order = epoch_order(train.size(), cfg.seed, 1000 + epoch);
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - b);
      zero_grads(sys.asr->params());
      zero_grads(sys.nlu->params());
      for (std::size_t i = b; i < end; ++i) {
        const Example &ex = train[order[i]];
        const Tensor &x = ex.x;
        NBest nb = sys.asr->decode(x, nbest_opts);
        if (nb.hypotheses.size() > static_cast<std::size_t>(cfg.nbest_size))
          nb.hypotheses.resize(cfg.nbest_size);
        Tape tape;
        const std::vector<AsrExposure> exposures = sys.asr->expose_all(tape, x, nb.hypotheses);
        std::vector<Tensor> log_probs;
        std::vector<double> costs;
        std::vector<SluCandidate> cands;
        for (const AsrExposure &e : exposures) {
          cands.push_back(run_candidate_through_nlu(tape, e, models));
          log_probs.push_back(cands.back().log_prob);
          costs.push_back(metric_cost(cfg.cost_metric, cands.back().annotation, ex.reference));
        }
        Tensor seq = sequence_loss(tape, log_probs, costs);
        log.seq_loss += seq.item();
        Tensor loss = tape.scale(seq, cfg.lambda_seq);
        if (with_mle) {
          Tensor la = sys.asr->mle_loss(tape, x, ex.tokens);
          const SluCandidate &top = cands.front();
          const std::vector<int> targets = hypothesis_slot_targets(
              *top.input_tokenizer, top.input_tokens, ex.words, ex.word_tags);
          Tensor ln = nlu_loss(tape, top.nlu, targets, ex.intent, ex.domain);
          log.asr_loss += la.item();
          log.nlu_loss += ln.item();
          loss = tape.add(loss, multitask_loss(tape, la, ln));
        }
        tape.backward(tape.scale(loss, scale));
      }
      if (!cfg.freeze_asr) clip_grad_norm(sys.asr->params(), cfg.grad_clip);
      clip_grad_norm(sys.nlu->params(), cfg.grad_clip);
      opt.step();
    }
    const double n = static_cast<double>(train.size());
    log.asr_loss /= n;
    log.nlu_loss /= n;
    log.seq_loss /= n;
    if (cfg.select_best) {
      log.dev_semer = evaluate_system(sys, data.splits.dev, opts, cfg.threads).semer;
      best.offer(epoch, *log.dev_semer);
    }
    report.epochs.push_back(log);
  }
  report.best_epoch = cfg.select_best ? best.restore_best(cfg.joint_epochs) : cfg.joint_epochs;
  finish_report(cfg, sys, data, report);
  save_system(sys, cfg.output_dir);
  report.wall_seconds = seconds_since(t0);
  return report;
}

RunReport run_training(const RunConfig &cfg) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  {
    std::ofstream out(fs::path(cfg.output_dir) / "config.json");
    out << run_config_to_json(cfg).dump(2) << '\n';
  }
  RunReport r = cfg.mode == TrainingMode::kIndependent ? train_independent(cfg)
                                                       : train_joint(cfg);
  std::ofstream out(fs::path(cfg.output_dir) / "report.json");
  out << r.to_json() << '\n';
  if (!out) throw Error("cannot write report to '" + cfg.output_dir + "'");
  return r;
}

}  // namespace slu
