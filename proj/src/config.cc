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

#include "slu/config.h"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "slu/error.h"

namespace slu {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and reports any it did not consume.
class ObjectReader {
 public:
  ObjectReader(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object())
      throw ConfigError(internal::StrCat("config ", where(), " must be an object"));
  }

  template <typename T>
  void get(const char *key, T &out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception &) {
      throw ConfigError(internal::StrCat("config key '", qualified(key),
                                         "' has the wrong type: ", it->dump()));
    }
  }

  const json *child(const char *key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string qualified(const std::string &key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError("unknown config key '" + qualified(it.key()) + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "root" : "'" + path_ + "'"; }
  const json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Enum, typename Parse>
void get_enum(ObjectReader &r, const char *key, Enum &out, Parse parse) {
  if (const json *v = r.child(key)) {
    if (!v->is_string())
      throw ConfigError(internal::StrCat("config key '", r.qualified(key),
                                         "' must be a string, got ", v->dump()));
    out = parse(v->get<std::string>());
  }
}

json asr_to_json(const AsrConfig &a) {
  return {{"kind", to_string(a.kind)},
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
          {"attention_units", a.attention_units}};
}

AsrConfig asr_from_json(const json &j) {
  AsrConfig a;
  ObjectReader r(j, "asr");
  get_enum(r, "kind", a.kind, asr_kind_from_string);
  r.get("embed_dim", a.embed_dim);
  r.get("encoder_units", a.encoder_units);
  r.get("encoder_layers", a.encoder_layers);
  r.get("left_context", a.left_context);
  r.get("pred_units", a.pred_units);
  r.get("pred_layers", a.pred_layers);
  r.get("joint_units", a.joint_units);
  r.get("decoder_units", a.decoder_units);
  r.get("decoder_layers", a.decoder_layers);
  r.get("attention_heads", a.attention_heads);
  r.get("attention_units", a.attention_units);
  r.finish();
  return a;
}

json nlu_to_json(const NluConfig &n) {
  return {{"model_dim", n.model_dim}, {"layers", n.layers},         {"heads", n.heads},
          {"ff_dim", n.ff_dim},       {"head_units", n.head_units}, {"cross_layers", n.cross_layers}};
}

NluConfig nlu_from_json(const json &j) {
  NluConfig n;
  ObjectReader r(j, "nlu");
  r.get("model_dim", n.model_dim);
  r.get("layers", n.layers);
  r.get("heads", n.heads);
  r.get("ff_dim", n.ff_dim);
  r.get("head_units", n.head_units);
  r.get("cross_layers", n.cross_layers);
  r.finish();
  return n;
}

void require(bool ok, const std::string &msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void RunConfig::validate() const {
  validate_mode(mode_spec());
  require(threads >= 1, internal::StrCat("threads must be >= 1, got ", threads));
  require(epochs >= 0, internal::StrCat("epochs must be >= 0, got ", epochs));
  require(joint_epochs >= 0, internal::StrCat("joint_epochs must be >= 0, got ", joint_epochs));
  require(batch_size >= 1, internal::StrCat("batch_size must be >= 1, got ", batch_size));
  require(lr > 0.0 && joint_lr > 0.0, "learning rates must be positive");
  require(nlu_lr >= 0.0, "nlu_lr must be >= 0");
  require(grad_clip > 0.0, "grad_clip must be positive");
  require(lambda_seq >= 0.0, "lambda_seq must be >= 0");
  require(nbest_size >= 1, internal::StrCat("nbest_size must be >= 1, got ", nbest_size));
  require(beam_width >= 1, internal::StrCat("beam_width must be >= 1, got ", beam_width));
  require(max_decode_len >= 1, "max_decode_len must be >= 1");
  require(max_symbols_per_frame >= 1, "max_symbols_per_frame must be >= 1");
  require(data.corpus.has_value() || !data.train_path.empty(),
          "data needs either a corpus spec or dataset paths");
  require(!(data.corpus && !data.train_path.empty()),
          "data.corpus and data.train are exclusive; set data.corpus to null to read files");
  if (!data.corpus) require(!data.dev_path.empty(), "data.dev path is required");
  if (data.corpus) data.corpus->validate();
  nlu.validate();
  if (!init_from.empty())
    require(mode != TrainingMode::kIndependent,
            "init_from only applies to joint training modes");
}

json run_config_to_json(const RunConfig &c) {
  json data = {{"corpus", nullptr},
               {"train", c.data.train_path},
               {"dev", c.data.dev_path},
               {"test", c.data.test_path}};
  if (c.data.corpus) data["corpus"] = json::parse(corpus_spec_to_json(*c.data.corpus));
  return {{"version", kConfigVersion},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"threads", c.threads},
          {"mode", to_string(c.mode)},
          {"interface", to_string(c.interface)},
          {"pretrained_asr", c.pretrained_asr},
          {"pretrained_nlu", c.pretrained_nlu},
          {"freeze_asr", c.freeze_asr},
          {"init_from", c.init_from},
          {"epochs", c.epochs},
          {"joint_epochs", c.joint_epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"nlu_lr", c.nlu_lr},
          {"joint_lr", c.joint_lr},
          {"grad_clip", c.grad_clip},
          {"lambda_seq", c.lambda_seq},
          {"nbest_size", c.nbest_size},
          {"cost_metric", to_string(c.cost_metric)},
          {"beam_width", c.beam_width},
          {"max_decode_len", c.max_decode_len},
          {"max_symbols_per_frame", c.max_symbols_per_frame},
          {"select_best", c.select_best},
          {"tokenizer", to_string(c.tokenizer)},
          {"asr", asr_to_json(c.asr)},
          {"nlu", nlu_to_json(c.nlu)},
          {"data", data}};
}

RunConfig run_config_from_json(const json &j) {
  RunConfig c;
  ObjectReader r(j, "");
  int version = kConfigVersion;
  r.get("version", version);
  if (version != kConfigVersion)
    throw ConfigError(internal::StrCat("unsupported config version ", version,
                                       " (expected ", kConfigVersion, ")"));
  r.get("seed", c.seed);
  r.get("output_dir", c.output_dir);
  r.get("threads", c.threads);
  get_enum(r, "mode", c.mode, training_mode_from_string);
  get_enum(r, "interface", c.interface, interface_kind_from_string);
  r.get("pretrained_asr", c.pretrained_asr);
  r.get("pretrained_nlu", c.pretrained_nlu);
  r.get("freeze_asr", c.freeze_asr);
  r.get("init_from", c.init_from);
  r.get("epochs", c.epochs);
  r.get("joint_epochs", c.joint_epochs);
  r.get("batch_size", c.batch_size);
  r.get("lr", c.lr);
  r.get("nlu_lr", c.nlu_lr);
  r.get("joint_lr", c.joint_lr);
  r.get("grad_clip", c.grad_clip);
  r.get("lambda_seq", c.lambda_seq);
  r.get("nbest_size", c.nbest_size);
  get_enum(r, "cost_metric", c.cost_metric, cost_metric_from_string);
  r.get("beam_width", c.beam_width);
  r.get("max_decode_len", c.max_decode_len);
  r.get("max_symbols_per_frame", c.max_symbols_per_frame);
  r.get("select_best", c.select_best);
  get_enum(r, "tokenizer", c.tokenizer, tokenizer_mode_from_string);
  if (const json *a = r.child("asr")) c.asr = asr_from_json(*a);
  if (const json *n = r.child("nlu")) c.nlu = nlu_from_json(*n);
  if (const json *d = r.child("data")) {
    ObjectReader dr(*d, "data");
    const json *corpus = dr.child("corpus");
    dr.get("train", c.data.train_path);
    if (corpus && !corpus->is_null())
      c.data.corpus = corpus_spec_from_json(corpus->dump());
    else if (corpus || !c.data.train_path.empty())
      c.data.corpus.reset();
    dr.get("dev", c.data.dev_path);
    dr.get("test", c.data.test_path);
    dr.finish();
  }
  r.finish();
  return c;
}

void apply_override(json &j, const std::string &assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json *node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (!node->is_object() || !node->contains(part))
      throw ConfigError("unknown config key '" + key.substr(0, dot) + "' in override");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  *node = value;
}

RunConfig load_run_config(const std::string &path,
                          const std::vector<std::string> &overrides) {
  json j = run_config_to_json(RunConfig{});
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    json file;
    try {
      in >> file;
    } catch (const json::exception &e) {
      throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    j = run_config_to_json(run_config_from_json(file));
  }
  if (const char *dir = std::getenv("SLU_OUTPUT_DIR"); dir && *dir) j["output_dir"] = dir;
  if (const char *th = std::getenv("SLU_THREADS"); th && *th) {
    char *end = nullptr;
    const long n = std::strtol(th, &end, 10);
    if (*end != '\0' || n < 1)
      throw ConfigError(internal::StrCat("SLU_THREADS must be a positive integer, got '",
                                         th, "'"));
    j["threads"] = n;
  }
  for (const std::string &o : overrides) apply_override(j, o);
  RunConfig cfg = run_config_from_json(j);
  cfg.validate();
  return cfg;
}

std::string config_hash(const RunConfig &cfg) {
  json j = run_config_to_json(cfg);
  j.erase("output_dir");
  j.erase("threads");
  std::ostringstream os;
  os << std::hex << stable_hash(j.dump() + "|" + kLibraryVersion);
  return os.str();
}

}  // namespace slu
