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

// Run configuration: a versioned JSON document with dotted-key overrides.
//
// Top-level keys: version, seed, output_dir, threads, mode, interface,
// pretrained_asr, pretrained_nlu, freeze_asr, init_from, epochs,
// joint_epochs, batch_size, lr, nlu_lr, joint_lr, grad_clip, lambda_seq, nbest_size,
// cost_metric, beam_width, max_decode_len, select_best, tokenizer, and the
// sections asr, nlu and data. Unknown keys are rejected.

#ifndef SLU_CONFIG_H_
#define SLU_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "slu/asr.h"
#include "slu/data.h"
#include "slu/losses.h"
#include "slu/nlu.h"

namespace slu {

inline constexpr int kConfigVersion = 1;

struct DataConfig {
  // Generated and split 80/10/10 when set; otherwise read from the paths.
  // A data section that names files but no corpus clears the default.
  std::optional<CorpusSpec> corpus = CorpusSpec{};
  std::string train_path, dev_path, test_path;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "runs/default";
  int threads = 1;

  TrainingMode mode = TrainingMode::kIndependent;
  InterfaceKind interface = InterfaceKind::kText;
  // Warm-start the ASR model / the NLU model from an independent run.
  bool pretrained_asr = false;
  bool pretrained_nlu = false;
  bool freeze_asr = false;
  // Directory of an earlier independent run; empty runs that phase in-process.
  std::string init_from;

  int epochs = 30;        // independent phase
  int joint_epochs = 10;  // joint phase
  int batch_size = 8;
  double lr = 1e-3;
  double nlu_lr = 0.0;  // independent NLU updates; 0 uses lr
  double joint_lr = 1e-3;
  double grad_clip = 5.0;
  double lambda_seq = 1.0;
  int nbest_size = 4;
  CostMetric cost_metric = CostMetric::kSemer;
  int beam_width = 4;
  int max_decode_len = 32;
  int max_symbols_per_frame = 8;
  // Keep the epoch with the best dev SemER instead of the last one.
  bool select_best = true;

  TokenizerMode tokenizer = TokenizerMode::kWord;
  AsrConfig asr;  // vocab_size, feature_dim and seed are filled from the data
  NluConfig nlu;
  DataConfig data;

  ModeSpec mode_spec() const {
    return {mode, interface, pretrained_asr, pretrained_nlu};
  }
  // Checks ranges and the interface/mode matrix.
  void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig &cfg);
RunConfig run_config_from_json(const nlohmann::json &j);

// Sets a dotted key ("asr.encoder_units=32", "data.corpus.noise_std=0.3").
// The value is parsed as JSON, falling back to a plain string. The key must
// already exist in `j`.
void apply_override(nlohmann::json &j, const std::string &assignment);

// Reads a config file (or defaults when `path` is empty), then applies
// SLU_OUTPUT_DIR / SLU_THREADS from the environment, then the overrides.
RunConfig load_run_config(const std::string &path,
                          const std::vector<std::string> &overrides = {});

// Hex FNV-1a digest of the canonical config JSON and the library version.
std::string config_hash(const RunConfig &cfg);

inline constexpr const char *kLibraryVersion = "0.1.0";

}  // namespace slu

#endif  // SLU_CONFIG_H_
