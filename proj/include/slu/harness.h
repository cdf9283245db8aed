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

// Training loops, evaluation and run reports.

#ifndef SLU_HARNESS_H_
#define SLU_HARNESS_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slu/config.h"
#include "slu/losses.h"
#include "slu/metrics.h"

namespace slu {

// Per-dimension mean and variance normalization of acoustic features.
struct FeatureNorm {
  std::vector<double> mean;
  std::vector<double> inv_std;

  // Statistics over every frame of `utts`; constant dimensions get unit scale.
  static FeatureNorm fit(const std::vector<Utterance> &utts);
  Tensor apply(const Tensor &features) const;
};

struct PreparedData {
  CorpusSplits splits;
  // Shared by the ASR and NLU models, built from training transcripts.
  Tokenizer tokenizer;
  LabelSet labels;
  FeatureNorm norm;  // fitted on the training split
  int feature_dim = 0;
};
PreparedData prepare_data(const RunConfig &cfg);

// An ASR model, an interface and an NLU model with their vocabularies.
struct SluSystem {
  Tokenizer tokenizer;
  LabelSet labels;
  FeatureNorm norm;
  InterfaceKind interface = InterfaceKind::kText;
  std::unique_ptr<AsrModel> asr;
  std::unique_ptr<TnluModel> nlu;

  SluModels models() const;
};

SluSystem build_system(const RunConfig &cfg, const PreparedData &data,
                       InterfaceKind interface);
// Writes asr.ckpt and nlu.ckpt under `dir`; the checkpoint metadata holds
// everything needed to rebuild the system.
void save_system(const SluSystem &sys, const std::string &dir);
SluSystem load_system(const std::string &dir);

DecodeOptions decode_options(const RunConfig &cfg);

// One-best SLU output for an utterance; `features` are raw (unnormalized).
SluCandidate run_slu(const SluSystem &sys, Tape &tape, const Tensor &features,
                     const DecodeOptions &opts);

// Decodes every utterance (on up to `threads` workers) and scores the
// pipeline output. Hypotheses are returned in input order when requested.
MetricReport evaluate_system(const SluSystem &sys, const std::vector<Utterance> &utts,
                             const DecodeOptions &opts, int threads,
                             std::vector<SluAnnotation> *hyps = nullptr);
// Text-input NLU on ground-truth transcripts; no transcript metrics.
MetricReport evaluate_nlu_on_text(const SluSystem &sys, const std::vector<Utterance> &utts);

// Percent of utterances whose one-best max-transition frames are
// nondecreasing in token position. Transducer systems only.
double monotone_selection_percent(const SluSystem &sys, const std::vector<Utterance> &utts,
                                  const DecodeOptions &opts, int threads);

struct EpochLog {
  std::string phase;  // "independent" or "joint"
  int epoch = 0;
  double asr_loss = 0.0;
  double nlu_loss = 0.0;
  double seq_loss = 0.0;
  std::optional<double> dev_semer;
};

struct RunReport {
  std::string config_json;
  std::string config_hash;
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  MetricReport dev, test;
  std::optional<MetricReport> nlu_text_dev, nlu_text_test;
  // Dev metrics of the warm-start models before the joint phase.
  std::optional<MetricReport> warm_start_dev;
  // Transducer systems: monotone_selection_percent on dev.
  std::optional<double> dev_monotone_percent;
  double wall_seconds = 0.0;

  std::string to_json() const;
};

RunReport train_independent(const RunConfig &cfg);
RunReport train_joint(const RunConfig &cfg);
// Dispatches on cfg.mode, writes config.json and report.json into
// cfg.output_dir and returns the report.
RunReport run_training(const RunConfig &cfg);

}  // namespace slu

#endif  // SLU_HARNESS_H_
