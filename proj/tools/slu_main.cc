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

// slu: corpus generation, training, evaluation, decoding and gradient checks.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slu/error.h"
#include "slu/gradsuite.h"
#include "slu/harness.h"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kUsageError = 2;

std::string read_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw slu::Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<slu::Utterance> &pick_split(const slu::PreparedData &d,
                                              const std::string &split) {
  if (split == "train") return d.splits.train;
  if (split == "dev") return d.splits.dev;
  if (split == "test") return d.splits.test;
  throw slu::ConfigError("unknown split '" + split + "' (expected train|dev|test)");
}

json annotation_json(const slu::SluAnnotation &a) {
  json slots = json::array();
  for (const slu::Slot &s : a.slots) slots.push_back({s.name, s.value});
  return {{"transcript", slu::join_words(a.words)},
          {"intent", a.intent},
          {"domain", a.domain},
          {"slots", slots}};
}

int generate_data(const std::string &spec_path, const std::string &out_dir) {
  const slu::CorpusSpec spec =
      spec_path.empty() ? slu::CorpusSpec{} : slu::corpus_spec_from_json(read_file(spec_path));
  spec.validate();
  const slu::CorpusSplits s = slu::split_corpus(slu::generate_corpus(spec));
  fs::create_directories(out_dir);
  slu::write_dataset((fs::path(out_dir) / "train.jsonl").string(), s.train);
  slu::write_dataset((fs::path(out_dir) / "dev.jsonl").string(), s.dev);
  slu::write_dataset((fs::path(out_dir) / "test.jsonl").string(), s.test);
  std::ofstream((fs::path(out_dir) / "spec.json").string())
      << json::parse(slu::corpus_spec_to_json(spec)).dump(2) << "\n";
  std::printf("wrote %zu/%zu/%zu utterances to %s\n", s.train.size(), s.dev.size(),
              s.test.size(), out_dir.c_str());
  return 0;
}

int train(const slu::RunConfig &cfg) {
  const slu::RunReport r = slu::run_training(cfg);
  for (const slu::EpochLog &e : r.epochs) {
    std::printf("%-11s epoch %3d  asr %.4f  nlu %.4f  seq %.4f", e.phase.c_str(), e.epoch,
                e.asr_loss, e.nlu_loss, e.seq_loss);
    if (e.dev_semer) std::printf("  dev_semer %.2f", *e.dev_semer);
    std::printf("\n");
  }
  std::printf("best epoch %d  dev semer %.2f  test semer %.2f  (%.1f s)\n", r.best_epoch,
              r.dev.semer, r.test.semer, r.wall_seconds);
  std::printf("report: %s\n", (fs::path(cfg.output_dir) / "report.json").string().c_str());
  return 0;
}

int evaluate(const slu::RunConfig &cfg, const std::string &checkpoint,
             const std::string &split, bool text) {
  const slu::SluSystem sys = slu::load_system(checkpoint);
  const slu::PreparedData data = slu::prepare_data(cfg);
  const auto &utts = pick_split(data, split);
  const slu::MetricReport m =
      text ? slu::evaluate_nlu_on_text(sys, utts)
           : slu::evaluate_system(sys, utts, slu::decode_options(cfg), cfg.threads);
  std::printf("%s\n", json::parse(m.to_json()).dump(2).c_str());
  return 0;
}

int decode(const slu::RunConfig &cfg, const std::string &checkpoint,
           const std::string &split, int limit) {
  const slu::SluSystem sys = slu::load_system(checkpoint);
  const slu::PreparedData data = slu::prepare_data(cfg);
  const auto &utts = pick_split(data, split);
  const slu::DecodeOptions opts = slu::decode_options(cfg);
  const std::size_t n =
      limit > 0 ? std::min<std::size_t>(utts.size(), static_cast<std::size_t>(limit))
                : utts.size();
  for (std::size_t i = 0; i < n; ++i) {
    slu::Tape tape(false);
    const slu::SluCandidate c = slu::run_slu(sys, tape, utts[i].features, opts);
    json line = annotation_json(c.annotation);
    line["id"] = utts[i].id;
    line["log_prob"] = c.asr_log_prob.item();
    line["reference"] = annotation_json(slu::SluAnnotation::from_utterance(utts[i]));
    std::printf("%s\n", line.dump().c_str());
  }
  return 0;
}

int grad_check(const slu::GradSuiteOptions &opts) {
  int failed = 0;
  std::printf("%-34s %-6s %12s %8s\n", "check", "result", "max_rel_err", "coords");
  for (const slu::GradCheckReport &r : slu::run_grad_suite(opts)) {
    std::printf("%-34s %-6s %12.3e %8zu\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                r.max_rel_error, r.entries.size());
    failed += r.passed ? 0 : 1;
  }
  std::printf("%s\n", failed == 0 ? "all checks passed" : "some checks FAILED");
  return failed == 0 ? 0 : 1;
}

std::string error_kind(const std::exception &e) {
  if (dynamic_cast<const slu::ConfigError *>(&e)) return "config";
  if (dynamic_cast<const slu::ShapeError *>(&e)) return "shape";
  if (dynamic_cast<const slu::FormatError *>(&e)) return "format";
  if (dynamic_cast<const slu::Error *>(&e)) return "runtime";
  return "internal";
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Joint ASR and NLU training for spoken language understanding"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, split = "dev", spec_path, out_dir;
  std::vector<std::string> overrides;
  bool text = false;
  int limit = 0;
  slu::GradSuiteOptions gs;

  auto add_config = [&](CLI::App *c) {
    c->add_option("--config", config_path,
                  "run config (JSON); when omitted, defaults or the checkpoint's config.json")
        ->check(CLI::ExistingFile);
    c->add_option("--override", overrides, "dotted key=value, repeatable");
  };

  CLI::App *gen = app.add_subcommand("generate-data", "write train/dev/test JSONL files");
  gen->add_option("--spec", spec_path, "corpus spec (JSON); defaults when omitted")
      ->check(CLI::ExistingFile);
  gen->add_option("--out", out_dir, "output directory")->required();

  CLI::App *tr = app.add_subcommand("train", "train and write report.json");
  add_config(tr);

  CLI::App *ev = app.add_subcommand("evaluate", "score a trained system");
  add_config(ev);
  ev->add_option("--checkpoint", checkpoint, "run directory holding asr.ckpt and nlu.ckpt")
      ->required();
  ev->add_option("--split", split, "train|dev|test");
  ev->add_flag("--text", text, "NLU on ground-truth transcripts");

  CLI::App *de = app.add_subcommand("decode", "print one-best SLU output as JSONL");
  add_config(de);
  de->add_option("--checkpoint", checkpoint, "run directory")->required();
  de->add_option("--split", split, "train|dev|test");
  de->add_option("--limit", limit, "decode at most this many utterances");

  CLI::App *gc = app.add_subcommand("grad-check", "finite-difference gradient suite");
  add_config(gc);
  gc->add_option("--eps", gs.eps, "central difference step");
  gc->add_option("--rtol", gs.rtol, "relative error tolerance");
  gc->add_option("--coords", gs.max_coords_per_param,
                 "coordinates sampled per parameter (0 = all)");
  CLI::Option *seed = gc->add_option("--seed", gs.seed, "instance seed (default: config seed)");
  gc->add_option("--frames", gs.frames, "frames per instance");

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    std::cerr << "unknown subcommand '" << argv[1] << "'\n" << app.help();
    return kUsageError;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (gen->parsed()) return generate_data(spec_path, out_dir);
    if ((ev->parsed() || de->parsed()) && config_path.empty() &&
        std::filesystem::exists(std::filesystem::path(checkpoint) / "config.json"))
      config_path = (std::filesystem::path(checkpoint) / "config.json").string();
    const slu::RunConfig cfg = slu::load_run_config(config_path, overrides);
    if (gc->parsed()) {
      if (seed->count() == 0) gs.seed = cfg.seed;
      return grad_check(gs);
    }
    if (tr->parsed()) return train(cfg);
    if (ev->parsed()) return evaluate(cfg, checkpoint, split, text);
    return decode(cfg, checkpoint, split, limit);
  } catch (const std::exception &e) {
    std::cerr << json{{"error", error_kind(e)}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
}
