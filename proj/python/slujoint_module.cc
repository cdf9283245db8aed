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

// Python bindings. Reports and configs cross the boundary as dicts.

#include <filesystem>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "slu/error.h"
#include "slu/gradsuite.h"
#include "slu/harness.h"
#include "slu/rnnt.h"

namespace py = pybind11;
namespace {

py::object to_python(const std::string &json_text) {
  return py::module_::import("json").attr("loads")(json_text);
}

std::string from_python(const py::object &obj) {
  return py::module_::import("json").attr("dumps")(obj).cast<std::string>();
}

slu::RunConfig make_config(const std::string &path, const std::vector<std::string> &overrides) {
  return slu::load_run_config(path, overrides);
}

slu::SluAnnotation annotation(const py::dict &d) {
  slu::SluAnnotation a;
  a.words = slu::split_words(d.contains("transcript") ? d["transcript"].cast<std::string>() : "");
  if (d.contains("slots"))
    for (const auto &s : d["slots"].cast<std::vector<std::pair<std::string, std::string>>>())
      a.slots.push_back({s.first, s.second});
  if (d.contains("intent")) a.intent = d["intent"].cast<std::string>();
  if (d.contains("domain")) a.domain = d["domain"].cast<std::string>();
  return a;
}

}  // namespace

PYBIND11_MODULE(slujoint, m) {
  m.doc() = "Joint ASR and NLU training for spoken language understanding";
  m.attr("__version__") = slu::kLibraryVersion;

  // Translators run newest first, so the base class goes first.
  py::register_exception<slu::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<slu::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "load_config",
      [](const std::string &path, const std::vector<std::string> &overrides) {
        return to_python(slu::run_config_to_json(make_config(path, overrides)).dump());
      },
      py::arg("path") = "", py::arg("overrides") = std::vector<std::string>{},
      "Resolved run config (defaults, file, environment, overrides) as a dict.");

  m.def(
      "train",
      [](const std::string &path, const std::vector<std::string> &overrides) {
        const slu::RunConfig cfg = make_config(path, overrides);
        py::gil_scoped_release release;
        const std::string report = slu::run_training(cfg).to_json();
        py::gil_scoped_acquire acquire;
        return to_python(report);
      },
      py::arg("path") = "", py::arg("overrides") = std::vector<std::string>{},
      "Trains per the config and returns the run report.");

  m.def(
      "evaluate",
      [](const std::string &checkpoint, const std::string &path,
         const std::vector<std::string> &overrides, const std::string &split, bool text) {
        std::string config_path = path;
        const std::filesystem::path saved = std::filesystem::path(checkpoint) / "config.json";
        if (config_path.empty() && std::filesystem::exists(saved)) config_path = saved.string();
        const slu::RunConfig cfg = make_config(config_path, overrides);
        const slu::SluSystem sys = slu::load_system(checkpoint);
        const slu::PreparedData data = slu::prepare_data(cfg);
        const auto &utts = split == "train" ? data.splits.train
                           : split == "test" ? data.splits.test
                                             : data.splits.dev;
        const slu::MetricReport r =
            text ? slu::evaluate_nlu_on_text(sys, utts)
                 : slu::evaluate_system(sys, utts, slu::decode_options(cfg), cfg.threads);
        return to_python(r.to_json());
      },
      py::arg("checkpoint"), py::arg("path") = "",
      py::arg("overrides") = std::vector<std::string>{}, py::arg("split") = "dev",
      py::arg("text") = false,
      "Scores a saved system on one split; the run's config.json by default.");

  m.def(
      "generate_corpus",
      [](const py::object &spec) {
        const slu::CorpusSpec s = slu::corpus_spec_from_json(
            spec.is_none() ? std::string("{}") : from_python(spec));
        py::list out;
        for (const slu::Utterance &u : slu::generate_corpus(s)) {
          py::dict d;
          d["id"] = u.id;
          d["transcript"] = u.transcript;
          d["intent"] = u.intent;
          d["domain"] = u.domain;
          py::list slots;
          for (const slu::Slot &sl : u.slots) slots.append(py::make_tuple(sl.name, sl.value));
          d["slots"] = slots;
          py::array_t<double> f({u.features.dim(0), u.features.dim(1)});
          std::copy(u.features.data().begin(), u.features.data().end(), f.mutable_data());
          d["features"] = f;
          out.append(d);
        }
        return out;
      },
      py::arg("spec") = py::none(), "Synthetic utterances for a corpus spec dict.");

  m.def(
      "rnnt_loss",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> log_probs,
         const std::vector<int> &labels) {
        if (log_probs.ndim() != 3) throw slu::ShapeError("log_probs must be T x (U+1) x K");
        slu::Tensor lp({static_cast<std::size_t>(log_probs.shape(0)),
                        static_cast<std::size_t>(log_probs.shape(1)),
                        static_cast<std::size_t>(log_probs.shape(2))},
                       std::vector<double>(log_probs.data(), log_probs.data() + log_probs.size()));
        slu::Tape tape(false);
        return slu::rnnt_loss_from_log_probs(tape, lp, labels).item();
      },
      py::arg("log_probs"), py::arg("labels"),
      "-ln P(labels) under a transducer log-probability lattice.");

  m.def(
      "wer",
      [](const std::vector<std::string> &ref, const std::vector<std::string> &hyp) {
        return slu::wer(ref, hyp);
      },
      py::arg("ref"), py::arg("hyp"), "Word error rate of one pair, as a ratio.");
  m.def(
      "semer",
      [](const py::dict &ref, const py::dict &hyp) {
        return slu::semer(annotation(ref), annotation(hyp));
      },
      py::arg("ref"), py::arg("hyp"), "Semantic error rate of one pair, as a ratio.");
  m.def(
      "slu_f1",
      [](const py::dict &ref, const py::dict &hyp) {
        return slu::slu_f1(annotation(ref), annotation(hyp));
      },
      py::arg("ref"), py::arg("hyp"), "SLU-F1 of one pair.");

  m.def(
      "grad_check",
      [](double eps, double rtol, std::size_t coords, std::uint64_t seed) {
        slu::GradSuiteOptions o;
        o.eps = eps;
        o.rtol = rtol;
        o.max_coords_per_param = coords;
        o.seed = seed;
        py::list out;
        for (const slu::GradCheckReport &r : slu::run_grad_suite(o)) {
          py::dict d;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["max_rel_error"] = r.max_rel_error;
          d["coords"] = r.entries.size();
          out.append(d);
        }
        return out;
      },
      py::arg("eps") = 1e-5, py::arg("rtol") = 1e-3, py::arg("coords") = 6,
      py::arg("seed") = 1, "Runs the finite-difference gradient suite.");
}
