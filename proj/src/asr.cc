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

#include "slu/asr.h"

#include "slu/error.h"
#include "slu/las.h"
#include "slu/rnnt.h"

namespace slu {

std::string_view to_string(AsrKind k) {
  return k == AsrKind::kRnnt ? "rnnt" : "las";
}

AsrKind asr_kind_from_string(std::string_view s) {
  if (s == "rnnt") return AsrKind::kRnnt;
  if (s == "las") return AsrKind::kLas;
  throw ConfigError(internal::StrCat("unknown asr kind '", s,
                                     "' (expected rnnt|las)"));
}

void AsrConfig::validate() const {
  auto positive = [](int v, const char *name) {
    if (v < 1)
      throw ConfigError(internal::StrCat("asr.", name, " must be >= 1, got ", v));
  };
  positive(feature_dim, "feature_dim");
  positive(embed_dim, "embed_dim");
  positive(encoder_units, "encoder_units");
  positive(encoder_layers, "encoder_layers");
  positive(pred_units, "pred_units");
  positive(pred_layers, "pred_layers");
  positive(joint_units, "joint_units");
  positive(decoder_units, "decoder_units");
  positive(decoder_layers, "decoder_layers");
  positive(attention_heads, "attention_heads");
  positive(attention_units, "attention_units");
  if (left_context < 0)
    throw ConfigError(internal::StrCat("asr.left_context must be >= 0, got ", left_context));
  if (vocab_size < 3)
    throw ConfigError(internal::StrCat(
        "asr vocabulary must hold blank, eos and unk plus symbols, got ",
        vocab_size));
  if (kind == AsrKind::kLas && encoder_units % (2 * attention_heads) != 0)
    throw ConfigError(internal::StrCat(
        "las encoder_units (", encoder_units,
        ") must be divisible by 2 * attention_heads (", 2 * attention_heads, ")"));
}

bool hypothesis_before(const Hypothesis &a, const Hypothesis &b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

std::vector<int> max_transition_frames(const Tensor &lattice_transitions) {
  SLU_CHECK(lattice_transitions.defined(), "missing lattice transitions");
  SLU_CHECK(lattice_transitions.rank() == 2, "lattice transitions must be U x T, got ",
            shape_str(lattice_transitions.shape()));
  const std::size_t U = lattice_transitions.dim(0), T = lattice_transitions.dim(1);
  SLU_CHECK(T > 0 || U == 0, "lattice transitions over zero frames");
  std::vector<int> out(U, 0);
  const std::span<const double> p = lattice_transitions.data();
  for (std::size_t u = 0; u < U; ++u) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < T; ++t)
      if (p[u * T + t] > p[u * T + best]) best = t;
    out[u] = static_cast<int>(best);
  }
  return out;
}

void AsrModel::check_tokens(std::span<const int> y) const {
  for (std::size_t i = 0; i < y.size(); ++i)
    SLU_CHECK(y[i] > 0 && y[i] < config_.vocab_size, "token ", y[i],
              " at position ", i, " is outside the vocabulary (size ",
              config_.vocab_size, ")");
}

void AsrModel::check_features(const Tensor &x) const {
  SLU_CHECK(x.defined() && x.rank() == 2, "features must be a T x F matrix");
  SLU_CHECK(x.dim(0) > 0, "empty audio (T=0)");
  SLU_CHECK(x.dim(1) == static_cast<std::size_t>(config_.feature_dim),
            "feature dim ", x.dim(1), " does not match model feature_dim ",
            config_.feature_dim);
}

std::size_t AsrModel::encoder_input_dim() const {
  return static_cast<std::size_t>(config_.feature_dim) * (1 + config_.left_context);
}

Tensor AsrModel::encoder_input(Tape &tape, const Tensor &x) const {
  check_features(x);
  if (config_.left_context == 0) return x;
  const std::size_t T = x.dim(0), F = x.dim(1);
  std::vector<Tensor> cols{x};
  for (int k = 1; k <= config_.left_context; ++k) {
    const std::size_t shift = std::min<std::size_t>(k, T);
    Tensor pad({shift, F});
    cols.push_back(shift == T ? pad : tape.concat({pad, tape.slice(x, 0, 0, T - shift)}, 0));
  }
  return tape.concat(std::span<const Tensor>(cols), 1);
}

std::unique_ptr<AsrModel> make_asr_model(const AsrConfig &cfg) {
  if (cfg.kind == AsrKind::kRnnt) return std::make_unique<RnntModel>(cfg);
  return std::make_unique<LasModel>(cfg);
}

}  // namespace slu
