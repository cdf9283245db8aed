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

#include "slu/optim.h"

#include <cmath>

#include "slu/error.h"

namespace slu {
namespace {

void require_grads(const ParameterList &params) {
  for (const NamedTensor &p : params)
    SLU_CHECK(p.tensor.has_grad(), "parameter '", p.name,
              "' has no gradient; run backward before stepping");
}

}  // namespace

void zero_grads(ParameterList &params) {
  for (NamedTensor &p : params) p.tensor.zero_grad();
}

double clip_grad_norm(ParameterList &params, double max_norm) {
  SLU_CHECK(max_norm > 0.0, "max_norm must be positive, got ", max_norm);
  double sq = 0.0;
  for (const NamedTensor &p : params)
    if (p.tensor.has_grad())
      for (double g : p.tensor.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (NamedTensor &p : params)
      if (p.tensor.has_grad())
        for (double &g : p.tensor.mutable_grad()) g *= s;
  }
  return norm;
}

void sgd_step(ParameterList &params, double lr) {
  SLU_CHECK(lr > 0.0, "learning rate must be positive, got ", lr);
  require_grads(params);
  for (NamedTensor &p : params) {
    std::span<double> w = p.tensor.mutable_data();
    std::span<const double> g = p.tensor.grad();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
    p.tensor.zero_grad();
  }
}

Adam::Adam(ParameterList params, AdamOptions opts)
    : params_(std::move(params)), opts_(opts) {
  for (const NamedTensor &p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step() {
  SLU_CHECK(opts_.lr > 0.0, "learning rate must be positive, got ", opts_.lr);
  require_grads(params_);
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    std::span<double> w = params_[k].tensor.mutable_data();
    std::span<const double> g = params_[k].tensor.grad();
    std::vector<double> &m = m_[k];
    std::vector<double> &v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
    params_[k].tensor.zero_grad();
  }
}

}  // namespace slu
