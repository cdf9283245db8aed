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

#include "slu/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "slu/error.h"

namespace slu {
namespace {

double evaluate(const ScalarFn &f) {
  Tape tape(/*record=*/false);
  Tensor y = f(tape);
  SLU_CHECK(y.numel() == 1, "grad_check: function is not scalar-valued (shape ",
            shape_str(y.shape()), ")");
  return y.item();
}

}  // namespace

GradCheckReport grad_check(const ScalarFn &f, const ParameterList &params,
                           const GradCheckOptions &opts) {
  SLU_CHECK(opts.eps >= 1e-7 && opts.eps <= 1e-3, "grad_check: eps ", opts.eps,
            " outside [1e-7, 1e-3]");
  const double base1 = evaluate(f);
  const double base2 = evaluate(f);
  SLU_CHECK(base1 == base2, "grad_check: function is not deterministic (",
            base1, " vs ", base2, ")");

  // Analytic gradients, isolated from whatever the caller had accumulated.
  std::vector<std::vector<double>> saved(params.size());
  std::vector<bool> had(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor t = params[k].tensor;
    had[k] = t.has_grad();
    if (had[k]) saved[k].assign(t.grad().begin(), t.grad().end());
    t.zero_grad();
  }
  std::vector<std::vector<double>> analytic(params.size());
  {
    Tape tape;
    Tensor y = f(tape);
    tape.backward(y);
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor t = params[k].tensor;
    analytic[k].assign(t.grad().begin(), t.grad().end());
    if (had[k]) {
      std::copy(saved[k].begin(), saved[k].end(), t.mutable_grad().begin());
    } else {
      t.clear_grad();
    }
  }

  GradCheckReport report;
  report.passed = true;
  std::mt19937_64 rng(opts.seed);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor t = params[k].tensor;
    std::vector<std::size_t> coords(t.numel());
    std::iota(coords.begin(), coords.end(), 0);
    if (opts.max_coords_per_param && coords.size() > opts.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opts.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    std::span<double> w = t.mutable_data();
    for (std::size_t i : coords) {
      const double orig = w[i];
      w[i] = orig + opts.eps;
      const double fp = evaluate(f);
      w[i] = orig - opts.eps;
      const double fm = evaluate(f);
      w[i] = orig;
      GradCheckEntry e;
      e.param = params[k].name;
      e.index = i;
      e.analytic = analytic[k][i];
      e.numeric = (fp - fm) / (2.0 * opts.eps);
      const double denom =
          std::max({std::abs(e.analytic), std::abs(e.numeric), opts.abs_floor});
      e.rel_error = std::abs(e.analytic - e.numeric) / denom;
      report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      if (!(e.rel_error <= opts.rtol)) report.passed = false;
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

GradCheckReport grad_check(const std::function<Tensor(Tape &, const Tensor &)> &f,
                           Tensor point, double eps, double rtol) {
  point.set_requires_grad(true);
  ParameterList params{{"x", point}};
  GradCheckOptions opts;
  opts.eps = eps;
  opts.rtol = rtol;
  return grad_check([&](Tape &tape) { return f(tape, point); }, params, opts);
}

}  // namespace slu
