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

#ifndef SLU_GRADCHECK_H_
#define SLU_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "slu/optim.h"
#include "slu/tensor.h"

namespace slu {

struct GradCheckOptions {
  double eps = 1e-5;
  double rtol = 1e-3;
  // Denominator floor for the relative error; keeps coordinates whose true
  // gradient is ~0 from failing on round-off.
  double abs_floor = 1e-6;
  // Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 7;
};

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::string name;
  bool passed = false;
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> entries;
};

// f builds a scalar on the tape it is handed; it must read the parameters
// it depends on (they are perturbed in place between calls).
using ScalarFn = std::function<Tensor(Tape &)>;

// Compares the tape gradient against (f(x+eps) - f(x-eps)) / (2 eps) for
// every checked coordinate. Throws if f is not deterministic or eps is
// outside [1e-7, 1e-3]. Existing gradient buffers of `params` are preserved.
GradCheckReport grad_check(const ScalarFn &f, const ParameterList &params,
                           const GradCheckOptions &opts = {});

// Single-point form: f(tape, x).
GradCheckReport grad_check(const std::function<Tensor(Tape &, const Tensor &)> &f,
                           Tensor point, double eps, double rtol);

}  // namespace slu

#endif  // SLU_GRADCHECK_H_
