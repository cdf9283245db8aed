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

#ifndef SLU_OPTIM_H_
#define SLU_OPTIM_H_

#include <string>
#include <vector>

#include "slu/tensor.h"

namespace slu {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParameterList = std::vector<NamedTensor>;

// Allocates (if needed) and zeroes every gradient buffer.
void zero_grads(ParameterList &params);

// p <- p - lr * grad, then grads are zeroed. Throws naming the first
// parameter without a gradient buffer.
void sgd_step(ParameterList &params, double lr);

// Scales every gradient so the global L2 norm is at most max_norm; returns
// the norm before scaling. Parameters without a gradient buffer are skipped.
double clip_grad_norm(ParameterList &params, double max_norm);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moment estimates persist across step() calls and are
// keyed by position in the parameter list.
class Adam {
 public:
  Adam(ParameterList params, AdamOptions opts);

  void step();
  std::size_t steps_taken() const { return t_; }
  const ParameterList &params() const { return params_; }
  AdamOptions &options() { return opts_; }

 private:
  ParameterList params_;
  AdamOptions opts_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace slu

#endif  // SLU_OPTIM_H_
