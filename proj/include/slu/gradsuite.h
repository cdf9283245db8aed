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

// Finite-difference checks of every training loss on tiny models.

#ifndef SLU_GRADSUITE_H_
#define SLU_GRADSUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "slu/gradcheck.h"

namespace slu {

struct GradSuiteOptions {
  double eps = 1e-5;
  double rtol = 1e-3;
  // Coordinates sampled per parameter tensor; 0 checks all of them.
  std::size_t max_coords_per_param = 6;
  int frames = 4;  // T of every instance
  std::uint64_t seed = 1;
};

// One report per loss, named "<loss>/<asr>[/<interface>]": asr_mle for both
// recognizers, then nlu, multitask and sequence for each recognizer and
// interface. The NLU and sequence checks cover ASR and NLU parameters.
std::vector<GradCheckReport> run_grad_suite(const GradSuiteOptions &opts = {});

}  // namespace slu

#endif  // SLU_GRADSUITE_H_
