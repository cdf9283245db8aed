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

// Binary parameter checkpoints.
//
// Layout (all integers little-endian):
//   char[8]  magic "SLUCKPT1"
//   u32      format version (1)
//   u64      metadata length, then that many bytes of UTF-8 JSON
//   u64      tensor count
//   per tensor:
//     u32 name length, name bytes
//     u32 rank, u64 dims[rank]
//     f64 values[prod(dims)], row-major, IEEE-754 little-endian

#ifndef SLU_CHECKPOINT_H_
#define SLU_CHECKPOINT_H_

#include <string>
#include <utility>
#include <vector>

#include "slu/optim.h"
#include "slu/tensor.h"

namespace slu {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string metadata;  // JSON text
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor *find(const std::string &name) const;
};

void save_checkpoint(const std::string &path, const std::string &metadata,
                     const ParameterList &params);
Checkpoint load_checkpoint(const std::string &path);

// Copies values into `params` by name. Every parameter must be present with
// the same shape; errors name the offending parameter.
void assign_parameters(const Checkpoint &ckpt, ParameterList &params);

}  // namespace slu

#endif  // SLU_CHECKPOINT_H_
