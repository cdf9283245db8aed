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

#ifndef SLU_NN_H_
#define SLU_NN_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "slu/optim.h"
#include "slu/tensor.h"

namespace slu::nn {

// Creates named, trainable parameters and registers them in a shared list.
// Names are dotted paths ("rnnt.encoder.layer0.w_x"); creation order is the
// checkpoint order.
class ParamBuilder {
 public:
  ParamBuilder(std::string prefix, std::mt19937_64 *rng, ParameterList *out);

  ParamBuilder child(const std::string &name) const;

  Tensor uniform(const std::string &name, Shape shape, double bound);
  // Glorot-uniform for a fan_in x fan_out matrix.
  Tensor xavier(const std::string &name, std::size_t fan_in,
                std::size_t fan_out);
  Tensor constant(const std::string &name, Shape shape, double value);

 private:
  Tensor add(const std::string &name, Tensor t);

  std::string prefix_;
  std::mt19937_64 *rng_;
  ParameterList *out_;
};

class Linear {
 public:
  Linear() = default;
  // zero_init gives an all-zero weight (the bias is always zero at init).
  Linear(ParamBuilder pb, std::size_t in, std::size_t out,
         bool zero_init = false);
  Tensor operator()(Tape &tape, const Tensor &x) const;
  std::size_t in_dim() const { return w_.dim(0); }
  std::size_t out_dim() const { return w_.dim(1); }
  const Tensor &weight() const { return w_; }
  const Tensor &bias() const { return b_; }

 private:
  Tensor w_, b_;
};

struct LstmState {
  Tensor h;  // 1 x H
  Tensor c;  // 1 x H
};

// Single LSTM layer unrolled on the tape, gate layout [i f o | g].
class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(ParamBuilder pb, std::size_t in, std::size_t hidden);

  std::size_t hidden() const { return hidden_; }
  LstmState initial_state(Tape &tape) const;
  LstmState step(Tape &tape, const Tensor &x_row, const LstmState &s) const;
  // x: T x in -> T x H. reverse=true runs right-to-left (outputs stay in
  // input order).
  Tensor forward(Tape &tape, const Tensor &x, bool reverse = false) const;

 private:
  LstmState cell(Tape &tape, const Tensor &pre, const LstmState &s) const;

  std::size_t hidden_ = 0;
  Tensor w_x_, w_h_, b_;
};

class StackedLstm {
 public:
  StackedLstm() = default;
  StackedLstm(ParamBuilder pb, std::size_t in, std::size_t hidden,
              std::size_t layers);

  Tensor forward(Tape &tape, const Tensor &x) const;
  std::vector<LstmState> initial_state(Tape &tape) const;
  // One timestep through every layer; returns the top output (1 x H).
  Tensor step(Tape &tape, const Tensor &x_row,
              std::vector<LstmState> &states) const;
  std::size_t out_dim() const { return layers_.back().hidden(); }

 private:
  std::vector<LstmLayer> layers_;
};

// Bidirectional stack; each layer concatenates a forward and a backward
// pass of `hidden_per_direction` units.
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(ParamBuilder pb, std::size_t in, std::size_t hidden_per_direction,
         std::size_t layers);
  Tensor forward(Tape &tape, const Tensor &x) const;
  std::size_t out_dim() const { return 2 * fwd_.back().hidden(); }

 private:
  std::vector<LstmLayer> fwd_, bwd_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamBuilder pb, std::size_t dim);
  Tensor operator()(Tape &tape, const Tensor &x) const;

 private:
  Tensor gain_, bias_;
};

// Scaled dot-product multi-head attention. Rows of `query` attend over rows
// of `memory`; per-head weight matrices are appended to `weights` if given.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamBuilder pb, std::size_t query_dim,
                     std::size_t memory_dim, std::size_t model_dim,
                     std::size_t heads, bool zero_output = false);
  Tensor operator()(Tape &tape, const Tensor &query, const Tensor &memory,
                    std::vector<Tensor> *weights = nullptr) const;

 private:
  std::size_t heads_ = 1;
  Linear q_, k_, v_, o_;
};

class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(ParamBuilder pb, std::size_t dim, std::size_t hidden,
              bool zero_output = false);
  Tensor operator()(Tape &tape, const Tensor &x) const;

 private:
  Linear in_, out_;
};

// rows x dim sinusoidal position table (constant).
Tensor sinusoidal_positions(std::size_t rows, std::size_t dim);

}  // namespace slu::nn

#endif  // SLU_NN_H_
