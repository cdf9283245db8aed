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

#include "slu/nn.h"

#include <cmath>

#include "slu/error.h"

namespace slu::nn {

ParamBuilder::ParamBuilder(std::string prefix, std::mt19937_64 *rng,
                           ParameterList *out)
    : prefix_(std::move(prefix)), rng_(rng), out_(out) {}

ParamBuilder ParamBuilder::child(const std::string &name) const {
  return ParamBuilder(prefix_.empty() ? name : prefix_ + "." + name, rng_, out_);
}

Tensor ParamBuilder::add(const std::string &name, Tensor t) {
  t.set_requires_grad(true);
  t.set_name(prefix_.empty() ? name : prefix_ + "." + name);
  out_->push_back({t.name(), t});
  return t;
}

Tensor ParamBuilder::uniform(const std::string &name, Shape shape,
                             double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(shape_numel(shape));
  for (double &x : v) x = dist(*rng_);
  return add(name, Tensor(std::move(shape), std::move(v)));
}

Tensor ParamBuilder::xavier(const std::string &name, std::size_t fan_in,
                            std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform(name, {fan_in, fan_out}, bound);
}

Tensor ParamBuilder::constant(const std::string &name, Shape shape,
                              double value) {
  std::vector<double> v(shape_numel(shape), value);
  return add(name, Tensor(std::move(shape), std::move(v)));
}

// ------------------------------------------------------------------ Linear

Linear::Linear(ParamBuilder pb, std::size_t in, std::size_t out,
               bool zero_init)
    : w_(zero_init ? pb.constant("w", {in, out}, 0.0) : pb.xavier("w", in, out)),
      b_(pb.constant("b", {out}, 0.0)) {}

Tensor Linear::operator()(Tape &tape, const Tensor &x) const {
  return tape.add(tape.matmul(x, w_), b_);
}

// -------------------------------------------------------------------- LSTM

LstmLayer::LstmLayer(ParamBuilder pb, std::size_t in, std::size_t hidden)
    : hidden_(hidden) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  w_x_ = pb.uniform("w_x", {in, 4 * hidden}, bound);
  w_h_ = pb.uniform("w_h", {hidden, 4 * hidden}, bound);
  b_ = pb.constant("b", {4 * hidden}, 0.0);
  std::span<double> b = b_.mutable_data();
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;  // forget gate
}

LstmState LstmLayer::initial_state(Tape &) const {
  return {Tensor({1, hidden_}), Tensor({1, hidden_})};
}

LstmState LstmLayer::cell(Tape &tape, const Tensor &pre,
                          const LstmState &s) const {
  const std::size_t h = hidden_;
  Tensor z = tape.add(pre, tape.matmul(s.h, w_h_));
  Tensor sig = tape.sigmoid(tape.slice(z, 1, 0, 3 * h));
  Tensor g = tape.tanh(tape.slice(z, 1, 3 * h, 4 * h));
  Tensor i = tape.slice(sig, 1, 0, h);
  Tensor f = tape.slice(sig, 1, h, 2 * h);
  Tensor o = tape.slice(sig, 1, 2 * h, 3 * h);
  Tensor c = tape.add(tape.mul(f, s.c), tape.mul(i, g));
  Tensor out = tape.mul(o, tape.tanh(c));
  return {out, c};
}

LstmState LstmLayer::step(Tape &tape, const Tensor &x_row,
                          const LstmState &s) const {
  Tensor pre = tape.add(tape.matmul(x_row, w_x_), b_);
  return cell(tape, pre, s);
}

Tensor LstmLayer::forward(Tape &tape, const Tensor &x, bool reverse) const {
  const std::size_t steps = x.dim(0);
  SLU_CHECK(steps > 0, "LSTM over an empty sequence");
  Tensor pre_all = tape.add(tape.matmul(x, w_x_), b_);
  LstmState s = initial_state(tape);
  std::vector<Tensor> outs(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    s = cell(tape, tape.slice(pre_all, 0, t, t + 1), s);
    outs[t] = s.h;
  }
  return tape.concat(std::span<const Tensor>(outs), 0);
}

StackedLstm::StackedLstm(ParamBuilder pb, std::size_t in, std::size_t hidden,
                         std::size_t layers) {
  SLU_CHECK(layers >= 1, "stacked LSTM needs at least one layer");
  for (std::size_t l = 0; l < layers; ++l)
    layers_.emplace_back(pb.child("layer" + std::to_string(l)),
                         l == 0 ? in : hidden, hidden);
}

Tensor StackedLstm::forward(Tape &tape, const Tensor &x) const {
  Tensor h = x;
  for (const LstmLayer &l : layers_) h = l.forward(tape, h);
  return h;
}

std::vector<LstmState> StackedLstm::initial_state(Tape &tape) const {
  std::vector<LstmState> s;
  for (const LstmLayer &l : layers_) s.push_back(l.initial_state(tape));
  return s;
}

Tensor StackedLstm::step(Tape &tape, const Tensor &x_row,
                         std::vector<LstmState> &states) const {
  Tensor h = x_row;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    states[l] = layers_[l].step(tape, h, states[l]);
    h = states[l].h;
  }
  return h;
}

BiLstm::BiLstm(ParamBuilder pb, std::size_t in,
               std::size_t hidden_per_direction, std::size_t layers) {
  SLU_CHECK(layers >= 1, "BiLSTM needs at least one layer");
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t layer_in = l == 0 ? in : 2 * hidden_per_direction;
    ParamBuilder lb = pb.child("layer" + std::to_string(l));
    fwd_.emplace_back(lb.child("fwd"), layer_in, hidden_per_direction);
    bwd_.emplace_back(lb.child("bwd"), layer_in, hidden_per_direction);
  }
}

Tensor BiLstm::forward(Tape &tape, const Tensor &x) const {
  Tensor h = x;
  for (std::size_t l = 0; l < fwd_.size(); ++l)
    h = tape.concat({fwd_[l].forward(tape, h, false),
                     bwd_[l].forward(tape, h, true)},
                    1);
  return h;
}

// ---------------------------------------------------------------- LayerNorm

LayerNorm::LayerNorm(ParamBuilder pb, std::size_t dim)
    : gain_(pb.constant("gain", {dim}, 1.0)),
      bias_(pb.constant("bias", {dim}, 0.0)) {}

Tensor LayerNorm::operator()(Tape &tape, const Tensor &x) const {
  return tape.layer_norm(x, gain_, bias_);
}

// ----------------------------------------------------------------- Attention

MultiHeadAttention::MultiHeadAttention(ParamBuilder pb, std::size_t query_dim,
                                       std::size_t memory_dim,
                                       std::size_t model_dim, std::size_t heads,
                                       bool zero_output)
    : heads_(heads),
      q_(pb.child("q"), query_dim, model_dim),
      k_(pb.child("k"), memory_dim, model_dim),
      v_(pb.child("v"), memory_dim, model_dim),
      o_(pb.child("o"), model_dim, query_dim, zero_output) {
  SLU_CHECK(heads >= 1 && model_dim % heads == 0, "model dim ", model_dim,
            " not divisible by ", heads, " heads");
}

Tensor MultiHeadAttention::operator()(Tape &tape, const Tensor &query,
                                      const Tensor &memory,
                                      std::vector<Tensor> *weights) const {
  Tensor q = q_(tape, query);
  Tensor k = k_(tape, memory);
  Tensor v = v_(tape, memory);
  const std::size_t d = q.dim(1), dh = d / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> ctx;
  for (std::size_t h = 0; h < heads_; ++h) {
    Tensor qh = tape.slice(q, 1, h * dh, (h + 1) * dh);
    Tensor kh = tape.slice(k, 1, h * dh, (h + 1) * dh);
    Tensor vh = tape.slice(v, 1, h * dh, (h + 1) * dh);
    Tensor scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt);
    Tensor attn = tape.softmax(scores, 1);
    if (weights) weights->push_back(attn);
    ctx.push_back(tape.matmul(attn, vh));
  }
  Tensor joined = heads_ == 1 ? ctx[0] : tape.concat(std::span<const Tensor>(ctx), 1);
  return o_(tape, joined);
}

FeedForward::FeedForward(ParamBuilder pb, std::size_t dim, std::size_t hidden,
                         bool zero_output)
    : in_(pb.child("in"), dim, hidden),
      out_(pb.child("out"), hidden, dim, zero_output) {}

Tensor FeedForward::operator()(Tape &tape, const Tensor &x) const {
  return out_(tape, tape.relu(in_(tape, x)));
}

Tensor sinusoidal_positions(std::size_t rows, std::size_t dim) {
  Tensor pe({rows, dim});
  std::span<double> p = pe.mutable_data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < dim; ++j) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (j / 2)) /
                                static_cast<double>(dim));
      p[r * dim + j] = (j % 2 == 0) ? std::sin(r * rate) : std::cos(r * rate);
    }
  return pe;
}

}  // namespace slu::nn
