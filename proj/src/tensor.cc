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

#include "slu/tensor.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "slu/error.h"

namespace slu {

std::size_t shape_numel(const Shape &shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(Shape shape) : impl_(std::make_shared<internal::TensorImpl>()) {
  impl_->data.assign(shape_numel(shape), 0.0);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<internal::TensorImpl>()) {
  if (shape_numel(shape) != data.size())
    throw ShapeError(internal::StrCat("tensor of shape ", shape_str(shape),
                                      " cannot hold ", data.size(),
                                      " values"));
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double v) {
  return Tensor(Shape{}, std::vector<double>{v});
}

Tensor Tensor::vector(std::vector<double> v) {
  Shape s{v.size()};
  return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> v) {
  return Tensor(Shape{rows, cols}, std::move(v));
}

const Shape &Tensor::shape() const {
  SLU_CHECK(impl_, "use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t i) const {
  const Shape &s = shape();
  SLU_CHECK(i < s.size(), "dim ", i, " out of range for shape ", shape_str(s));
  return s[i];
}

std::size_t Tensor::numel() const { return impl_ ? impl_->data.size() : 0; }

std::span<const double> Tensor::data() const {
  SLU_CHECK(impl_, "use of undefined tensor");
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  SLU_CHECK(impl_, "use of undefined tensor");
  return impl_->data;
}

double Tensor::item() const {
  SLU_CHECK(numel() == 1, "item() on tensor of shape ", shape_str(shape()));
  return impl_->data[0];
}

double Tensor::at(std::size_t i) const {
  SLU_CHECK(i < numel(), "index ", i, " out of range");
  return impl_->data[i];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  const Shape &s = shape();
  SLU_CHECK(s.size() == 2 && i < s[0] && j < s[1], "bad 2-d index (", i, ", ",
            j, ") for shape ", shape_str(s));
  return impl_->data[i * s[1] + j];
}

double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
  const Shape &s = shape();
  SLU_CHECK(s.size() == 3 && i < s[0] && j < s[1] && k < s[2],
            "bad 3-d index for shape ", shape_str(s));
  return impl_->data[(i * s[1] + j) * s[2] + k];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  SLU_CHECK(impl_, "use of undefined tensor");
  impl_->requires_grad = on;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  SLU_CHECK(has_grad(), "tensor '", impl_ ? impl_->name : "", "' has no grad");
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  SLU_CHECK(impl_, "use of undefined tensor");
  if (impl_->grad.size() != impl_->data.size())
    impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  SLU_CHECK(impl_, "use of undefined tensor");
  impl_->grad.assign(impl_->data.size(), 0.0);
}

void Tensor::clear_grad() {
  if (impl_) impl_->grad.clear();
}

const std::string &Tensor::name() const {
  SLU_CHECK(impl_, "use of undefined tensor");
  return impl_->name;
}

void Tensor::set_name(std::string name) {
  SLU_CHECK(impl_, "use of undefined tensor");
  impl_->name = std::move(name);
}

Tensor Tensor::detach() const {
  Tensor t(shape(), std::vector<double>(impl_->data.begin(), impl_->data.end()));
  return t;
}

Tensor Tensor::clone() const {
  Tensor t = detach();
  t.impl_->requires_grad = impl_->requires_grad;
  t.impl_->grad = impl_->grad;
  t.impl_->name = impl_->name;
  return t;
}

// ------------------------------------------------------------------ Tape

namespace {

std::atomic<std::uint64_t> g_next_tape_id{1};

[[noreturn]] void shape_mismatch(const char *op, const Shape &a,
                                 const Shape &b) {
  throw ShapeError(internal::StrCat(op, ": shape mismatch ", shape_str(a),
                                    " vs ", shape_str(b)));
}

// b broadcasts against a when b's shape is a suffix of a's shape.
std::size_t broadcast_period(const char *op, const Shape &a, const Shape &b) {
  if (b.size() > a.size()) shape_mismatch(op, a, b);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[b.size() - 1 - i] != a[a.size() - 1 - i]) shape_mismatch(op, a, b);
  return shape_numel(b);
}

struct AxisSplit {
  std::size_t outer, axis, inner;
};

AxisSplit split_axis(const Shape &s, std::size_t axis) {
  AxisSplit r{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

}  // namespace

Tape::Tape(bool record) : id_(g_next_tape_id++), record_(record) {}

Tensor Tape::make(Shape shape) const { return Tensor(std::move(shape)); }

Tensor Tape::record(Tensor out, std::initializer_list<Tensor> inputs,
                    BackwardFn fn) {
  return record(std::move(out), std::vector<Tensor>(inputs), std::move(fn));
}

Tensor Tape::record(Tensor out, const std::vector<Tensor> &inputs,
                    BackwardFn fn) {
  if (!record_) return out;
  bool any = false;
  for (const Tensor &t : inputs) any = any || t.requires_grad();
  if (!any) return out;
  SLU_CHECK(!backward_done_, "cannot record on a tape after backward()");
  out.impl_->requires_grad = true;
  out.impl_->tape_id = id_;
  nodes_.push_back(Node{inputs, out, std::move(fn)});
  return out;
}

std::span<double> Tape::grad_of(const Tensor &t) {
  if (!t.requires_grad()) return {};
  internal::TensorImpl *p = t.impl_.get();
  if (p->tape_id == id_) {
    if (p->grad.size() != p->data.size()) p->grad.assign(p->data.size(), 0.0);
    return p->grad;
  }
  auto it = staged_index_.find(p);
  if (it == staged_index_.end()) {
    it = staged_index_.emplace(p, staged_.size()).first;
    staged_.push_back(Staged{t.impl_, std::vector<double>(p->data.size(), 0.0)});
  }
  return staged_[it->second].grad;
}

void Tape::run_backward(const Tensor &loss) {
  SLU_CHECK(loss.defined(), "backward on undefined tensor");
  SLU_CHECK(loss.numel() == 1, "backward needs a scalar loss, got shape ",
            shape_str(loss.shape()));
  SLU_CHECK(!backward_done_, "backward() already ran on this tape");
  backward_done_ = true;
  if (!loss.requires_grad()) return;
  std::span<double> seed = grad_of(loss);
  seed[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    internal::TensorImpl *out = it->output.impl_.get();
    if (out->grad.empty()) continue;  // not on a path to the loss
    it->fn(*this, out->grad);
  }
}

void Tape::backward(const Tensor &loss) {
  run_backward(loss);
  flush_grads();
}

void Tape::backward_deferred(const Tensor &loss) { run_backward(loss); }

void Tape::flush_grads() {
  for (Staged &s : staged_) {
    internal::TensorImpl *p = s.leaf.get();
    if (p->grad.size() != p->data.size()) p->grad.assign(p->data.size(), 0.0);
    for (std::size_t i = 0; i < s.grad.size(); ++i) p->grad[i] += s.grad[i];
  }
  staged_.clear();
  staged_index_.clear();
}

// ------------------------------------------------------------- operations

Tensor Tape::matmul(const Tensor &a, const Tensor &b) {
  const Shape &sa = a.shape(), &sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
    shape_mismatch("matmul", sa, sb);
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  Tensor out = make({m, n});
  const double *pa = a.impl_->data.data();
  const double *pb = b.impl_->data.data();
  double *po = out.impl_->data.data();
  for (std::size_t i = 0; i < m; ++i) {
    double *row = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double *brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return record(out, {a, b}, [a, b, m, k, n](Tape &tp,
                                             std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    std::span<double> gb = tp.grad_of(b);
    const double *pa = a.impl_->data.data();
    const double *pb = b.impl_->data.data();
    if (!ga.empty()) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double *brow = pb + p * n;
          const double *grow = g.data() + i * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          ga[i * k + p] += s;
        }
    }
    if (!gb.empty()) {
      for (std::size_t i = 0; i < m; ++i) {
        const double *grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa[i * k + p];
          if (av == 0.0) continue;
          double *gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Tensor Tape::transpose(const Tensor &a) {
  const Shape &s = a.shape();
  SLU_CHECK(s.size() == 2, "transpose needs a matrix, got ", shape_str(s));
  const std::size_t r = s[0], c = s[1];
  Tensor out = make({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out.impl_->data[j * r + i] = a.impl_->data[i * c + j];
  return record(out, {a}, [a, r, c](Tape &tp, std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
  });
}

Tensor Tape::add(const Tensor &a, const Tensor &b) {
  const std::size_t period = broadcast_period("add", a.shape(), b.shape());
  Tensor out = make(a.shape());
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i)
    out.impl_->data[i] = a.impl_->data[i] + b.impl_->data[i % period];
  return record(out, {a, b}, [a, b, n, period](Tape &tp,
                                               std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    std::span<double> gb = tp.grad_of(b);
    if (!ga.empty())
      for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
    if (!gb.empty())
      for (std::size_t i = 0; i < n; ++i) gb[i % period] += g[i];
  });
}

Tensor Tape::sub(const Tensor &a, const Tensor &b) {
  const std::size_t period = broadcast_period("sub", a.shape(), b.shape());
  Tensor out = make(a.shape());
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i)
    out.impl_->data[i] = a.impl_->data[i] - b.impl_->data[i % period];
  return record(out, {a, b}, [a, b, n, period](Tape &tp,
                                               std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    std::span<double> gb = tp.grad_of(b);
    if (!ga.empty())
      for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
    if (!gb.empty())
      for (std::size_t i = 0; i < n; ++i) gb[i % period] -= g[i];
  });
}

Tensor Tape::mul(const Tensor &a, const Tensor &b) {
  const std::size_t period = broadcast_period("mul", a.shape(), b.shape());
  Tensor out = make(a.shape());
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i)
    out.impl_->data[i] = a.impl_->data[i] * b.impl_->data[i % period];
  return record(out, {a, b}, [a, b, n, period](Tape &tp,
                                               std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    std::span<double> gb = tp.grad_of(b);
    const auto &da = a.impl_->data;
    const auto &db = b.impl_->data;
    if (!ga.empty())
      for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * db[i % period];
    if (!gb.empty())
      for (std::size_t i = 0; i < n; ++i) gb[i % period] += g[i] * da[i];
  });
}

Tensor Tape::scale(const Tensor &a, double c) {
  Tensor out = make(a.shape());
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) out.impl_->data[i] = c * a.impl_->data[i];
  return record(out, {a}, [a, c, n](Tape &tp, std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    for (std::size_t i = 0; i < n; ++i) ga[i] += c * g[i];
  });
}

// Elementwise op whose derivative is expressed through input x and output y.
#define SLU_UNARY_OP(NAME, FWD, DERIV)                                      \
  Tensor Tape::NAME(const Tensor &a) {                                      \
    Tensor out = make(a.shape());                                           \
    const std::size_t n = out.numel();                                      \
    for (std::size_t i = 0; i < n; ++i) {                                   \
      const double x = a.impl_->data[i];                                    \
      out.impl_->data[i] = (FWD);                                           \
    }                                                                       \
    Tensor keep = out;                                                      \
    return record(out, {a}, [a, n, keep](Tape &tp,                          \
                                         std::span<const double> g) {       \
      std::span<double> ga = tp.grad_of(a);                                 \
      for (std::size_t i = 0; i < n; ++i) {                                 \
        const double x = a.impl_->data[i];                                  \
        const double y = keep.impl_->data[i];                               \
        (void)x;                                                            \
        (void)y;                                                            \
        ga[i] += g[i] * (DERIV);                                            \
      }                                                                     \
    });                                                                     \
  }

SLU_UNARY_OP(tanh, std::tanh(x), 1.0 - y * y)
SLU_UNARY_OP(sigmoid, 1.0 / (1.0 + std::exp(-x)), y *(1.0 - y))
SLU_UNARY_OP(relu, x > 0.0 ? x : 0.0, x > 0.0 ? 1.0 : 0.0)
SLU_UNARY_OP(exp, std::exp(x), y)
SLU_UNARY_OP(log, std::log(x), 1.0 / x)

#undef SLU_UNARY_OP

Tensor Tape::softmax(const Tensor &a, std::size_t axis) {
  const Shape &s = a.shape();
  SLU_CHECK(axis < s.size(), "softmax axis ", axis, " out of range for ",
            shape_str(s));
  SLU_CHECK(s[axis] > 0, "softmax over empty axis ", axis, " of ",
            shape_str(s));
  const AxisSplit sp = split_axis(s, axis);
  Tensor out = make(s);
  const double *x = a.impl_->data.data();
  double *y = out.impl_->data.data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t in = 0; in < sp.inner; ++in) {
      const std::size_t base = o * sp.axis * sp.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < sp.axis; ++k)
        mx = std::max(mx, x[base + k * sp.inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < sp.axis; ++k) {
        const double e = std::exp(x[base + k * sp.inner] - mx);
        y[base + k * sp.inner] = e;
        z += e;
      }
      for (std::size_t k = 0; k < sp.axis; ++k) y[base + k * sp.inner] /= z;
    }
  Tensor keep = out;
  return record(out, {a}, [a, keep, sp](Tape &tp, std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    const double *y = keep.impl_->data.data();
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t in = 0; in < sp.inner; ++in) {
        const std::size_t base = o * sp.axis * sp.inner + in;
        double dot = 0.0;
        for (std::size_t k = 0; k < sp.axis; ++k) {
          const std::size_t i = base + k * sp.inner;
          dot += g[i] * y[i];
        }
        for (std::size_t k = 0; k < sp.axis; ++k) {
          const std::size_t i = base + k * sp.inner;
          ga[i] += y[i] * (g[i] - dot);
        }
      }
  });
}

Tensor Tape::log_softmax(const Tensor &a, std::size_t axis) {
  const Shape &s = a.shape();
  SLU_CHECK(axis < s.size(), "log_softmax axis ", axis, " out of range for ",
            shape_str(s));
  SLU_CHECK(s[axis] > 0, "log_softmax over empty axis ", axis, " of ",
            shape_str(s));
  const AxisSplit sp = split_axis(s, axis);
  Tensor out = make(s);
  const double *x = a.impl_->data.data();
  double *y = out.impl_->data.data();
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t in = 0; in < sp.inner; ++in) {
      const std::size_t base = o * sp.axis * sp.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < sp.axis; ++k)
        mx = std::max(mx, x[base + k * sp.inner]);
      double z = 0.0;
      for (std::size_t k = 0; k < sp.axis; ++k)
        z += std::exp(x[base + k * sp.inner] - mx);
      const double lz = mx + std::log(z);
      for (std::size_t k = 0; k < sp.axis; ++k)
        y[base + k * sp.inner] = x[base + k * sp.inner] - lz;
    }
  Tensor keep = out;
  return record(out, {a}, [a, keep, sp](Tape &tp, std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    const double *y = keep.impl_->data.data();
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t in = 0; in < sp.inner; ++in) {
        const std::size_t base = o * sp.axis * sp.inner + in;
        double gs = 0.0;
        for (std::size_t k = 0; k < sp.axis; ++k) gs += g[base + k * sp.inner];
        for (std::size_t k = 0; k < sp.axis; ++k) {
          const std::size_t i = base + k * sp.inner;
          ga[i] += g[i] - std::exp(y[i]) * gs;
        }
      }
  });
}

Tensor Tape::sum(const Tensor &a) {
  double s = 0.0;
  for (double v : a.impl_->data) s += v;
  Tensor out = make({});
  out.impl_->data[0] = s;
  const std::size_t n = a.numel();
  return record(out, {a}, [a, n](Tape &tp, std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[0];
  });
}

Tensor Tape::mean(const Tensor &a) {
  const std::size_t n = a.numel();
  SLU_CHECK(n > 0, "mean of empty tensor");
  double s = 0.0;
  for (double v : a.impl_->data) s += v;
  Tensor out = make({});
  out.impl_->data[0] = s / static_cast<double>(n);
  return record(out, {a}, [a, n](Tape &tp, std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    const double w = g[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) ga[i] += w;
  });
}

Tensor Tape::max_pool(const Tensor &a) {
  const Shape &s = a.shape();
  SLU_CHECK(s.size() == 2, "max_pool needs a matrix, got ", shape_str(s));
  SLU_CHECK(s[0] > 0, "max_pool over empty sequence");
  const std::size_t n = s[0], d = s[1];
  Tensor out = make({1, d});
  std::vector<std::size_t> arg(d, 0);
  for (std::size_t j = 0; j < d; ++j) {
    double best = a.impl_->data[j];
    for (std::size_t i = 1; i < n; ++i) {
      const double v = a.impl_->data[i * d + j];
      if (v > best) {
        best = v;
        arg[j] = i;
      }
    }
    out.impl_->data[j] = best;
  }
  return record(out, {a}, [a, arg, d](Tape &tp, std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    for (std::size_t j = 0; j < d; ++j) ga[arg[j] * d + j] += g[j];
  });
}

Tensor Tape::embedding(const Tensor &table, std::span<const int> ids) {
  const Shape &s = table.shape();
  SLU_CHECK(s.size() == 2, "embedding table must be a matrix, got ",
            shape_str(s));
  const std::size_t v = s[0], d = s[1];
  std::vector<int> idx(ids.begin(), ids.end());
  for (int id : idx)
    SLU_CHECK(id >= 0 && static_cast<std::size_t>(id) < v, "embedding id ", id,
              " outside table of ", v, " rows");
  Tensor out = make({idx.size(), d});
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy_n(table.impl_->data.begin() + idx[r] * d, d,
                out.impl_->data.begin() + r * d);
  return record(out, {table}, [table, idx, d](Tape &tp,
                                              std::span<const double> g) {
    std::span<double> gt = tp.grad_of(table);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) gt[idx[r] * d + j] += g[r * d + j];
  });
}

Tensor Tape::layer_norm(const Tensor &a, const Tensor &gain,
                        const Tensor &bias, double eps) {
  const Shape &s = a.shape();
  SLU_CHECK(!s.empty(), "layer_norm on a scalar");
  const std::size_t d = s.back();
  if (gain.shape() != Shape{d}) shape_mismatch("layer_norm gain", s, gain.shape());
  if (bias.shape() != Shape{d}) shape_mismatch("layer_norm bias", s, bias.shape());
  const std::size_t rows = d ? a.numel() / d : 0;
  Tensor out = make(s);
  std::vector<double> xhat(a.numel()), inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double *x = a.impl_->data.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += x[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (x[j] - mu) * inv_std[r];
      out.impl_->data[r * d + j] =
          xhat[r * d + j] * gain.impl_->data[j] + bias.impl_->data[j];
    }
  }
  return record(out, {a, gain, bias},
                [a, gain, bias, xhat = std::move(xhat),
                 inv_std = std::move(inv_std), rows,
                 d](Tape &tp, std::span<const double> g) {
                  std::span<double> ga = tp.grad_of(a);
                  std::span<double> gg = tp.grad_of(gain);
                  std::span<double> gbias = tp.grad_of(bias);
                  const double *w = gain.impl_->data.data();
                  std::vector<double> dxhat(d);
                  for (std::size_t r = 0; r < rows; ++r) {
                    const double *gr = g.data() + r * d;
                    const double *xr = xhat.data() + r * d;
                    if (!gg.empty())
                      for (std::size_t j = 0; j < d; ++j) gg[j] += gr[j] * xr[j];
                    if (!gbias.empty())
                      for (std::size_t j = 0; j < d; ++j) gbias[j] += gr[j];
                    if (ga.empty()) continue;
                    double m1 = 0.0, m2 = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                      dxhat[j] = gr[j] * w[j];
                      m1 += dxhat[j];
                      m2 += dxhat[j] * xr[j];
                    }
                    m1 /= static_cast<double>(d);
                    m2 /= static_cast<double>(d);
                    for (std::size_t j = 0; j < d; ++j)
                      ga[r * d + j] += inv_std[r] * (dxhat[j] - m1 - xr[j] * m2);
                  }
                });
}

Tensor Tape::concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  std::vector<Tensor> v(parts);
  return concat(std::span<const Tensor>(v), axis);
}

Tensor Tape::concat(std::span<const Tensor> parts, std::size_t axis) {
  SLU_CHECK(!parts.empty(), "concat of zero tensors");
  Shape s = parts[0].shape();
  SLU_CHECK(axis < s.size(), "concat axis ", axis, " out of range for ",
            shape_str(s));
  std::size_t total = 0;
  for (const Tensor &p : parts) {
    const Shape &ps = p.shape();
    if (ps.size() != s.size()) shape_mismatch("concat", s, ps);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && ps[i] != s[i]) shape_mismatch("concat", s, ps);
    total += ps[axis];
  }
  s[axis] = total;
  const AxisSplit sp = split_axis(s, axis);
  Tensor out = make(s);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Tensor &p : parts) {
    offsets.push_back(off);
    const std::size_t chunk = p.shape()[axis] * sp.inner;
    for (std::size_t o = 0; o < sp.outer; ++o)
      std::copy_n(p.impl_->data.begin() + o * chunk, chunk,
                  out.impl_->data.begin() + o * total * sp.inner +
                      off * sp.inner);
    off += p.shape()[axis];
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return record(out, inputs, [inputs, offsets, sp, axis, total](
                                 Tape &tp, std::span<const double> g) {
    for (std::size_t n = 0; n < inputs.size(); ++n) {
      std::span<double> gp = tp.grad_of(inputs[n]);
      if (gp.empty()) continue;
      const std::size_t chunk = inputs[n].shape()[axis] * sp.inner;
      for (std::size_t o = 0; o < sp.outer; ++o) {
        const double *src = g.data() + o * total * sp.inner + offsets[n] * sp.inner;
        double *dst = gp.data() + o * chunk;
        for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor Tape::slice(const Tensor &a, std::size_t axis, std::size_t begin,
                   std::size_t end) {
  const Shape &s = a.shape();
  SLU_CHECK(axis < s.size(), "slice axis ", axis, " out of range for ",
            shape_str(s));
  SLU_CHECK(begin <= end && end <= s[axis], "slice [", begin, ", ", end,
            ") out of range for axis ", axis, " of ", shape_str(s));
  const AxisSplit sp = split_axis(s, axis);
  Shape os = s;
  os[axis] = end - begin;
  Tensor out = make(os);
  const std::size_t chunk = (end - begin) * sp.inner;
  for (std::size_t o = 0; o < sp.outer; ++o)
    std::copy_n(a.impl_->data.begin() + o * sp.axis * sp.inner + begin * sp.inner,
                chunk, out.impl_->data.begin() + o * chunk);
  return record(out, {a}, [a, sp, begin, chunk](Tape &tp,
                                                std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    for (std::size_t o = 0; o < sp.outer; ++o) {
      double *dst = ga.data() + o * sp.axis * sp.inner + begin * sp.inner;
      const double *src = g.data() + o * chunk;
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
    }
  });
}

Tensor Tape::reshape(const Tensor &a, Shape shape) {
  if (shape_numel(shape) != a.numel()) shape_mismatch("reshape", a.shape(), shape);
  Tensor out(std::move(shape), a.impl_->data);
  const std::size_t n = a.numel();
  return record(out, {a}, [a, n](Tape &tp, std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
  });
}

Tensor Tape::stack(std::span<const Tensor> scalars) {
  Tensor out = make({scalars.size()});
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    SLU_CHECK(scalars[i].numel() == 1, "stack expects scalars, got shape ",
              shape_str(scalars[i].shape()));
    out.impl_->data[i] = scalars[i].impl_->data[0];
  }
  std::vector<Tensor> inputs(scalars.begin(), scalars.end());
  return record(out, inputs, [inputs](Tape &tp, std::span<const double> g) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::span<double> gi = tp.grad_of(inputs[i]);
      if (!gi.empty()) gi[0] += g[i];
    }
  });
}

Tensor Tape::gather(const Tensor &a, std::span<const std::size_t> flat_indices) {
  std::vector<std::size_t> idx(flat_indices.begin(), flat_indices.end());
  Tensor out = make({idx.size()});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    SLU_CHECK(idx[i] < a.numel(), "gather index ", idx[i],
              " out of range for ", shape_str(a.shape()));
    out.impl_->data[i] = a.impl_->data[idx[i]];
  }
  return record(out, {a}, [a, idx](Tape &tp, std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    for (std::size_t i = 0; i < idx.size(); ++i) ga[idx[i]] += g[i];
  });
}

Tensor Tape::outer_add(const Tensor &a, const Tensor &b) {
  const Shape &sa = a.shape(), &sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[1])
    shape_mismatch("outer_add", sa, sb);
  const std::size_t t_len = sa[0], u_len = sb[0], d = sa[1];
  Tensor out = make({t_len, u_len, d});
  double *po = out.impl_->data.data();
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t u = 0; u < u_len; ++u) {
      const double *ra = a.impl_->data.data() + t * d;
      const double *rb = b.impl_->data.data() + u * d;
      double *ro = po + (t * u_len + u) * d;
      for (std::size_t j = 0; j < d; ++j) ro[j] = ra[j] + rb[j];
    }
  return record(out, {a, b}, [a, b, t_len, u_len, d](Tape &tp,
                                                     std::span<const double> g) {
    std::span<double> ga = tp.grad_of(a);
    std::span<double> gb = tp.grad_of(b);
    for (std::size_t t = 0; t < t_len; ++t)
      for (std::size_t u = 0; u < u_len; ++u) {
        const double *gr = g.data() + (t * u_len + u) * d;
        if (!ga.empty())
          for (std::size_t j = 0; j < d; ++j) ga[t * d + j] += gr[j];
        if (!gb.empty())
          for (std::size_t j = 0; j < d; ++j) gb[u * d + j] += gr[j];
      }
  });
}

}  // namespace slu
