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

#ifndef SLU_TENSOR_H_
#define SLU_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace slu {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape &shape);
std::string shape_str(const Shape &shape);

namespace internal {
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is written
  bool requires_grad = false;
  std::uint64_t tape_id = 0;  // 0 for leaves
  std::string name;
};
}  // namespace internal

// Dense row-major f64 tensor. Copies share storage (handle semantics), which
// is what lets a parameter be referenced from many tape nodes; use clone()
// for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  // Zero-filled.
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> v);

  bool defined() const { return impl_ != nullptr; }
  const Shape &shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;
  double at(std::size_t i, std::size_t j, std::size_t k) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;
  // Allocates a zero buffer when absent.
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad();

  const std::string &name() const;
  void set_name(std::string name);

  // Fresh leaf with copied data and no grad history.
  Tensor detach() const;
  Tensor clone() const;
  bool same_storage(const Tensor &other) const { return impl_ == other.impl_; }

 private:
  friend class Tape;
  std::shared_ptr<internal::TensorImpl> impl_;
};

// Records differentiable operations in execution order and replays them in
// reverse on backward(). One tape per unit of work; not thread safe. A tape
// constructed with record=false evaluates ops without storing history, which
// is what decoding uses.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape &, std::span<const double>)>;

  explicit Tape(bool record = true);
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  bool recording() const { return record_; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Linear algebra and elementwise arithmetic. For add/sub/mul the second
  // operand may have a shape equal to a trailing suffix of the first one's
  // shape; it is then repeated over the leading dimensions.
  Tensor matmul(const Tensor &a, const Tensor &b);
  Tensor transpose(const Tensor &a);
  Tensor add(const Tensor &a, const Tensor &b);
  Tensor sub(const Tensor &a, const Tensor &b);
  Tensor mul(const Tensor &a, const Tensor &b);
  Tensor scale(const Tensor &a, double c);

  Tensor tanh(const Tensor &a);
  Tensor sigmoid(const Tensor &a);
  Tensor relu(const Tensor &a);
  Tensor exp(const Tensor &a);
  Tensor log(const Tensor &a);

  Tensor softmax(const Tensor &a, std::size_t axis);
  Tensor log_softmax(const Tensor &a, std::size_t axis);

  Tensor sum(const Tensor &a);
  Tensor mean(const Tensor &a);
  // Max over axis 0 of an n x d matrix -> 1 x d. Ties go to the lowest row.
  Tensor max_pool(const Tensor &a);

  Tensor embedding(const Tensor &table, std::span<const int> ids);
  Tensor layer_norm(const Tensor &a, const Tensor &gain, const Tensor &bias,
                    double eps = 1e-5);

  Tensor concat(std::span<const Tensor> parts, std::size_t axis);
  Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
  Tensor slice(const Tensor &a, std::size_t axis, std::size_t begin,
               std::size_t end);
  Tensor reshape(const Tensor &a, Shape shape);
  // Stack scalars into a 1-D tensor.
  Tensor stack(std::span<const Tensor> scalars);
  // Flat-index gather -> 1-D tensor of size indices.size().
  Tensor gather(const Tensor &a, std::span<const std::size_t> flat_indices);
  // out[t][u][:] = a[t][:] + b[u][:]  (a: T x J, b: U x J).
  Tensor outer_add(const Tensor &a, const Tensor &b);

  // Extension point for fused operations: registers `out` as produced from
  // `inputs`. `fn` receives d(loss)/d(out) and accumulates into grad_of(input).
  Tensor record(Tensor out, std::initializer_list<Tensor> inputs,
                BackwardFn fn);
  Tensor record(Tensor out, const std::vector<Tensor> &inputs, BackwardFn fn);
  // Gradient accumulator for `t` during backward; empty when t needs none.
  std::span<double> grad_of(const Tensor &t);

  // Seeds d(loss)/d(loss)=1 and runs every node once in reverse order.
  // Leaf gradients are added to the leaves' grad buffers at the end.
  void backward(const Tensor &loss);
  // Same as backward() but leaf gradients stay staged until flush_grads(),
  // so several tapes can be run and then merged in a fixed order.
  void backward_deferred(const Tensor &loss);
  void flush_grads();

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn fn;
  };
  struct Staged {
    std::shared_ptr<internal::TensorImpl> leaf;
    std::vector<double> grad;
  };

  Tensor make(Shape shape) const;
  void run_backward(const Tensor &loss);

  std::uint64_t id_;
  bool record_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<internal::TensorImpl *, std::size_t> staged_index_;
  std::vector<Staged> staged_;
};

}  // namespace slu

#endif  // SLU_TENSOR_H_
