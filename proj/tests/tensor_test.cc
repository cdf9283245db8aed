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

#include <cmath>
#include <random>

#include "doctest.h"
#include "slu/error.h"
#include "slu/gradcheck.h"
#include "slu/optim.h"
#include "slu/tensor.h"

using namespace slu;

namespace {

Tensor random_tensor(std::mt19937_64 &rng, Shape shape, double bound = 3.0) {
  std::uniform_real_distribution<double> d(-bound, bound);
  std::vector<double> v(shape_numel(shape));
  for (double &x : v) x = d(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

// Weighted sum so that every output coordinate gets a distinct upstream
// gradient.
Tensor weighted_sum(Tape &tape, const Tensor &y) {
  std::vector<double> w(y.numel());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(1.0 + 0.7 * i);
  return tape.sum(tape.mul(y, Tensor(y.shape(), w)));
}

}  // namespace

TEST_CASE("softmax of a symmetric vector is uniform") {
  Tape tape;
  Tensor y = tape.softmax(Tensor::vector({0.0, 0.0}), 0);
  CHECK(y.at(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(y.at(1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("softmax of [1,2,3] matches direct evaluation") {
  Tape tape;
  Tensor y = tape.softmax(Tensor::vector({1.0, 2.0, 3.0}), 0);
  const double expected[] = {0.09003, 0.24473, 0.66524};
  for (int i = 0; i < 3; ++i) CHECK(std::abs(y.at(i) - expected[i]) < 1e-5);
  CHECK(std::abs(y.at(0) + y.at(1) + y.at(2) - 1.0) < 1e-12);
}

TEST_CASE("identity matmul returns the operand") {
  std::mt19937_64 rng(3);
  Tensor a = random_tensor(rng, {3, 5});
  Tensor eye = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tape tape;
  Tensor out = tape.matmul(eye, a);
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(out.at(i) == a.at(i));
}

TEST_CASE("shape errors name both shapes") {
  Tape tape;
  Tensor a({2, 3}), b({2, 3});
  try {
    tape.matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2, 3]") != std::string::npos);
    CHECK(msg.find("vs") != std::string::npos);
  }
  CHECK_THROWS_AS(tape.add(Tensor({2, 3}), Tensor({2})), ShapeError);
  CHECK_THROWS_AS(tape.softmax(Tensor({2, 0}), 1), Error);
  CHECK_THROWS_AS(tape.log_softmax(Tensor({0}), 0), Error);
}

TEST_CASE("backward of sum and mean") {
  Tensor x({2, 2}, {1, 2, 3, 4}, true);
  {
    Tape tape;
    tape.backward(tape.sum(x));
    for (double g : x.grad()) CHECK(g == 1.0);
  }
  x.clear_grad();
  {
    Tape tape;
    tape.backward(tape.mean(x));
    for (double g : x.grad()) CHECK(g == 0.25);
  }
}

TEST_CASE("sigmoid derivative at zero") {
  Tensor w({1, 1}, {0.0}, true);
  Tensor x({1, 1}, {1.0});
  Tape tape;
  Tensor loss = tape.sum(tape.sigmoid(tape.matmul(w, x)));
  tape.backward(loss);
  CHECK(w.grad()[0] == doctest::Approx(0.25).epsilon(1e-15));
  GradCheckReport r = grad_check(
      [&](Tape &tp, const Tensor &p) {
        return tp.sum(tp.sigmoid(tp.matmul(p, x)));
      },
      Tensor({1, 1}, {0.0}), 1e-5, 1e-6);
  CHECK(r.passed);
  CHECK(r.entries[0].numeric == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("backward errors") {
  Tensor x({3}, {1, 2, 3}, true);
  Tape tape;
  Tensor y = tape.scale(x, 2.0);
  CHECK_THROWS_AS(tape.backward(y), Error);  // not scalar
  Tape tape2;
  Tensor s = tape2.sum(x);
  tape2.backward(s);
  CHECK_THROWS_AS(tape2.backward(s), Error);  // twice
}

TEST_CASE("grad_check on x^2") {
  GradCheckReport r = grad_check(
      [](Tape &tp, const Tensor &p) { return tp.sum(tp.mul(p, p)); },
      Tensor({1}, {3.0}), 1e-5, 1e-6);
  CHECK(r.passed);
  CHECK(std::abs(r.entries[0].analytic - 6.0) < 1e-12);
  CHECK(std::abs(r.entries[0].numeric - 6.0) < 1e-6);
}

TEST_CASE("grad_check rejects bad eps and non-deterministic functions") {
  Tensor p({1}, {1.0}, true);
  ParameterList params{{"p", p}};
  GradCheckOptions bad;
  bad.eps = 1e-2;
  CHECK_THROWS_AS(grad_check([&](Tape &tp) { return tp.sum(p); }, params, bad),
                  Error);
  int calls = 0;
  CHECK_THROWS_AS(grad_check(
                      [&](Tape &tp) {
                        ++calls;
                        return tp.add(tp.sum(p), Tensor::scalar(calls));
                      },
                      params),
                  Error);
}

TEST_CASE("optimizers") {
  SUBCASE("sgd") {
    Tensor p({1}, {1.0}, true);
    p.mutable_grad()[0] = 2.0;
    ParameterList params{{"p", p}};
    sgd_step(params, 0.1);
    CHECK(p.at(0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(p.grad()[0] == 0.0);
    sgd_step(params, 0.1);  // zero gradient leaves p unchanged
    CHECK(p.at(0) == doctest::Approx(0.8).epsilon(1e-15));
  }
  SUBCASE("adam first step") {
    Tensor p({1}, {1.0}, true);
    p.mutable_grad()[0] = 1.0;
    Adam adam({{"p", p}}, AdamOptions{0.1, 0.9, 0.999, 1e-8});
    adam.step();
    CHECK(std::abs(p.at(0) - 0.900000001) < 1e-12);
    CHECK(adam.steps_taken() == 1);
  }
  SUBCASE("missing grad names the parameter") {
    Tensor p({1}, {1.0}, true);
    ParameterList params{{"enc.w", p}};
    try {
      sgd_step(params, 0.1);
      FAIL("expected error");
    } catch (const Error &e) {
      CHECK(std::string(e.what()).find("enc.w") != std::string::npos);
    }
  }
}

TEST_CASE("exp(log_softmax) equals softmax") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor(rng, {3, 4, 5}, 20.0);
    for (std::size_t axis = 0; axis < 3; ++axis) {
      Tape tape(false);
      Tensor a = tape.softmax(x, axis);
      Tensor b = tape.log_softmax(x, axis);
      for (std::size_t i = 0; i < x.numel(); ++i)
        CHECK(std::abs(std::exp(b.at(i)) - a.at(i)) <= 1e-12);
    }
  }
}

TEST_CASE("gradient accumulates over two consumers") {
  Tensor x({3}, {0.3, -1.2, 2.0}, true);
  auto path_a = [](Tape &tp, const Tensor &v) { return tp.sum(tp.tanh(v)); };
  auto path_b = [](Tape &tp, const Tensor &v) { return tp.sum(tp.mul(v, v)); };
  std::vector<double> ga, gb;
  {
    Tape tp;
    tp.backward(path_a(tp, x));
    ga.assign(x.grad().begin(), x.grad().end());
    x.clear_grad();
  }
  {
    Tape tp;
    tp.backward(path_b(tp, x));
    gb.assign(x.grad().begin(), x.grad().end());
    x.clear_grad();
  }
  Tape tp;
  tp.backward(tp.add(path_a(tp, x), path_b(tp, x)));
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(x.grad()[i] - (ga[i] + gb[i])) < 1e-14);
}

TEST_CASE("every differentiable op passes finite differences") {
  std::mt19937_64 rng(2024);
  GradCheckOptions opts;
  opts.rtol = 1e-4;
  using Fn = std::function<Tensor(Tape &, const Tensor &, const Tensor &)>;
  struct Case {
    const char *name;
    Shape a, b;
    Fn f;
  };
  std::vector<int> ids = {2, 0, 2, 1};
  std::vector<std::size_t> flat = {0, 5, 5, 7};
  std::vector<Case> cases = {
      {"matmul", {3, 4}, {4, 2}, [](Tape &t, auto &a, auto &b) { return t.matmul(a, b); }},
      {"transpose", {3, 4}, {1}, [](Tape &t, auto &a, auto &) { return t.transpose(a); }},
      {"add", {3, 4}, {4}, [](Tape &t, auto &a, auto &b) { return t.add(a, b); }},
      {"sub", {3, 4}, {3, 4}, [](Tape &t, auto &a, auto &b) { return t.sub(a, b); }},
      {"mul", {2, 3, 4}, {3, 4}, [](Tape &t, auto &a, auto &b) { return t.mul(a, b); }},
      {"scale", {5}, {1}, [](Tape &t, auto &a, auto &) { return t.scale(a, -1.7); }},
      {"tanh", {6}, {1}, [](Tape &t, auto &a, auto &) { return t.tanh(a); }},
      {"sigmoid", {6}, {1}, [](Tape &t, auto &a, auto &) { return t.sigmoid(a); }},
      {"relu", {6}, {1}, [](Tape &t, auto &a, auto &) { return t.relu(a); }},
      {"exp", {6}, {1}, [](Tape &t, auto &a, auto &) { return t.exp(a); }},
      {"log", {6}, {1}, [](Tape &t, auto &a, auto &) { return t.log(t.exp(a)); }},
      {"softmax0", {3, 4}, {1}, [](Tape &t, auto &a, auto &) { return t.softmax(a, 0); }},
      {"softmax1", {3, 4}, {1}, [](Tape &t, auto &a, auto &) { return t.softmax(a, 1); }},
      {"log_softmax", {2, 3, 4}, {1}, [](Tape &t, auto &a, auto &) { return t.log_softmax(a, 1); }},
      {"mean", {7}, {1}, [](Tape &t, auto &a, auto &) { return t.mean(a); }},
      {"max_pool", {4, 3}, {1}, [](Tape &t, auto &a, auto &) { return t.max_pool(a); }},
      {"embedding", {3, 4}, {1}, [&](Tape &t, auto &a, auto &) { return t.embedding(a, ids); }},
      {"layer_norm", {3, 5}, {5}, [](Tape &t, auto &a, auto &b) { return t.layer_norm(a, b, t.tanh(b)); }},
      {"concat", {2, 3}, {2, 2}, [](Tape &t, auto &a, auto &b) { return t.concat({a, b}, 1); }},
      {"slice", {4, 3}, {1}, [](Tape &t, auto &a, auto &) { return t.slice(a, 0, 1, 3); }},
      {"reshape", {4, 3}, {1}, [](Tape &t, auto &a, auto &) { return t.reshape(a, {2, 6}); }},
      {"gather", {2, 4}, {1}, [&](Tape &t, auto &a, auto &) { return t.gather(a, flat); }},
      {"outer_add", {3, 2}, {4, 2}, [](Tape &t, auto &a, auto &b) { return t.outer_add(a, b); }},
      {"stack", {1}, {1}, [](Tape &t, auto &a, auto &b) {
         std::vector<Tensor> s{t.sum(a), t.sum(t.mul(b, b))};
         return t.stack(s);
       }},
  };
  for (int trial = 0; trial < 5; ++trial) {
    for (const Case &c : cases) {
      Tensor a = random_tensor(rng, c.a);
      Tensor b = random_tensor(rng, c.b);
      ParameterList params{{"a", a}, {"b", b}};
      GradCheckReport r = grad_check(
          [&](Tape &tp) { return weighted_sum(tp, c.f(tp, a, b)); }, params, opts);
      INFO(c.name << " max rel error " << r.max_rel_error);
      CHECK(r.passed);
    }
  }
}

TEST_CASE("forward and backward are bit-reproducible") {
  auto run = [] {
    std::mt19937_64 rng(99);
    Tensor a = random_tensor(rng, {4, 6});
    Tensor b = random_tensor(rng, {6, 3});
    Tape tape;
    Tensor y = tape.sum(tape.log_softmax(tape.tanh(tape.matmul(a, b)), 1));
    tape.backward(y);
    std::vector<double> out{y.item()};
    out.insert(out.end(), a.grad().begin(), a.grad().end());
    out.insert(out.end(), b.grad().begin(), b.grad().end());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("non-recording tape keeps no history") {
  Tensor x({2}, {1, 2}, true);
  Tape tape(false);
  Tensor y = tape.sum(tape.mul(x, x));
  CHECK(tape.num_nodes() == 0);
  CHECK_FALSE(y.requires_grad());
  CHECK(y.item() == 5.0);
}
