// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "flowcond/ops.hpp"
#include "flowcond/rng.hpp"
#include "flowcond/tape.hpp"
#include "grad_check.hpp"

using namespace flowcond;
using namespace flowcond::ad;
using flowcond::testing::max_grad_error;
using flowcond::testing::random_tensor;

TEST_CASE("forward values of the basic ops") {
  CHECK(add(Tensor(1, 2, {1, 2}), Tensor(1, 2, {3, 4})).values()[0] == 4);
  CHECK(add(Tensor(1, 2, {1, 2}), Tensor(1, 2, {3, 4})).values()[1] == 6);

  // matmul against the identity
  const Tensor eye(2, 2, {1, 0, 0, 1});
  const Tensor m(2, 2, {1.5, -2.0, 0.25, 4.0});
  const Tensor prod = matmul(eye, m);
  for (std::size_t i = 0; i < 4; ++i) CHECK(prod.values()[i] == m.values()[i]);

  CHECK(silu(Tensor(0.0)).scalar() == 0.0);
  CHECK(sum(Tensor(2, 2, {1, 2, 3, 4})).scalar() == 10.0);
  CHECK(mean(Tensor(2, 2, {1, 2, 3, 4})).scalar() == 2.5);
  CHECK(l2_norm_sq(Tensor(2, 2, {3, 4, 1, 1})).values()[0] == 25.0);
}

TEST_CASE("spec backward examples") {
  SUBCASE("d sum(x^2) / dx = 2x") {
    Tape tape;
    const Tensor x = tape.watch(Tensor(1, 3, {1, 2, 3}));
    const GradientMap g = tape.backward(sum(square(x)));
    const auto gx = g.at(x).values();
    CHECK(gx[0] == 2);
    CHECK(gx[1] == 4);
    CHECK(gx[2] == 6);
  }
  SUBCASE("product rule on scalars") {
    Tape tape;
    const Tensor a = tape.watch(Tensor(2.0));
    const Tensor b = tape.watch(Tensor(3.0));
    const GradientMap g = tape.backward(mul(a, b));
    CHECK(g.at(a).scalar() == 3.0);
    CHECK(g.at(b).scalar() == 2.0);
  }
}

TEST_CASE("stop_gradient semantics") {
  SUBCASE("one frozen factor") {
    Tape tape;
    const Tensor x = tape.watch(Tensor(2.0));
    const GradientMap g = tape.backward(sum(mul(stop_gradient(x), x)));
    CHECK(g.at(x).scalar() == 2.0);  // not 4
  }
  SUBCASE("value passthrough") {
    Rng rng = make_rng(7);
    const Tensor x = random_tensor(3, 2, rng);
    const Tensor y = stop_gradient(x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.values()[i] == x.values()[i]);
  }
  SUBCASE("fully detached root gives zero gradients") {
    Tape tape;
    const Tensor x = tape.watch(Tensor(1, 2, {5, 7}));
    const GradientMap g = tape.backward(sum(stop_gradient(x)));
    CHECK(g.at(x).values()[0] == 0.0);
    CHECK(g.at(x).values()[1] == 0.0);
  }
}

TEST_CASE("backward error paths") {
  Tape tape;
  const Tensor x = tape.watch(Tensor(1, 2, {1, 2}));
  CHECK_THROWS_AS(tape.backward(square(x)), std::invalid_argument);  // non-scalar root

  const Tensor off_tape(3.0);
  CHECK_THROWS_AS(tape.backward(off_tape), std::invalid_argument);

  Tape other;
  const Tensor y = other.watch(Tensor(1, 2, {1, 2}));
  CHECK_THROWS_AS(add(x, y), std::invalid_argument);  // two live tapes
}

TEST_CASE("shape errors name the op and shapes") {
  const Tensor a(2, 2, {1, 2, 3, 4});
  const Tensor b(3, 1, {1, 2, 3});
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("add"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("matmul"), std::invalid_argument);
  CHECK_THROWS_AS(concat(a, b, 1), std::invalid_argument);
  CHECK_THROWS_AS(slice(a, 1, 1, 2), std::invalid_argument);
  CHECK_THROWS_AS(broadcast(a, 4), std::invalid_argument);
}

TEST_CASE("finite differences confirm every op kind") {
  Rng rng = make_rng(11);

  auto check1 = [&](const char* name, auto&& op, const Tensor& x) {
    CAPTURE(name);
    const double err = max_grad_error(
        [&](const std::vector<Tensor>& in) { return op(in[0]); }, {x});
    CHECK(err < 1e-5);
  };

  const Tensor x = random_tensor(3, 4, rng);
  check1("tanh", [](const Tensor& t) { return ad::tanh(t); }, x);
  check1("silu", [](const Tensor& t) { return silu(t); }, x);
  check1("sin", [](const Tensor& t) { return ad::sin(t); }, x);
  check1("cos", [](const Tensor& t) { return ad::cos(t); }, x);
  check1("square", [](const Tensor& t) { return square(t); }, x);
  check1("scalar_mul", [](const Tensor& t) { return scalar_mul(t, -1.7); }, x);
  check1("mean", [](const Tensor& t) { return mean(t); }, x);
  check1("l2_norm_sq", [](const Tensor& t) { return l2_norm_sq(t); }, x);
  check1("slice", [](const Tensor& t) { return slice(t, 1, 1, 2); }, x);
  check1("slice rows", [](const Tensor& t) { return slice(t, 0, 0, 2); }, x);

  // abs away from the kink; sqrt on positive inputs
  Tensor shifted = random_tensor(3, 4, rng);
  {
    auto vals = shifted.mutable_values();
    for (double& v : vals) v = (v < 0 ? v - 1.0 : v + 1.0);
  }
  check1("abs", [](const Tensor& t) { return ad::abs(t); }, shifted);
  Tensor positive = random_tensor(3, 4, rng);
  {
    auto vals = positive.mutable_values();
    for (double& v : vals) v = std::fabs(v) + 0.5;
  }
  check1("sqrt", [](const Tensor& t) { return ad::sqrt(t); }, positive);

  const Tensor row = random_tensor(1, 4, rng);
  check1("broadcast", [](const Tensor& t) { return broadcast(t, 5); }, row);

  const Tensor b2 = random_tensor(3, 4, rng);
  CHECK(max_grad_error([](const std::vector<Tensor>& in) { return add(in[0], in[1]); },
                       {x, b2}) < 1e-5);
  CHECK(max_grad_error([](const std::vector<Tensor>& in) { return sub(in[0], in[1]); },
                       {x, b2}) < 1e-5);
  CHECK(max_grad_error([](const std::vector<Tensor>& in) { return mul(in[0], in[1]); },
                       {x, b2}) < 1e-5);
  CHECK(max_grad_error([](const std::vector<Tensor>& in) { return concat(in[0], in[1], 1); },
                       {x, b2}) < 1e-5);
  CHECK(max_grad_error([](const std::vector<Tensor>& in) { return concat(in[0], in[1], 0); },
                       {x, b2}) < 1e-5);

  const Tensor lhs = random_tensor(2, 3, rng);
  const Tensor rhs = random_tensor(3, 4, rng);
  CHECK(max_grad_error([](const std::vector<Tensor>& in) { return matmul(in[0], in[1]); },
                       {lhs, rhs}) < 1e-5);

  // batch broadcast in a binary op
  CHECK(max_grad_error([](const std::vector<Tensor>& in) { return add(in[0], in[1]); },
                       {x, random_tensor(1, 4, rng)}) < 1e-5);
}

TEST_CASE("two-layer tanh network gradient matches finite differences") {
  Rng rng = make_rng(23);
  for (int instance = 0; instance < 5; ++instance) {
    const Tensor x = random_tensor(4, 3, rng);
    const Tensor w1 = random_tensor(3, 8, rng, 0.7);
    const Tensor b1 = random_tensor(1, 8, rng, 0.2);
    const Tensor w2 = random_tensor(8, 2, rng, 0.7);
    const double err = max_grad_error(
        [&](const std::vector<Tensor>& in) {
          const Tensor h = ad::tanh(add(matmul(x, in[0]), in[1]));
          return l2_norm_sq(matmul(h, in[2]));
        },
        {w1, b1, w2});
    CHECK(err < 1e-5);
  }
}

TEST_CASE("repeated backward over a frozen tape is deterministic") {
  Rng rng = make_rng(3);
  Tape tape;
  const Tensor x = tape.watch(random_tensor(3, 3, rng));
  const Tensor root = mean(square(ad::tanh(x)));
  const GradientMap g1 = tape.backward(root);
  const GradientMap g2 = tape.backward(root);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(g1.at(x).values()[i] == g2.at(x).values()[i]);
  }
}

TEST_CASE("gradient of a sum of scalar roots is the sum of gradients") {
  Rng rng = make_rng(5);
  for (int instance = 0; instance < 5; ++instance) {
    const Tensor x0 = random_tensor(2, 3, rng);

    Tape t1;
    const Tensor xa = t1.watch(x0.detached());
    const Tensor ra = sum(square(xa));
    const auto ga = t1.backward(ra);

    Tape t2;
    const Tensor xb = t2.watch(x0.detached());
    const Tensor rb = mean(silu(xb));
    const auto gb = t2.backward(rb);

    Tape t3;
    const Tensor xc = t3.watch(x0.detached());
    const Tensor rc = add(sum(square(xc)), mean(silu(xc)));
    const auto gc = t3.backward(rc);

    for (std::size_t i = 0; i < x0.size(); ++i) {
      const double lhs = gc.at(xc).values()[i];
      const double rhs = ga.at(xa).values()[i] + gb.at(xb).values()[i];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("unreached watched leaves receive zero gradients") {
  Tape tape;
  const Tensor used = tape.watch(Tensor(2.0));
  const Tensor unused = tape.watch(Tensor(1, 3, {1, 2, 3}));
  const GradientMap g = tape.backward(square(used));
  CHECK(g.at(used).scalar() == 4.0);
  for (double v : g.at(unused).values()) CHECK(v == 0.0);
}
