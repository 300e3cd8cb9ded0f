#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ndvad/gradcheck.hpp"
#include "ndvad/ops.hpp"
#include "ndvad/rng.hpp"
#include "oracles.hpp"

using namespace ndvad;

TEST_CASE("backward of sum gives ones, sum of squares gives 2x") {
  Tensor p = Tensor::from({1, 2, 3}, {3}, DType::F64, true);
  Tape tape;
  Tensor loss = sum(p);
  tape.backward(loss);
  Tensor g = p.grad();
  REQUIRE(g.defined());
  for (int i = 0; i < 3; ++i) CHECK(g.at(i) == 1.0);

  Tensor loss2 = sum(square(p));
  tape.backward(loss2);
  Tensor g2 = p.grad();
  CHECK(g2.at(0) == 2.0);
  CHECK(g2.at(1) == 4.0);
  CHECK(g2.at(2) == 6.0);
}

TEST_CASE("non-scalar loss is a contract error; unreachable params get no grad") {
  Tensor p = Tensor::from({1, 2}, {2}, DType::F64, true);
  Tensor q = Tensor::from({5}, {1}, DType::F64, true);
  Tape tape;
  CHECK_THROWS_AS(tape.backward(mul_scalar(p, 2.0)), ContractError);
  tape.backward(sum(square(p)));
  CHECK(p.grad().defined());
  CHECK_FALSE(q.grad().defined());
}

TEST_CASE("shared subexpressions accumulate exactly once per use") {
  Tensor x = Tensor::scalar(3.0, DType::F64, true);
  Tape tape;
  Tensor y = add(mul(x, x), x);  // x^2 + x -> dy/dx = 2x + 1 = 7
  tape.backward(y);
  CHECK(x.grad().item() == doctest::Approx(7.0));
}

TEST_CASE("grad_check on x*x at 3") {
  auto fn = [](const Tensor& t) { return sum(mul(t, t)); };
  double err = grad_check(fn, Tensor::scalar(3.0, DType::F64), 1e-5);
  CHECK(err < 1e-6);
}

namespace {

// 10 random points per op, 64-bit, as the module invariants require.
void check_op(const char* name, const std::function<Tensor(const Tensor&)>& fn, Shape shape,
              double lo = -1.0, double hi = 1.0, double tol = 1e-5) {
  Rng rng(derive_seed(42, name));
  for (int trial = 0; trial < 10; ++trial) {
    Tensor p = oracle::random_tensor(rng, shape, lo, hi);
    double err = grad_check(fn, p, 1e-5);
    INFO(name << " trial " << trial);
    CHECK(err < tol);
  }
}

}  // namespace

TEST_CASE("grad checks: elementwise and scalar ops") {
  check_op("add", [](const Tensor& t) { return sum(add(t, mul_scalar(t, 0.5))); }, {3, 4});
  check_op("sub", [](const Tensor& t) { return sum(sub(t, square(t))); }, {3, 4});
  check_op("mul", [](const Tensor& t) { return sum(mul(t, add_scalar(t, 2.0))); }, {3, 4});
  check_op("div", [](const Tensor& t) { return sum(div(t, add_scalar(square(t), 1.5))); }, {3, 4});
  check_op("neg", [](const Tensor& t) { return sum(neg(square(t))); }, {5});
  check_op("exp", [](const Tensor& t) { return sum(exp(t)); }, {5});
  check_op("log", [](const Tensor& t) { return sum(log(t)); }, {5}, 0.5, 2.0);
  check_op("sqrt", [](const Tensor& t) { return sum(sqrt(t)); }, {5}, 0.5, 2.0);
  check_op("sigmoid", [](const Tensor& t) { return sum(sigmoid(t)); }, {5}, -3.0, 3.0);
  check_op("tanh", [](const Tensor& t) { return sum(tanh(t)); }, {5}, -3.0, 3.0);
  check_op("relu", [](const Tensor& t) { return sum(relu(t)); }, {7}, 0.1, 2.0);
  check_op("rsub_scalar", [](const Tensor& t) { return sum(square(rsub_scalar(t, 1.0))); }, {5});
  check_op("add_scalar", [](const Tensor& t) { return sum(square(add_scalar(t, 0.7))); }, {5});
}

TEST_CASE("grad checks: reductions, structure, broadcasting") {
  check_op("mean", [](const Tensor& t) { return mean(square(t)); }, {4, 3});
  check_op("sum_axis0", [](const Tensor& t) { return sum(square(sum_axis(t, 0, false))); }, {4, 3});
  check_op("sum_axis1k", [](const Tensor& t) { return sum(square(sum_axis(t, 1, true))); }, {4, 3});
  check_op("mean_axis", [](const Tensor& t) { return sum(square(mean_axis(t, 1, false))); }, {4, 3});
  check_op("reshape", [](const Tensor& t) { return sum(square(reshape(t, {2, 6}))); }, {4, 3});
  check_op("transpose2d", [](const Tensor& t) { return sum(square(transpose2d(t))); }, {4, 3});
  check_op("narrow", [](const Tensor& t) { return sum(square(narrow(t, 1, 1, 2))); }, {4, 3});
  check_op("concat",
           [](const Tensor& t) { return sum(square(concat({t, mul_scalar(t, 2.0)}, 0))); }, {4, 3});
  check_op("broadcast",
           [](const Tensor& t) { return sum(square(broadcast_to(t, {5, 4, 3}))); }, {4, 3});
  check_op("bcast_binary",
           [](const Tensor& t) {
             Tensor row = narrow(t, 0, 0, 1);
             return sum(square(div(t, add_scalar(square(row), 1.0))));
           },
           {4, 3});
  check_op("euclidean_norm", [](const Tensor& t) { return euclidean_norm(t); }, {4, 3}, 0.5, 2.0);
  check_op("row_norms", [](const Tensor& t) { return sum(row_norms(t)); }, {4, 3}, 0.5, 2.0);
  check_op("take_rows", [](const Tensor& t) { return sum(square(take_rows(t, {2, 0, 2, 1}))); },
           {4, 3});
  check_op("put_rows",
           [](const Tensor& t) { return sum(square(put_rows_accumulate(t, {1, 0, 1, 4}, 6))); },
           {4, 3});
  check_op("softmax", [](const Tensor& t) { return sum(square(softmax(t, 1))); }, {4, 3}, -3.0,
           3.0);
}

TEST_CASE("grad checks: matmul, linear, conv") {
  Rng rng(5);
  Tensor w = oracle::random_tensor(rng, {3, 4});
  check_op("matmul", [w](const Tensor& t) { return sum(square(matmul(t, w))); }, {5, 3});
  Tensor b = oracle::random_tensor(rng, {4});
  check_op("linear_w", [w, b](const Tensor& t) { return sum(square(linear(t, w, b))); }, {5, 3});
  check_op("linear_bias", [w](const Tensor& t) {
    Rng r2(8);
    Tensor x = oracle::random_tensor(r2, {5, 3});
    return sum(square(linear(x, w, t)));
  }, {4});

  Tensor k = oracle::random_tensor(rng, {2, 3, 3, 3});
  check_op("conv2d_input",
           [k](const Tensor& t) { return sum(square(conv2d(t, k, 2, 1))); }, {1, 3, 6, 6});
  Tensor xin = oracle::random_tensor(rng, {1, 3, 6, 6});
  check_op("conv2d_kernel",
           [xin](const Tensor& t) { return sum(square(conv2d(xin, t, 2, 1))); }, {2, 3, 3, 3});
  Tensor kt = oracle::random_tensor(rng, {3, 2, 3, 3});
  check_op("convT_input",
           [kt](const Tensor& t) { return sum(square(conv_transpose2d(t, kt, 2, 1, 1))); },
           {1, 3, 4, 4});
  Tensor xt = oracle::random_tensor(rng, {1, 3, 4, 4});
  check_op("convT_kernel",
           [xt](const Tensor& t) { return sum(square(conv_transpose2d(xt, t, 2, 1, 1))); },
           {3, 2, 3, 3});
}

namespace {
void check_op_f32(const char* name, const std::function<Tensor(const Tensor&)>& fn, Shape shape,
                  double lo = -1.0, double hi = 1.0) {
  Rng rng(derive_seed(142, name));
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& v : d) v = rng.uniform(lo, hi);
    Tensor p = Tensor::from(std::move(d), shape, DType::F32);
    // f32 values keep ~7 digits; a larger step keeps the quotient meaningful
    double err = grad_check(fn, p, 1e-3);
    INFO(name << " trial " << trial);
    CHECK(err < 1e-3);
  }
}
}  // namespace

TEST_CASE("f32 grad checks stay under the 32-bit tolerance") {
  Rng rng(21);
  std::vector<double> wd(12);
  for (auto& v : wd) v = rng.uniform(-1.0, 1.0);
  Tensor w32 = Tensor::from(wd, {3, 4}, DType::F32);
  check_op_f32("sigmoid", [](const Tensor& t) { return mean(square(sigmoid(t))); }, {3, 4});
  check_op_f32("tanh", [](const Tensor& t) { return sum(tanh(t)); }, {5}, -2, 2);
  check_op_f32("exp", [](const Tensor& t) { return sum(exp(t)); }, {5});
  check_op_f32("log", [](const Tensor& t) { return sum(log(t)); }, {5}, 0.5, 2.0);
  check_op_f32("sqrt", [](const Tensor& t) { return sum(sqrt(t)); }, {5}, 0.5, 2.0);
  check_op_f32("relu", [](const Tensor& t) { return sum(square(relu(t))); }, {7}, 0.1, 2.0);
  check_op_f32("mul", [](const Tensor& t) { return sum(mul(t, add_scalar(t, 2.0))); }, {3, 4});
  check_op_f32("div", [](const Tensor& t) { return sum(div(t, add_scalar(square(t), 1.5))); },
               {3, 4});
  check_op_f32("softmax", [](const Tensor& t) { return sum(square(softmax(t, 1))); }, {4, 3}, -2,
               2);
  check_op_f32("matmul", [w32](const Tensor& t) { return sum(square(matmul(t, w32))); }, {5, 3});
  Rng ck(31);
  std::vector<double> kd(2 * 3 * 9);
  for (auto& v : kd) v = ck.uniform(-0.5, 0.5);
  Tensor k32 = Tensor::from(kd, {2, 3, 3, 3}, DType::F32);
  check_op_f32("conv2d", [k32](const Tensor& t) { return sum(square(conv2d(t, k32, 2, 1))); },
               {1, 3, 6, 6}, -0.5, 0.5);
  check_op_f32("norm", [](const Tensor& t) { return euclidean_norm(t); }, {4, 3}, 0.5, 2.0);
  check_op_f32("reduce", [](const Tensor& t) { return sum(square(sum_axis(t, 0, false))); },
               {4, 3});
}

TEST_CASE("higher order: gradient of a gradient") {
  // F(x) = sum((dL/dx)^2) with L = sum(x^3): dL/dx = 3x^2, F = 9x^4,
  // dF/dx = 36x^3.
  auto grad_of_L = [](const Tensor& t) {
    Tape inner(true);
    Tensor L = sum(mul(t, square(t)));
    Gradients gs = inner.backward(L);
    return gs.of(t);
  };
  Tensor x = Tensor::from({0.5, -1.25, 2.0}, {3}, DType::F64, true);
  Tape tape(true);
  Tensor g = grad_of_L(x);
  REQUIRE(g.defined());
  Tensor F = sum(square(g));
  tape.backward(F);
  Tensor gx = x.grad();
  REQUIRE(gx.defined());
  for (int i = 0; i < 3; ++i) {
    double xi = x.at(i);
    CHECK(gx.at(i) == doctest::Approx(36.0 * xi * xi * xi).epsilon(1e-9));
  }

  // And the same composition passes a finite-difference check.
  auto F_of = [&](const Tensor& t) {
    Tape inner(true);
    Tensor L = sum(mul(t, square(t)));
    Gradients gs = inner.backward(L);
    return sum(square(gs.of(t)));
  };
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor p = oracle::random_tensor(rng, {4}, -1.5, 1.5);
    CHECK(grad_check(F_of, p, 1e-5) < 1e-5);
  }
}

TEST_CASE("higher order through sigmoid/conv compositions") {
  Rng rng(37);
  Tensor k = oracle::random_tensor(rng, {2, 2, 3, 3});
  auto F_of = [k](const Tensor& t) {
    Tape inner(true);
    Tensor L = mean(square(sigmoid(conv2d(t, k, 1, 1))));
    Gradients gs = inner.backward(L);
    return sum(square(gs.of(t)));
  };
  for (int trial = 0; trial < 3; ++trial) {
    Tensor p = oracle::random_tensor(rng, {1, 2, 4, 4});
    CHECK(grad_check(F_of, p, 1e-4) < 1e-5);
  }
}

TEST_CASE("backward leaves non-loss branches untouched") {
  Tensor x = Tensor::scalar(2.0, DType::F64, true);
  Tape tape;
  Tensor used = square(x);
  Tensor unused = mul_scalar(x, 100.0);
  (void)unused;
  tape.backward(used);
  CHECK(x.grad().item() == doctest::Approx(4.0));
}
