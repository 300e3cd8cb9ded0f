#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ndvad/ops.hpp"
#include "ndvad/rng.hpp"
#include "oracles.hpp"

using namespace ndvad;

TEST_CASE("tensor basics") {
  Tensor t = Tensor::from({1, 2, 3, 4, 5, 6}, {2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.dim(0) == 2);
  CHECK(t.at(5) == 6.0);
  CHECK_THROWS_AS(Tensor::from({1, 2}, {3}), DimensionError);
  CHECK_THROWS_AS(t.item(), ContractError);
  CHECK(Tensor::scalar(7.0).item() == 7.0);
}

TEST_CASE("f32 tensors hold float-rounded values") {
  double v = 0.1;  // not representable in float
  Tensor a = Tensor::from({v}, {1}, DType::F32);
  CHECK(a.at(0) == static_cast<double>(static_cast<float>(v)));
  Tensor b = Tensor::from({v}, {1}, DType::F64);
  CHECK(b.at(0) == v);
}

TEST_CASE("conv2d identity and constant cases") {
  Rng rng(7);
  Tensor x = oracle::random_tensor(rng, {1, 1, 4, 4});
  Tensor k1 = Tensor::from({1.0}, {1, 1, 1, 1}, DType::F64);
  Tensor y = conv2d(x, k1, 1, 0);
  REQUIRE(y.shape() == Shape{1, 1, 4, 4});
  for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(y.at(i) == doctest::Approx(x.at(i)));

  Tensor ones_in = Tensor::ones({1, 1, 3, 3}, DType::F64);
  Tensor k2 = Tensor::ones({1, 1, 2, 2}, DType::F64);
  Tensor y2 = conv2d(ones_in, k2, 1, 0);
  REQUIRE(y2.shape() == Shape{1, 1, 2, 2});
  for (std::int64_t i = 0; i < 4; ++i) CHECK(y2.at(i) == doctest::Approx(4.0));
}

TEST_CASE("conv2d matches the nested-loop oracle") {
  Rng rng(11);
  Tensor x = oracle::random_tensor(rng, {1, 2, 4, 4});
  Tensor k = oracle::random_tensor(rng, {3, 2, 3, 3});
  for (auto [stride, pad] : {std::pair<int, int>{1, 0}, {1, 1}, {2, 1}}) {
    Tensor y = conv2d(x, k, stride, pad);
    auto ref = oracle::conv2d_loops(x.data(), 1, 2, 4, 4, k.data(), 3, 3, 3, stride, pad);
    REQUIRE(static_cast<std::size_t>(y.numel()) == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(std::abs(y.at(static_cast<std::int64_t>(i)) - ref[i]) < 1e-6);
    }
  }
}

TEST_CASE("conv2d shape errors name the offending axes") {
  Tensor x = Tensor::zeros({1, 3, 4, 4}, DType::F64);
  Tensor k = Tensor::zeros({2, 2, 3, 3}, DType::F64);
  CHECK_THROWS_AS(conv2d(x, k, 1, 0), DimensionError);
  Tensor kbig = Tensor::zeros({2, 3, 7, 7}, DType::F64);
  CHECK_THROWS_AS(conv2d(x, kbig, 1, 0), DimensionError);
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
  // <conv(x,k), g> == <x, convT(g,k')> with k' the same kernel seen from the
  // other side; checked numerically on random data.
  Rng rng(13);
  Tensor x = oracle::random_tensor(rng, {2, 3, 6, 6});
  Tensor k = oracle::random_tensor(rng, {4, 3, 3, 3});
  Tensor y = conv2d(x, k, 2, 1);
  Tensor g = oracle::random_tensor(rng, y.shape());
  // forward through conv, dot with g
  double lhs = sum(mul(y, g)).item();
  // adjoint: scatter g through the kernel (kernel axes [c_out,c_in,...] match
  // conv_transpose2d's expected [c_in_of_transpose=c_out, ...] layout)
  Tensor xt = conv_transpose2d(g, k, 2, 1, 1);
  REQUIRE(xt.shape() == x.shape());
  double rhs = sum(mul(x, xt)).item();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
}

TEST_CASE("conv_transpose2d doubles resolution with k3 s2 p1 op1") {
  Tensor x = Tensor::zeros({1, 2, 5, 5}, DType::F64);
  Tensor k = Tensor::zeros({2, 3, 3, 3}, DType::F64);
  Tensor y = conv_transpose2d(x, k, 2, 1, 1);
  CHECK(y.shape() == Shape{1, 3, 10, 10});
}

TEST_CASE("linear identity, hand example and matmul oracle") {
  Tensor eye = Tensor::from({1, 0, 0, 1}, {2, 2}, DType::F64);
  Tensor x = Tensor::from({1, 2}, {1, 2}, DType::F64);
  Tensor y = linear(x, eye);
  CHECK(y.at(0) == 1.0);
  CHECK(y.at(1) == 2.0);

  Tensor bias = Tensor::from({3, 4}, {2}, DType::F64);
  Tensor y2 = linear(x, eye, bias);
  CHECK(y2.at(0) == 4.0);
  CHECK(y2.at(1) == 6.0);

  Rng rng(3);
  Tensor a = oracle::random_tensor(rng, {5, 8});
  Tensor w = oracle::random_tensor(rng, {8, 3});
  Tensor p = linear(a, w);
  auto ref = oracle::matmul_loops(a.data(), 5, 8, w.data(), 3);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    CHECK(std::abs(p.at(static_cast<std::int64_t>(i)) - ref[i]) < 1e-6);
  }

  Tensor bad = oracle::random_tensor(rng, {5, 7});
  CHECK_THROWS_AS(linear(bad, w), DimensionError);
}

TEST_CASE("softmax closed-form values and stability") {
  Tensor z = Tensor::zeros({4}, DType::F64);
  Tensor s = softmax(z, 0);
  for (int i = 0; i < 4; ++i) CHECK(s.at(i) == doctest::Approx(0.25));

  Tensor big = Tensor::from({1000.0, 1000.0}, {2}, DType::F64);
  Tensor sb = softmax(big, 0);
  CHECK(sb.at(0) == doctest::Approx(0.5));
  CHECK(sb.at(1) == doctest::Approx(0.5));
  CHECK(sb.all_finite());

  Tensor v = Tensor::from({0.0, std::log(3.0)}, {2}, DType::F64);
  Tensor sv = softmax(v, 0);
  CHECK(sv.at(0) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(sv.at(1) == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("softmax rows sum to one for random finite inputs") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = oracle::random_tensor(rng, {4, 6}, -50.0, 50.0);
    Tensor s = softmax(x, 1);
    Tensor sums = sum_axis(s, 1, false);
    for (std::int64_t i = 0; i < 4; ++i) CHECK(std::abs(sums.at(i) - 1.0) < 1e-6);
    for (std::int64_t i = 0; i < s.numel(); ++i) {
      CHECK(s.at(i) > 0.0);
      CHECK(s.at(i) < 1.0 + 1e-12);
    }
  }
}

TEST_CASE("reductions, norms, reshape, concat, narrow") {
  Tensor x = Tensor::from({1, 2, 3, 4, 5, 6}, {2, 3}, DType::F64);
  CHECK(sum(x).item() == 21.0);
  CHECK(mean(x).item() == doctest::Approx(3.5));
  Tensor s0 = sum_axis(x, 0, false);
  CHECK(s0.shape() == Shape{3});
  CHECK(s0.at(0) == 5.0);
  Tensor s1 = sum_axis(x, 1, true);
  CHECK(s1.shape() == Shape{2, 1});
  CHECK(s1.at(1) == 15.0);

  CHECK(euclidean_norm(Tensor::from({3, 4}, {2}, DType::F64)).item() == doctest::Approx(5.0));
  Tensor rn = row_norms(Tensor::from({3, 4, 0, 0}, {2, 2}, DType::F64));
  CHECK(rn.at(0) == doctest::Approx(5.0));
  CHECK(rn.at(1) == 0.0);

  Tensor r = reshape(x, {3, 2});
  CHECK(r.at(2) == 3.0);
  CHECK_THROWS_AS(reshape(x, {4, 2}), DimensionError);

  Tensor n = narrow(x, 1, 1, 2);
  CHECK(n.shape() == Shape{2, 2});
  CHECK(n.at(0) == 2.0);
  CHECK(n.at(3) == 6.0);

  Tensor c = concat({x, x}, 0);
  CHECK(c.shape() == Shape{4, 3});
  CHECK(c.at(8) == 3.0);
  Tensor c1 = concat({x, n}, 1);
  CHECK(c1.shape() == Shape{2, 5});
  CHECK(c1.at(4) == 3.0);
}

TEST_CASE("broadcasting binary ops") {
  Tensor a = Tensor::from({1, 2, 3, 4, 5, 6}, {2, 3}, DType::F64);
  Tensor row = Tensor::from({10, 20, 30}, {3}, DType::F64);
  Tensor y = add(a, row);
  CHECK(y.at(0) == 11.0);
  CHECK(y.at(5) == 36.0);
  Tensor col = Tensor::from({100, 200}, {2, 1}, DType::F64);
  Tensor z = mul(a, col);
  CHECK(z.at(2) == 300.0);
  CHECK(z.at(3) == 800.0);
  CHECK_THROWS_AS(add(a, Tensor::zeros({2, 2}, DType::F64)), DimensionError);
  CHECK_THROWS_AS(add(a, Tensor::zeros({2, 3}, DType::F32)), ContractError);
}

TEST_CASE("argmax ties break to the smallest index") {
  Tensor x = Tensor::from({1, 5, 5, 2, 0, 0}, {2, 3}, DType::F64);
  auto idx = argmax_axis(x, 1);
  CHECK(idx[0] == 1);
  CHECK(idx[1] == 0);
}

TEST_CASE("take_rows / put_rows_accumulate") {
  Tensor x = Tensor::from({1, 2, 3, 4, 5, 6}, {3, 2}, DType::F64);
  Tensor t = take_rows(x, {2, 0, 2});
  CHECK(t.shape() == Shape{3, 2});
  CHECK(t.at(0) == 5.0);
  CHECK(t.at(5) == 6.0);
  Tensor p = put_rows_accumulate(t, {0, 0, 1}, 2);
  CHECK(p.at(0) == doctest::Approx(6.0));  // rows 5,6 + 1,2 -> row0 = [6,8]
  CHECK(p.at(1) == doctest::Approx(8.0));
  CHECK(p.at(2) == 5.0);
}

TEST_CASE("forward determinism across runs") {
  auto run = [] {
    Rng rng(99);
    Tensor x = oracle::random_tensor(rng, {2, 3, 8, 8});
    Tensor k = oracle::random_tensor(rng, {4, 3, 3, 3});
    Tensor y = tanh(conv2d(x, k, 2, 1));
    return y.data();
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
