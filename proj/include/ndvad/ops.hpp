#pragma once

#include <cstdint>
#include <vector>

#include "ndvad/autodiff.hpp"
#include "ndvad/tensor.hpp"

namespace ndvad {

// ---- structural ----
Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose2d(const Tensor& x);
Tensor narrow(const Tensor& x, std::int64_t axis, std::int64_t start, std::int64_t length);
Tensor concat(const std::vector<Tensor>& xs, std::int64_t axis);
Tensor broadcast_to(const Tensor& x, const Shape& shape);
// Stacks equal-shaped tensors along a new leading axis.
Tensor stack0(const std::vector<Tensor>& xs);

// ---- elementwise binary (numpy-style broadcasting, matching dtypes) ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// ---- elementwise unary ----
Tensor neg(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor square(const Tensor& x);

// ---- scalar ----
Tensor add_scalar(const Tensor& x, double s);
Tensor mul_scalar(const Tensor& x, double s);
Tensor sub_scalar(const Tensor& x, double s);   // x - s
Tensor rsub_scalar(const Tensor& x, double s);  // s - x

// ---- reductions ----
Tensor sum(const Tensor& x);   // scalar
Tensor mean(const Tensor& x);  // scalar
Tensor sum_axis(const Tensor& x, std::int64_t axis, bool keepdims);
Tensor mean_axis(const Tensor& x, std::int64_t axis, bool keepdims);
// Max values along an axis, detached from the graph (used for stabilization).
Tensor max_axis_detached(const Tensor& x, std::int64_t axis, bool keepdims);
std::vector<std::int64_t> argmax_axis(const Tensor& x, std::int64_t axis);

// Euclidean norm of the full tensor (sqrt of sum of squares).
Tensor euclidean_norm(const Tensor& x);
// Row-wise euclidean norms of a 2-D tensor -> shape [rows].
Tensor row_norms(const Tensor& x);

// ---- softmax (max-subtracted, composed of differentiable primitives) ----
Tensor softmax(const Tensor& x, std::int64_t axis);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);
// Affine map over the trailing axis: input [..., c] x weight [c, k] (+ bias [k]).
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias = Tensor());

// ---- convolution (direct, NCHW) ----
// input [n,c_in,h,w], kernel [c_out,c_in,kh,kw]
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::int64_t stride, std::int64_t pad);
// input [n,c_in,h,w], kernel [c_in,c_out,kh,kw]; out size (h-1)*stride - 2*pad + kh + out_pad
Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, std::int64_t stride,
                        std::int64_t pad, std::int64_t out_pad = 0);

// ---- row gather/scatter (indices are constants) ----
// x [rows, c], indices into rows -> [n, c]
Tensor take_rows(const Tensor& x, const std::vector<std::int64_t>& indices);
// inverse adjoint: accumulates rows of x into a [rows, c] tensor
Tensor put_rows_accumulate(const Tensor& x, const std::vector<std::int64_t>& indices,
                           std::int64_t rows);

// Broadcast-aware reduction of g down to `shape` (adjoint of broadcast_to).
Tensor sum_to(const Tensor& g, const Shape& shape);

Shape broadcast_shapes(const Shape& a, const Shape& b);

}  // namespace ndvad
