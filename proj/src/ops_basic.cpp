#include <algorithm>
#include <cmath>
#include <cstring>

#include "ndvad/ops.hpp"

namespace ndvad {

namespace {

void check_dtype(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype()) {
    throw ContractError(std::string(op) + ": dtype mismatch (" + dtype_name(a.dtype()) + " vs " +
                        dtype_name(b.dtype()) + ")");
  }
}

std::int64_t normalize_axis(const Tensor& x, std::int64_t axis, const char* op) {
  std::int64_t r = x.rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(x.shape()));
  }
  return axis;
}

using UnaryFn = double (*)(double);

Tensor unary_pointwise(const Tensor& x, const char* op, UnaryFn f,
                       std::function<std::vector<Tensor>(const Tensor&)> backward) {
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x.data()[i]);
  return autodiff_result(std::move(out), x.shape(), x.dtype(), op, {x}, std::move(backward));
}

// Zero-pads x back into a tensor whose `axis` has length `total`, placing the
// block at `start`; the adjoint of narrow.
Tensor embed_zero(const Tensor& x, std::int64_t axis, std::int64_t start, std::int64_t total) {
  Shape out_shape = x.shape();
  out_shape[axis] = total;
  std::vector<double> out(static_cast<std::size_t>(shape_numel(out_shape)), 0.0);
  auto in_strides = row_major_strides(x.shape());
  std::int64_t outer = 1;
  for (std::int64_t i = 0; i < axis; ++i) outer *= x.shape()[i];
  std::int64_t block = in_strides[axis];  // elements per step along axis
  std::int64_t len = x.shape()[axis];
  for (std::int64_t o = 0; o < outer; ++o) {
    const double* src = x.data().data() + o * len * block;
    double* dst = out.data() + o * total * block + start * block;
    std::memcpy(dst, src, static_cast<std::size_t>(len * block) * sizeof(double));
  }
  std::int64_t length = len;
  return autodiff_result(std::move(out), out_shape, x.dtype(), "embed_zero", {x},
                         [axis, start, length](const Tensor& g) {
                           return std::vector<Tensor>{narrow(g, axis, start, length)};
                         });
}

}  // namespace

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  Shape out(std::max(a.size(), b.size()));
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::int64_t da = i < out.size() - a.size() ? 1 : a[i - (out.size() - a.size())];
    std::int64_t db = i < out.size() - b.size() ? 1 : b[i - (out.size() - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw DimensionError("cannot broadcast shapes " + shape_str(a) + " and " + shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
  if (x.shape() == shape) return x;
  const Shape& in = x.shape();
  if (in.size() > shape.size()) {
    throw DimensionError("broadcast_to: rank of " + shape_str(in) + " exceeds target " +
                         shape_str(shape));
  }
  std::size_t off = shape.size() - in.size();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] != shape[off + i] && in[i] != 1) {
      throw DimensionError("broadcast_to: cannot expand " + shape_str(in) + " to " +
                           shape_str(shape));
    }
  }
  auto out_strides = row_major_strides(shape);
  auto in_strides = row_major_strides(in);
  std::int64_t n = shape_numel(shape);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (std::int64_t flat = 0; flat < n; ++flat) {
    std::int64_t rem = flat, src = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      std::int64_t idx = rem / out_strides[d];
      rem %= out_strides[d];
      if (d >= off && in[d - off] != 1) src += idx * in_strides[d - off];
    }
    out[flat] = x.data()[src];
  }
  Shape orig = in;
  return autodiff_result(std::move(out), shape, x.dtype(), "broadcast_to", {x},
                         [orig](const Tensor& g) {
                           return std::vector<Tensor>{sum_to(g, orig)};
                         });
}

Tensor sum_to(const Tensor& g, const Shape& shape) {
  Tensor r = g;
  while (r.rank() > static_cast<std::int64_t>(shape.size())) r = sum_axis(r, 0, false);
  for (std::int64_t d = 0; d < r.rank(); ++d) {
    if (shape[d] == 1 && r.shape()[d] != 1) r = sum_axis(r, d, true);
  }
  if (r.shape() != shape) {
    throw DimensionError("sum_to: cannot reduce " + shape_str(g.shape()) + " to " +
                         shape_str(shape));
  }
  return r;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: element count mismatch " + shape_str(x.shape()) + " -> " +
                         shape_str(shape));
  }
  Shape orig = x.shape();
  return autodiff_result(x.data(), std::move(shape), x.dtype(), "reshape", {x},
                         [orig](const Tensor& g) {
                           return std::vector<Tensor>{reshape(g, orig)};
                         });
}

Tensor transpose2d(const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("transpose2d: expected rank 2, got " + shape_str(x.shape()));
  std::int64_t r = x.dim(0), c = x.dim(1);
  std::vector<double> out(static_cast<std::size_t>(r * c));
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = 0; j < c; ++j) out[j * r + i] = x.data()[i * c + j];
  return autodiff_result(std::move(out), {c, r}, x.dtype(), "transpose2d", {x},
                         [](const Tensor& g) {
                           return std::vector<Tensor>{transpose2d(g)};
                         });
}

Tensor narrow(const Tensor& x, std::int64_t axis, std::int64_t start, std::int64_t length) {
  axis = normalize_axis(x, axis, "narrow");
  if (start < 0 || length < 1 || start + length > x.dim(axis)) {
    throw DimensionError("narrow: window [" + std::to_string(start) + "," +
                         std::to_string(start + length) + ") out of range for axis " +
                         std::to_string(axis) + " of " + shape_str(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  auto strides = row_major_strides(x.shape());
  std::int64_t block = strides[axis];
  std::int64_t outer = 1;
  for (std::int64_t i = 0; i < axis; ++i) outer *= x.shape()[i];
  std::int64_t total = x.dim(axis);
  std::vector<double> out(static_cast<std::size_t>(shape_numel(out_shape)));
  for (std::int64_t o = 0; o < outer; ++o) {
    const double* src = x.data().data() + o * total * block + start * block;
    double* dst = out.data() + o * length * block;
    std::memcpy(dst, src, static_cast<std::size_t>(length * block) * sizeof(double));
  }
  return autodiff_result(std::move(out), out_shape, x.dtype(), "narrow", {x},
                         [axis, start, total](const Tensor& g) {
                           return std::vector<Tensor>{embed_zero(g, axis, start, total)};
                         });
}

Tensor concat(const std::vector<Tensor>& xs, std::int64_t axis) {
  if (xs.empty()) throw ContractError("concat: empty tensor list");
  axis = normalize_axis(xs[0], axis, "concat");
  Shape out_shape = xs[0].shape();
  std::int64_t total = 0;
  for (const auto& t : xs) {
    if (t.rank() != xs[0].rank()) throw DimensionError("concat: rank mismatch");
    check_dtype(t, xs[0], "concat");
    for (std::int64_t d = 0; d < t.rank(); ++d) {
      if (d != axis && t.dim(d) != out_shape[d]) {
        throw DimensionError("concat: shape mismatch at axis " + std::to_string(d) + ": " +
                             shape_str(t.shape()) + " vs " + shape_str(xs[0].shape()));
      }
    }
    total += t.dim(axis);
  }
  out_shape[axis] = total;
  std::int64_t outer = 1;
  for (std::int64_t i = 0; i < axis; ++i) outer *= out_shape[i];
  auto out_strides = row_major_strides(out_shape);
  std::int64_t block = out_strides[axis];
  std::vector<double> out(static_cast<std::size_t>(shape_numel(out_shape)));
  std::int64_t offset = 0;
  std::vector<std::int64_t> offsets, lengths;
  for (const auto& t : xs) {
    std::int64_t len = t.dim(axis);
    for (std::int64_t o = 0; o < outer; ++o) {
      const double* src = t.data().data() + o * len * block;
      double* dst = out.data() + o * total * block + offset * block;
      std::memcpy(dst, src, static_cast<std::size_t>(len * block) * sizeof(double));
    }
    offsets.push_back(offset);
    lengths.push_back(len);
    offset += len;
  }
  return autodiff_result(std::move(out), out_shape, xs[0].dtype(), "concat", xs,
                         [axis, offsets, lengths](const Tensor& g) {
                           std::vector<Tensor> gs;
                           gs.reserve(offsets.size());
                           for (std::size_t i = 0; i < offsets.size(); ++i) {
                             gs.push_back(narrow(g, axis, offsets[i], lengths[i]));
                           }
                           return gs;
                         });
}

Tensor stack0(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ContractError("stack0: empty tensor list");
  std::vector<Tensor> expanded;
  expanded.reserve(xs.size());
  for (const auto& t : xs) {
    Shape s = t.shape();
    s.insert(s.begin(), 1);
    expanded.push_back(reshape(t, s));
  }
  return concat(expanded, 0);
}

// ---- elementwise binary ----

namespace {
enum class BinOp { Add, Sub, Mul, Div };

Tensor binary(const Tensor& a0, const Tensor& b0, BinOp op, const char* name) {
  check_dtype(a0, b0, name);
  Tensor a = a0, b = b0;
  if (a.shape() != b.shape()) {
    Shape common = broadcast_shapes(a.shape(), b.shape());
    a = broadcast_to(a, common);
    b = broadcast_to(b, common);
  }
  std::vector<double> out(a.data().size());
  const auto& da = a.data();
  const auto& db = b.data();
  switch (op) {
    case BinOp::Add:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
      break;
    case BinOp::Sub:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] - db[i];
      break;
    case BinOp::Mul:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
      break;
    case BinOp::Div:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] / db[i];
      break;
  }
  std::function<std::vector<Tensor>(const Tensor&)> bw;
  switch (op) {
    case BinOp::Add:
      bw = [](const Tensor& g) { return std::vector<Tensor>{g, g}; };
      break;
    case BinOp::Sub:
      bw = [](const Tensor& g) { return std::vector<Tensor>{g, neg(g)}; };
      break;
    case BinOp::Mul:
      bw = [a, b](const Tensor& g) { return std::vector<Tensor>{mul(g, b), mul(g, a)}; };
      break;
    case BinOp::Div:
      bw = [a, b](const Tensor& g) {
        Tensor ga = div(g, b);
        Tensor gb = neg(div(mul(g, a), mul(b, b)));
        return std::vector<Tensor>{ga, gb};
      };
      break;
  }
  return autodiff_result(std::move(out), a.shape(), a.dtype(), name, {a, b}, std::move(bw));
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Mul, "mul"); }
Tensor div(const Tensor& a, const Tensor& b) { return binary(a, b, BinOp::Div, "div"); }

// ---- elementwise unary ----

Tensor neg(const Tensor& x) {
  return unary_pointwise(x, "neg", [](double v) { return -v; },
                         [](const Tensor& g) { return std::vector<Tensor>{neg(g)}; });
}

Tensor exp(const Tensor& x) {
  return unary_pointwise(x, "exp", [](double v) { return std::exp(v); },
                         [x](const Tensor& g) {
                           return std::vector<Tensor>{mul(g, exp(x))};
                         });
}

Tensor log(const Tensor& x) {
  return unary_pointwise(x, "log", [](double v) { return std::log(v); },
                         [x](const Tensor& g) {
                           return std::vector<Tensor>{div(g, x)};
                         });
}

Tensor sqrt(const Tensor& x) {
  // the backward denominator is floored so sqrt'(0) stays finite (0/0 at
  // collapsed norms would otherwise poison whole gradients)
  return unary_pointwise(x, "sqrt", [](double v) { return std::sqrt(v); },
                         [x](const Tensor& g) {
                           constexpr double kFloor = 1e-8;
                           Tensor s = sqrt(x);
                           Tensor denom = add_scalar(relu(sub_scalar(s, kFloor)), kFloor);
                           return std::vector<Tensor>{div(mul_scalar(g, 0.5), denom)};
                         });
}

Tensor relu(const Tensor& x) {
  std::vector<double> mask_data(x.data().size());
  for (std::size_t i = 0; i < mask_data.size(); ++i) mask_data[i] = x.data()[i] > 0.0 ? 1.0 : 0.0;
  Tensor mask = Tensor::from(std::move(mask_data), x.shape(), x.dtype());
  return unary_pointwise(x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
                         [mask](const Tensor& g) {
                           return std::vector<Tensor>{mul(g, mask)};
                         });
}

Tensor sigmoid(const Tensor& x) {
  auto fn = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  return unary_pointwise(x, "sigmoid", fn, [x](const Tensor& g) {
    Tensor s = sigmoid(x);
    return std::vector<Tensor>{mul(g, mul(s, rsub_scalar(s, 1.0)))};
  });
}

Tensor tanh(const Tensor& x) {
  return unary_pointwise(x, "tanh", [](double v) { return std::tanh(v); },
                         [x](const Tensor& g) {
                           return std::vector<Tensor>{mul(g, rsub_scalar(square(tanh(x)), 1.0))};
                         });
}

Tensor square(const Tensor& x) { return mul(x, x); }

// ---- scalar ----

Tensor add_scalar(const Tensor& x, double s) {
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] + s;
  return autodiff_result(std::move(out), x.shape(), x.dtype(), "add_scalar", {x},
                         [](const Tensor& g) { return std::vector<Tensor>{g}; });
}

Tensor mul_scalar(const Tensor& x, double s) {
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * s;
  return autodiff_result(std::move(out), x.shape(), x.dtype(), "mul_scalar", {x},
                         [s](const Tensor& g) {
                           return std::vector<Tensor>{mul_scalar(g, s)};
                         });
}

Tensor sub_scalar(const Tensor& x, double s) { return add_scalar(x, -s); }

Tensor rsub_scalar(const Tensor& x, double s) {
  std::vector<double> out(x.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s - x.data()[i];
  return autodiff_result(std::move(out), x.shape(), x.dtype(), "rsub_scalar", {x},
                         [](const Tensor& g) { return std::vector<Tensor>{neg(g)}; });
}

// ---- reductions ----

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Shape orig = x.shape();
  return autodiff_result({acc}, {}, x.dtype(), "sum", {x}, [orig](const Tensor& g) {
    return std::vector<Tensor>{broadcast_to(g, orig)};
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ContractError("mean: empty tensor");
  return mul_scalar(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor sum_axis(const Tensor& x, std::int64_t axis, bool keepdims) {
  axis = normalize_axis(x, axis, "sum_axis");
  Shape kd_shape = x.shape();
  kd_shape[axis] = 1;
  Shape out_shape = kd_shape;
  if (!keepdims) out_shape.erase(out_shape.begin() + axis);
  auto strides = row_major_strides(x.shape());
  std::int64_t block = strides[axis];
  std::int64_t len = x.dim(axis);
  std::int64_t outer = 1;
  for (std::int64_t i = 0; i < axis; ++i) outer *= x.shape()[i];
  std::vector<double> out(static_cast<std::size_t>(outer * block), 0.0);
  for (std::int64_t o = 0; o < outer; ++o) {
    const double* src = x.data().data() + o * len * block;
    double* dst = out.data() + o * block;
    for (std::int64_t l = 0; l < len; ++l) {
      for (std::int64_t b = 0; b < block; ++b) dst[b] += src[l * block + b];
    }
  }
  Shape orig = x.shape();
  return autodiff_result(std::move(out), out_shape, x.dtype(), "sum_axis", {x},
                         [orig, kd_shape, keepdims](const Tensor& g) {
                           Tensor gk = keepdims ? g : reshape(g, kd_shape);
                           return std::vector<Tensor>{broadcast_to(gk, orig)};
                         });
}

Tensor mean_axis(const Tensor& x, std::int64_t axis, bool keepdims) {
  axis = normalize_axis(x, axis, "mean_axis");
  return mul_scalar(sum_axis(x, axis, keepdims), 1.0 / static_cast<double>(x.dim(axis)));
}

Tensor max_axis_detached(const Tensor& x, std::int64_t axis, bool keepdims) {
  axis = normalize_axis(x, axis, "max_axis");
  Shape out_shape = x.shape();
  out_shape[axis] = 1;
  auto strides = row_major_strides(x.shape());
  std::int64_t block = strides[axis];
  std::int64_t len = x.dim(axis);
  std::int64_t outer = 1;
  for (std::int64_t i = 0; i < axis; ++i) outer *= x.shape()[i];
  std::vector<double> out(static_cast<std::size_t>(outer * block));
  for (std::int64_t o = 0; o < outer; ++o) {
    const double* src = x.data().data() + o * len * block;
    double* dst = out.data() + o * block;
    for (std::int64_t b = 0; b < block; ++b) {
      double m = src[b];
      for (std::int64_t l = 1; l < len; ++l) m = std::max(m, src[l * block + b]);
      dst[b] = m;
    }
  }
  if (!keepdims) out_shape.erase(out_shape.begin() + axis);
  return Tensor::from(std::move(out), out_shape, x.dtype());
}

std::vector<std::int64_t> argmax_axis(const Tensor& x, std::int64_t axis) {
  axis = normalize_axis(x, axis, "argmax_axis");
  auto strides = row_major_strides(x.shape());
  std::int64_t block = strides[axis];
  std::int64_t len = x.dim(axis);
  std::int64_t outer = 1;
  for (std::int64_t i = 0; i < axis; ++i) outer *= x.shape()[i];
  std::vector<std::int64_t> out(static_cast<std::size_t>(outer * block));
  for (std::int64_t o = 0; o < outer; ++o) {
    const double* src = x.data().data() + o * len * block;
    for (std::int64_t b = 0; b < block; ++b) {
      std::int64_t best = 0;
      double bv = src[b];
      // strict > keeps the smallest index on ties
      for (std::int64_t l = 1; l < len; ++l) {
        if (src[l * block + b] > bv) {
          bv = src[l * block + b];
          best = l;
        }
      }
      out[o * block + b] = best;
    }
  }
  return out;
}

Tensor euclidean_norm(const Tensor& x) { return sqrt(sum(square(x))); }

Tensor row_norms(const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("row_norms: expected rank 2, got " + shape_str(x.shape()));
  return sqrt(sum_axis(square(x), 1, false));
}

Tensor softmax(const Tensor& x, std::int64_t axis) {
  axis = normalize_axis(x, axis, "softmax");
  Tensor m = max_axis_detached(x, axis, true);
  Tensor e = exp(sub(x, m));
  Tensor s = sum_axis(e, axis, true);
  return div(e, s);
}

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_dtype(a, b, "matmul");
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("matmul: expected rank-2 operands, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }
  std::int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2) {
    throw DimensionError("matmul: inner dimensions differ (axis 1 of " + shape_str(a.shape()) +
                         " vs axis 0 of " + shape_str(b.shape()) + ")");
  }
  std::vector<double> out(static_cast<std::size_t>(m * n), 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t l = 0; l < k; ++l) {
      double av = pa[i * k + l];
      const double* brow = pb + l * n;
      double* orow = out.data() + i * n;
      for (std::int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return autodiff_result(std::move(out), {m, n}, a.dtype(), "matmul", {a, b},
                         [a, b](const Tensor& g) {
                           Tensor ga = matmul(g, transpose2d(b));
                           Tensor gb = matmul(transpose2d(a), g);
                           return std::vector<Tensor>{ga, gb};
                         });
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) {
    throw DimensionError("linear: weight must be rank 2, got " + shape_str(weight.shape()));
  }
  if (input.rank() < 1 || input.shape().back() != weight.dim(0)) {
    throw DimensionError("linear: trailing dimension of input " + shape_str(input.shape()) +
                         " does not match weight rows " + shape_str(weight.shape()));
  }
  std::int64_t c = weight.dim(0), k = weight.dim(1);
  std::int64_t lead = input.numel() / c;
  Tensor x2 = reshape(input, {lead, c});
  Tensor y2 = matmul(x2, weight);
  if (bias.defined()) {
    if (bias.rank() != 1 || bias.dim(0) != k) {
      throw DimensionError("linear: bias shape " + shape_str(bias.shape()) + " must be [" +
                           std::to_string(k) + "]");
    }
    y2 = add(y2, bias);
  }
  Shape out_shape = input.shape();
  out_shape.back() = k;
  return reshape(y2, out_shape);
}

// ---- row gather/scatter ----

Tensor take_rows(const Tensor& x, const std::vector<std::int64_t>& indices) {
  if (x.rank() != 2) throw DimensionError("take_rows: expected rank 2, got " + shape_str(x.shape()));
  std::int64_t rows = x.dim(0), c = x.dim(1);
  std::vector<double> out(indices.size() * static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::int64_t r = indices[i];
    if (r < 0 || r >= rows) {
      throw DimensionError("take_rows: index " + std::to_string(r) + " out of range [0," +
                           std::to_string(rows) + ")");
    }
    std::memcpy(out.data() + i * c, x.data().data() + r * c,
                static_cast<std::size_t>(c) * sizeof(double));
  }
  auto idx = indices;
  return autodiff_result(std::move(out), {static_cast<std::int64_t>(indices.size()), c}, x.dtype(),
                         "take_rows", {x}, [idx, rows](const Tensor& g) {
                           return std::vector<Tensor>{put_rows_accumulate(g, idx, rows)};
                         });
}

Tensor put_rows_accumulate(const Tensor& x, const std::vector<std::int64_t>& indices,
                           std::int64_t rows) {
  if (x.rank() != 2) {
    throw DimensionError("put_rows_accumulate: expected rank 2, got " + shape_str(x.shape()));
  }
  if (static_cast<std::int64_t>(indices.size()) != x.dim(0)) {
    throw DimensionError("put_rows_accumulate: index count does not match rows of " +
                         shape_str(x.shape()));
  }
  std::int64_t c = x.dim(1);
  std::vector<double> out(static_cast<std::size_t>(rows * c), 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::int64_t r = indices[i];
    if (r < 0 || r >= rows) {
      throw DimensionError("put_rows_accumulate: index " + std::to_string(r) +
                           " out of range [0," + std::to_string(rows) + ")");
    }
    const double* src = x.data().data() + i * c;
    double* dst = out.data() + r * c;
    for (std::int64_t j = 0; j < c; ++j) dst[j] += src[j];
  }
  auto idx = indices;
  return autodiff_result(std::move(out), {rows, c}, x.dtype(), "put_rows_accumulate", {x},
                         [idx](const Tensor& g) {
                           return std::vector<Tensor>{take_rows(g, idx)};
                         });
}

}  // namespace ndvad
