#include <vector>

#include "ndvad/ops.hpp"

// Direct convolution, expressed through three mutually adjoint primitives so
// that every backward pass is again a recorded op and gradients of gradients
// fall out of the same machinery:
//   corr(x, k)        cross-correlation, kernel [A,B,kh,kw] contracting B
//   scatter(x, k)     its adjoint w.r.t. x (transposed convolution)
//   outer(g, xin)     its adjoint w.r.t. k
namespace ndvad {

namespace {

struct ConvDims {
  std::int64_t n, a, b;       // batch, out channels (A), contracted channels (B)
  std::int64_t h, w;          // spatial dims of the corr input / scatter output
  std::int64_t oh, ow;        // spatial dims of the corr output / scatter input
  std::int64_t kh, kw;
  std::int64_t stride, pad;
};

Tensor conv_corr(const Tensor& x, const Tensor& k, std::int64_t stride, std::int64_t pad);
Tensor conv_scatter(const Tensor& x, const Tensor& k, std::int64_t stride, std::int64_t pad,
                    std::int64_t out_h, std::int64_t out_w);
Tensor conv_outer(const Tensor& g, const Tensor& xin, std::int64_t stride, std::int64_t pad,
                  std::int64_t kh, std::int64_t kw);

// y[n,A,i,j] = sum_{B,a,b} x[n,B,i*s-p+a, j*s-p+b] * k[A,B,a,b]
Tensor conv_corr(const Tensor& x, const Tensor& k, std::int64_t stride, std::int64_t pad) {
  ConvDims d;
  d.n = x.dim(0);
  d.b = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.a = k.dim(0);
  d.kh = k.dim(2);
  d.kw = k.dim(3);
  d.stride = stride;
  d.pad = pad;
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(d.n * d.a * d.oh * d.ow), 0.0);
  const double* px = x.data().data();
  const double* pk = k.data().data();
  for (std::int64_t n = 0; n < d.n; ++n) {
    for (std::int64_t a = 0; a < d.a; ++a) {
      double* yplane = out.data() + (n * d.a + a) * d.oh * d.ow;
      for (std::int64_t b = 0; b < d.b; ++b) {
        const double* xplane = px + (n * d.b + b) * d.h * d.w;
        const double* kplane = pk + (a * d.b + b) * d.kh * d.kw;
        for (std::int64_t i = 0; i < d.oh; ++i) {
          for (std::int64_t j = 0; j < d.ow; ++j) {
            double acc = 0.0;
            std::int64_t u0 = i * stride - pad;
            std::int64_t v0 = j * stride - pad;
            for (std::int64_t ka = 0; ka < d.kh; ++ka) {
              std::int64_t u = u0 + ka;
              if (u < 0 || u >= d.h) continue;
              for (std::int64_t kb = 0; kb < d.kw; ++kb) {
                std::int64_t v = v0 + kb;
                if (v < 0 || v >= d.w) continue;
                acc += xplane[u * d.w + v] * kplane[ka * d.kw + kb];
              }
            }
            yplane[i * d.ow + j] += acc;
          }
        }
      }
    }
  }
  std::int64_t h = d.h, w = d.w, kh = d.kh, kw = d.kw;
  return autodiff_result(std::move(out), {d.n, d.a, d.oh, d.ow}, x.dtype(), "conv_corr", {x, k},
                         [x, k, stride, pad, h, w, kh, kw](const Tensor& g) {
                           Tensor gx = conv_scatter(g, k, stride, pad, h, w);
                           Tensor gk = conv_outer(g, x, stride, pad, kh, kw);
                           return std::vector<Tensor>{gx, gk};
                         });
}

// y[n,B,u,v] += x[n,A,i,j] * k[A,B,a,b]  with u=i*s-p+a, v=j*s-p+b
Tensor conv_scatter(const Tensor& x, const Tensor& k, std::int64_t stride, std::int64_t pad,
                    std::int64_t out_h, std::int64_t out_w) {
  std::int64_t n_ = x.dim(0), a_ = x.dim(1), ih = x.dim(2), iw = x.dim(3);
  std::int64_t bc = k.dim(1), kh = k.dim(2), kw = k.dim(3);
  std::vector<double> out(static_cast<std::size_t>(n_ * bc * out_h * out_w), 0.0);
  const double* px = x.data().data();
  const double* pk = k.data().data();
  for (std::int64_t n = 0; n < n_; ++n) {
    for (std::int64_t a = 0; a < a_; ++a) {
      const double* xplane = px + (n * a_ + a) * ih * iw;
      for (std::int64_t b = 0; b < bc; ++b) {
        double* yplane = out.data() + (n * bc + b) * out_h * out_w;
        const double* kplane = pk + (a * bc + b) * kh * kw;
        for (std::int64_t i = 0; i < ih; ++i) {
          for (std::int64_t j = 0; j < iw; ++j) {
            double xv = xplane[i * iw + j];
            if (xv == 0.0) continue;
            std::int64_t u0 = i * stride - pad;
            std::int64_t v0 = j * stride - pad;
            for (std::int64_t ka = 0; ka < kh; ++ka) {
              std::int64_t u = u0 + ka;
              if (u < 0 || u >= out_h) continue;
              for (std::int64_t kb = 0; kb < kw; ++kb) {
                std::int64_t v = v0 + kb;
                if (v < 0 || v >= out_w) continue;
                yplane[u * out_w + v] += xv * kplane[ka * kw + kb];
              }
            }
          }
        }
      }
    }
  }
  return autodiff_result(std::move(out), {n_, bc, out_h, out_w}, x.dtype(), "conv_scatter",
                         {x, k}, [x, k, stride, pad, kh, kw](const Tensor& g) {
                           Tensor gx = conv_corr(g, k, stride, pad);
                           Tensor gk = conv_outer(x, g, stride, pad, kh, kw);
                           return std::vector<Tensor>{gx, gk};
                         });
}

// K[A,B,a,b] = sum_{n,i,j} g[n,A,i,j] * xin[n,B,i*s-p+a, j*s-p+b]
Tensor conv_outer(const Tensor& g, const Tensor& xin, std::int64_t stride, std::int64_t pad,
                  std::int64_t kh, std::int64_t kw) {
  std::int64_t n_ = g.dim(0), a_ = g.dim(1), oh = g.dim(2), ow = g.dim(3);
  std::int64_t b_ = xin.dim(1), h = xin.dim(2), w = xin.dim(3);
  std::vector<double> out(static_cast<std::size_t>(a_ * b_ * kh * kw), 0.0);
  const double* pg = g.data().data();
  const double* px = xin.data().data();
  for (std::int64_t n = 0; n < n_; ++n) {
    for (std::int64_t a = 0; a < a_; ++a) {
      const double* gplane = pg + (n * a_ + a) * oh * ow;
      for (std::int64_t b = 0; b < b_; ++b) {
        const double* xplane = px + (n * b_ + b) * h * w;
        double* kplane = out.data() + (a * b_ + b) * kh * kw;
        for (std::int64_t i = 0; i < oh; ++i) {
          for (std::int64_t j = 0; j < ow; ++j) {
            double gv = gplane[i * ow + j];
            if (gv == 0.0) continue;
            std::int64_t u0 = i * stride - pad;
            std::int64_t v0 = j * stride - pad;
            for (std::int64_t ka = 0; ka < kh; ++ka) {
              std::int64_t u = u0 + ka;
              if (u < 0 || u >= h) continue;
              for (std::int64_t kb = 0; kb < kw; ++kb) {
                std::int64_t v = v0 + kb;
                if (v < 0 || v >= w) continue;
                kplane[ka * kw + kb] += gv * xplane[u * w + v];
              }
            }
          }
        }
      }
    }
  }
  std::int64_t out_h = h, out_w = w;
  return autodiff_result(std::move(out), {a_, b_, kh, kw}, g.dtype(), "conv_outer", {g, xin},
                         [g, xin, stride, pad, out_h, out_w](const Tensor& gk) {
                           Tensor gg = conv_corr(xin, gk, stride, pad);
                           Tensor gxin = conv_scatter(g, gk, stride, pad, out_h, out_w);
                           return std::vector<Tensor>{gg, gxin};
                         });
}

void check_conv_args(const Tensor& input, const Tensor& kernel, std::int64_t stride,
                     std::int64_t pad, const char* op) {
  if (input.rank() != 4 || kernel.rank() != 4) {
    throw DimensionError(std::string(op) + ": expected rank-4 input and kernel, got " +
                         shape_str(input.shape()) + " and " + shape_str(kernel.shape()));
  }
  if (input.dtype() != kernel.dtype()) {
    throw ContractError(std::string(op) + ": dtype mismatch");
  }
  if (stride < 1) throw ContractError(std::string(op) + ": stride must be >= 1");
  if (pad < 0) throw ContractError(std::string(op) + ": pad must be >= 0");
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::int64_t stride, std::int64_t pad) {
  check_conv_args(input, kernel, stride, pad, "conv2d");
  if (input.dim(1) != kernel.dim(1)) {
    throw DimensionError("conv2d: input channels " + std::to_string(input.dim(1)) +
                         " (axis 1) != kernel input channels " + std::to_string(kernel.dim(1)) +
                         " (axis 1)");
  }
  std::int64_t h = input.dim(2), w = input.dim(3), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kh > h + 2 * pad || kw > w + 2 * pad) {
    throw DimensionError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                         " exceeds padded input " + std::to_string(h + 2 * pad) + "x" +
                         std::to_string(w + 2 * pad) + " (axes 2,3)");
  }
  return conv_corr(input, kernel, stride, pad);
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, std::int64_t stride,
                        std::int64_t pad, std::int64_t out_pad) {
  check_conv_args(input, kernel, stride, pad, "conv_transpose2d");
  if (input.dim(1) != kernel.dim(0)) {
    throw DimensionError("conv_transpose2d: input channels " + std::to_string(input.dim(1)) +
                         " (axis 1) != kernel input channels " + std::to_string(kernel.dim(0)) +
                         " (axis 0)");
  }
  if (out_pad < 0 || out_pad >= stride) {
    throw ContractError("conv_transpose2d: out_pad must lie in [0, stride)");
  }
  std::int64_t h = input.dim(2), w = input.dim(3), kh = kernel.dim(2), kw = kernel.dim(3);
  std::int64_t out_h = (h - 1) * stride - 2 * pad + kh + out_pad;
  std::int64_t out_w = (w - 1) * stride - 2 * pad + kw + out_pad;
  if (out_h < 1 || out_w < 1) {
    throw DimensionError("conv_transpose2d: non-positive output size " + std::to_string(out_h) +
                         "x" + std::to_string(out_w));
  }
  return conv_scatter(input, kernel, stride, pad, out_h, out_w);
}

}  // namespace ndvad
