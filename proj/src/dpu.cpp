#include "ndvad/dpu.hpp"

#include <cmath>

#include "ndvad/ops.hpp"
#include "ndvad/rng.hpp"

namespace ndvad::dpu {

std::string to_string(BetaMode m) { return m == BetaMode::Softmax ? "softmax" : "raw"; }

BetaMode beta_mode_from_string(const std::string& s) {
  if (s == "softmax") return BetaMode::Softmax;
  if (s == "raw") return BetaMode::Raw;
  throw ConfigError("unknown beta mode '" + s + "'");
}

void LossWeights::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || gamma < 0 || lambda_s < 0) {
    throw ConfigError("loss weights must be >= 0");
  }
}

ParamSet init_attention(int prototypes, int channels, std::uint64_t seed, DType dtype) {
  if (prototypes < 1) throw ConfigError("dpu.prototypes must be >= 1");
  if (channels < 1) throw ConfigError("dpu attention channel count must be >= 1");
  ParamSet p;
  double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  for (int m = 0; m < prototypes; ++m) {
    Rng rng(derive_seed(seed, "dpu.psi", static_cast<std::uint64_t>(m)));
    std::vector<double> d(static_cast<std::size_t>(channels));
    for (auto& v : d) v = rng.uniform(-bound, bound);
    p.emplace("dpu.psi." + std::to_string(m),
              Tensor::from(std::move(d), {channels}, dtype, true));
  }
  return p;
}

int attention_param_count(const ParamSet& params) {
  int n = 0;
  for (const auto& [name, t] : params) {
    if (name.rfind("dpu.psi.", 0) == 0) n += static_cast<int>(t.numel());
  }
  return n;
}

Tensor psi_matrix(const ParamSet& params) {
  std::vector<Tensor> rows;
  for (int m = 0;; ++m) {
    auto it = params.find("dpu.psi." + std::to_string(m));
    if (it == params.end()) break;
    rows.push_back(reshape(it->second, {1, it->second.numel()}));
  }
  if (rows.empty()) throw ContractError("no dpu.psi.* parameters present");
  return concat(rows, 0);
}

Tensor encoding_rows(const Tensor& map) {
  if (map.rank() != 3) {
    throw DimensionError("encoding map must be [c,h,w], got " + shape_str(map.shape()));
  }
  std::int64_t c = map.dim(0), h = map.dim(1), w = map.dim(2);
  return transpose2d(reshape(map, {c, h * w}));  // [N, c]
}

Tensor rows_to_map(const Tensor& rows, std::int64_t c, std::int64_t h, std::int64_t w) {
  return reshape(transpose2d(rows), {c, h, w});
}

Tensor attention(const Tensor& x_rows, const Tensor& psi) {
  if (x_rows.rank() != 2 || psi.rank() != 2) {
    throw DimensionError("attention expects [N,c] rows and [M,c] psi");
  }
  if (x_rows.dim(1) != psi.dim(1)) {
    throw DimensionError("attention: channel dim " + std::to_string(x_rows.dim(1)) +
                         " != psi dim " + std::to_string(psi.dim(1)));
  }
  return sigmoid(matmul(x_rows, transpose2d(psi)));  // [N, M]
}

Tensor ensemble(const Tensor& x_rows, const Tensor& weights) {
  if (weights.rank() != 2 || weights.dim(0) != x_rows.dim(0)) {
    throw DimensionError("ensemble: weights must be [N,M] matching x rows");
  }
  Tensor col_sums = sum_axis(weights, 0, true);  // [1,M]
  for (std::int64_t m = 0; m < col_sums.numel(); ++m) {
    if (!(col_sums.at(m) > 0.0)) {
      throw NumericError("ensemble: degenerate weights, map " + std::to_string(m) +
                         " sums to " + std::to_string(col_sums.at(m)));
    }
  }
  Tensor normalized = div(weights, col_sums);          // columns sum to 1
  return matmul(transpose2d(normalized), x_rows);      // [M, c]
}

std::pair<Tensor, Tensor> retrieve(const Tensor& x_rows, const Tensor& prototypes,
                                   BetaMode mode) {
  Tensor logits = matmul(x_rows, transpose2d(prototypes));  // [N, M]
  Tensor beta;
  if (mode == BetaMode::Softmax) {
    beta = softmax(logits, 1);
  } else {
    Tensor denom = sum_axis(logits, 1, true);  // [N,1]
    for (std::int64_t n = 0; n < denom.numel(); ++n) {
      if (std::abs(denom.at(n)) < 1e-8) {
        throw NumericError("retrieve: degenerate raw-mode denominator at location " +
                           std::to_string(n));
      }
    }
    beta = div(logits, denom);
  }
  return {matmul(beta, prototypes), beta};
}

Tensor aggregate(const Tensor& x_rows, const Tensor& x_tilde) {
  if (x_rows.shape() != x_tilde.shape()) {
    throw DimensionError("aggregate: shape mismatch " + shape_str(x_rows.shape()) + " vs " +
                         shape_str(x_tilde.shape()));
  }
  return add(x_rows, x_tilde);
}

ForwardOut forward(const Tensor& map, const ParamSet& psi_params, BetaMode mode) {
  std::int64_t c = map.dim(0), h = map.dim(1), w = map.dim(2);
  ForwardOut out;
  out.x_rows = encoding_rows(map);
  Tensor psi = psi_matrix(psi_params);
  out.weights = attention(out.x_rows, psi);
  out.prototypes = ensemble(out.x_rows, out.weights);
  auto [x_tilde, beta] = retrieve(out.x_rows, out.prototypes, mode);
  out.beta = beta;
  out.out_map = rows_to_map(aggregate(out.x_rows, x_tilde), c, h, w);
  return out;
}

Tensor loss_compact(const Tensor& x_rows, const Tensor& prototypes, const Tensor& beta) {
  auto idx = argmax_axis(beta, 1);
  Tensor selected = take_rows(prototypes, idx);
  return mean(row_norms(sub(x_rows, selected)));
}

Tensor loss_diverse(const Tensor& prototypes, double gamma) {
  std::int64_t m = prototypes.dim(0);
  if (m == 1) return Tensor::zeros({}, prototypes.dtype());
  Tensor acc;
  for (std::int64_t i = 0; i < m; ++i) {
    Tensor pi = narrow(prototypes, 0, i, 1);
    for (std::int64_t j = i + 1; j < m; ++j) {
      Tensor pj = narrow(prototypes, 0, j, 1);
      Tensor dist = euclidean_norm(sub(pi, pj));
      Tensor hinge = relu(rsub_scalar(dist, gamma));
      acc = acc.defined() ? add(acc, hinge) : hinge;
    }
  }
  double pairs = static_cast<double>(m * (m - 1) / 2);
  return mul_scalar(acc, 1.0 / pairs);
}

TotalLoss loss_total(const Tensor& y_hat, const Tensor& y, const ForwardOut& fwd,
                     const LossWeights& w) {
  if (y_hat.shape() != y.shape()) {
    throw DimensionError("loss_total: prediction " + shape_str(y_hat.shape()) +
                         " vs target " + shape_str(y.shape()));
  }
  TotalLoss out;
  out.frame = mean(square(sub(y_hat, y)));
  out.compact = loss_compact(fwd.x_rows, fwd.prototypes, fwd.beta);
  out.diverse = loss_diverse(fwd.prototypes, w.gamma);
  Tensor fea = add(out.compact, mul_scalar(out.diverse, w.lambda2));
  out.total = add(out.frame, mul_scalar(fea, w.lambda1));
  return out;
}

}  // namespace ndvad::dpu
