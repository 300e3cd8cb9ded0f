#pragma once

#include <cstdint>
#include <string>

#include "ndvad/tensor.hpp"

namespace ndvad::dpu {

// Relevance-score normalization for the retrieval step. Softmax keeps rows
// positive and summing to one; Raw is the literal ratio of dot products and
// hard-errors when a denominator degenerates.
enum class BetaMode { Softmax, Raw };

std::string to_string(BetaMode m);
BetaMode beta_mode_from_string(const std::string& s);

struct LossWeights {
  double lambda1 = 1.0;   // feature reconstruction weight
  double lambda2 = 0.01;  // diversity weight
  double gamma = 1.0;     // prototype margin
  double lambda_s = 1.0;  // score combination weight
  void validate() const;
};

// M bias-free attention vectors "dpu.psi.<m>", each of dimension c.
ParamSet init_attention(int prototypes, int channels, std::uint64_t seed, DType dtype);
int attention_param_count(const ParamSet& params);
// Stacks dpu.psi.* into an [M, c] matrix (in index order).
Tensor psi_matrix(const ParamSet& params);

// [c,h,w] map -> [h*w, c] rows and back.
Tensor encoding_rows(const Tensor& map);
Tensor rows_to_map(const Tensor& rows, std::int64_t c, std::int64_t h, std::int64_t w);

// Normalcy weights: w[n,m] = sigmoid(<x_n, psi_m>), all in (0,1).
Tensor attention(const Tensor& x_rows, const Tensor& psi);
// Prototypes as convex combinations of encoding rows under normalized weights.
Tensor ensemble(const Tensor& x_rows, const Tensor& weights);
// Reconstruction of each row from the prototype pool; returns (x_tilde, beta).
std::pair<Tensor, Tensor> retrieve(const Tensor& x_rows, const Tensor& prototypes, BetaMode mode);
// Channel-wise sum of the encoding and its normalcy reconstruction.
Tensor aggregate(const Tensor& x_rows, const Tensor& x_tilde);

struct ForwardOut {
  Tensor out_map;     // [c,h,w], same shape as the input map
  Tensor x_rows;      // [N,c]
  Tensor prototypes;  // [M,c]
  Tensor beta;        // [N,M]
  Tensor weights;     // [N,M] raw normalcy weights
};
ForwardOut forward(const Tensor& map, const ParamSet& psi_params, BetaMode mode);

// Mean distance from each row to its most relevant prototype; the argmax is
// constant under differentiation.
Tensor loss_compact(const Tensor& x_rows, const Tensor& prototypes, const Tensor& beta);
// Margin hinge over unordered prototype pairs; zero when M == 1.
Tensor loss_diverse(const Tensor& prototypes, double gamma);

struct TotalLoss {
  Tensor total, frame, compact, diverse;
};
TotalLoss loss_total(const Tensor& y_hat, const Tensor& y, const ForwardOut& fwd,
                     const LossWeights& w);

}  // namespace ndvad::dpu
