#pragma once

#include <functional>
#include <vector>

#include "ndvad/backbone.hpp"
#include "ndvad/dpu.hpp"
#include "ndvad/tensor.hpp"

namespace ndvad::model {

struct ModelConfig {
  backbone::AEConfig ae;
  int prototypes = 10;
  dpu::BetaMode beta_mode = dpu::BetaMode::Softmax;
  dpu::LossWeights loss;
  void validate() const;
};

// Backbone parameters plus, when with_dpu, the attention vectors sized for
// the plug-spot channel count.
ParamSet build_params(const ModelConfig& cfg, std::uint64_t seed, bool with_dpu);

struct SampleForward {
  Tensor y_hat;             // [c0,h,w]
  dpu::ForwardOut dpu_out;  // only populated when the DPU ran
  bool with_dpu = false;
};
// x: [t_in*c0, h, w] single window.
SampleForward forward_sample(const ModelConfig& cfg, const ParamSet& params, const Tensor& x,
                             bool with_dpu);

struct BatchLoss {
  Tensor total, frame, compact, diverse;  // compact/diverse undefined without DPU
};
BatchLoss batch_loss(const ModelConfig& cfg, const ParamSet& params,
                     const std::vector<Tensor>& xs, const std::vector<Tensor>& ys, bool with_dpu);

// One frame pair; the loss closure consumed by the meta module.
struct FramePair {
  Tensor x, y;
};
using PairLossFn = std::function<Tensor(const ParamSet& theta, const FramePair&)>;

// Full-model pair loss with the encoder held fixed: theta supplies dec.* and
// dpu.*, the captured encoder supplies enc.*.
PairLossFn pair_loss_with_frozen_encoder(const ModelConfig& cfg, const ParamSet& encoder);

}  // namespace ndvad::model
