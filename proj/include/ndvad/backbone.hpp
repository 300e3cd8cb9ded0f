#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ndvad/tensor.hpp"

namespace ndvad::backbone {

// Convolutional frame-prediction autoencoder. The encoder downsamples by 2
// per stage; the decoder mirrors it with transposed convolutions and ends in
// a stride-1 conv + tanh. plug_stage selects the decoder feature map the
// prototype unit is inserted at, indexed from the deepest point:
//   1             -> encoder output (1/2^n resolution)
//   k             -> after k-1 up-stages
//   n_stages + 1  -> full-resolution map feeding the output conv
struct AEConfig {
  int t_in = 4;
  int height = 64;
  int width = 64;
  int frame_channels = 1;
  std::vector<int> stage_channels = {16, 32, 64};
  int plug_stage = 3;
  DType dtype = DType::F32;

  void validate() const;
  int n_stages() const { return static_cast<int>(stage_channels.size()); }
  int input_channels() const { return t_in * frame_channels; }

  struct PlugShape {
    std::int64_t channels, height, width;
  };
  PlugShape plug_shape() const;          // at plug_stage
  PlugShape plug_shape(int stage) const; // at an arbitrary plug point
};

// Deterministic fan-in-scaled uniform initialization; parameter names live
// under "enc." and "dec.".
ParamSet build(const AEConfig& cfg, std::uint64_t seed);

// x: [B, t_in*frame_channels, h, w] -> encoding map at the plug spot
Tensor forward_to_plug(const Tensor& x, const AEConfig& cfg, const ParamSet& params);
// encoding map (same shape as the plug spot) -> predicted frame in [-1,1]
Tensor forward_from_plug(const Tensor& enc, const AEConfig& cfg, const ParamSet& params);
// plain autoencoder pass (no prototype unit)
Tensor forward(const Tensor& x, const AEConfig& cfg, const ParamSet& params);

}  // namespace ndvad::backbone
