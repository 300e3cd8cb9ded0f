#pragma once

#include <cstdint>
#include <vector>

#include "ndvad/model.hpp"
#include "ndvad/scenesynth.hpp"

namespace ndvad::train {

struct SgdOpts {
  double lr = 1e-4;
  double momentum = 0.0;  // off by default
  int batch = 4;
  double clip_norm = 5.0;  // global gradient-norm cap; 0 disables
};

struct StepLog {
  int step;
  double total, frame, compact, diverse;
};

struct Result {
  ParamSet params;
  std::vector<StepLog> log;
};

// Plain SGD on windows sampled uniformly from the given clips, deterministic
// in seed. with_dpu selects frame-prediction-only pretraining vs the full
// objective.
Result run(const model::ModelConfig& cfg, ParamSet params,
           const std::vector<const scenesynth::VideoClip*>& clips, bool with_dpu, int steps,
           const SgdOpts& opts, std::uint64_t seed);

}  // namespace ndvad::train
