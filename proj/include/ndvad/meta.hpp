#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ndvad/model.hpp"
#include "ndvad/scenesynth.hpp"
#include "ndvad/tensor.hpp"

namespace ndvad::meta {

enum class Mode { Exact, FirstOrder };
std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct MetaConfig {
  int train_k = 5;   // shots per episode during meta-training
  int t_iter = 1;    // inner iterations
  Mode mode = Mode::Exact;
  double outer_lr_theta = 1e-5;
  double outer_lr_alpha = 1e-5;
  int episodes_per_batch = 10;
  double alpha_init = 1e-4;
  double alpha_max = 1.0;
  void validate() const;
};

// Target-model initialization (dec.* and dpu.*), learned per-parameter step
// sizes of identical shape, and the frozen encoder.
struct MetaState {
  ParamSet theta0;
  ParamSet alpha;
  ParamSet encoder;
};

// Splits a full parameter set by name prefix and initializes alpha to the
// configured constant.
MetaState make_state(const ParamSet& full, const MetaConfig& cfg);
ParamSet merged_params(const MetaState& state);  // theta0 + encoder

struct Episode {
  std::string scene_id;
  std::vector<model::FramePair> support;
  std::vector<model::FramePair> query;
};

// theta_hat after t_iter steps of theta <- theta - alpha (.) grad(mean support
// loss). Exact mode keeps the computation differentiable w.r.t. theta0 and
// alpha; FirstOrder detaches the inner gradient.
ParamSet inner_update(const MetaState& state, const model::PairLossFn& loss,
                      const std::vector<model::FramePair>& support, const MetaConfig& cfg);

struct MetaStepStats {
  double outer_loss = 0.0;
  int clamp_events = 0;
};
// One outer step over an episode batch; updates theta0 and alpha in place,
// never touches the encoder.
MetaStepStats meta_step(MetaState& state, const model::PairLossFn& loss,
                        const std::vector<Episode>& episodes, const MetaConfig& cfg);

// 2K disjoint windows (K support + K query) drawn from non-overlapping blocks
// of the clip, deterministic in seed.
Episode sample_episode(const scenesynth::VideoClip& clip, const std::string& scene_id, int k,
                       int t_in, std::uint64_t seed, DType dtype);

// Support pairs from the first k*(t_in+1) frames of the clip, then t_iter
// inner updates; k = 0 returns theta0 unchanged. The result is detached.
ParamSet adapt(const MetaState& state, const model::PairLossFn& loss,
               const scenesynth::VideoClip& clip, int k, int t_in, const MetaConfig& cfg,
               DType dtype);

}  // namespace ndvad::meta
