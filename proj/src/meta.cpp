#include "ndvad/meta.hpp"

#include <cmath>

#include "ndvad/autodiff.hpp"
#include "ndvad/ops.hpp"
#include "ndvad/rng.hpp"

namespace ndvad::meta {

std::string to_string(Mode m) { return m == Mode::Exact ? "exact" : "first_order"; }

Mode mode_from_string(const std::string& s) {
  if (s == "exact") return Mode::Exact;
  if (s == "first_order") return Mode::FirstOrder;
  throw ConfigError("unknown meta mode '" + s + "'");
}

void MetaConfig::validate() const {
  if (train_k < 1) throw ConfigError("meta.train_k must be >= 1");
  if (t_iter < 1) throw ConfigError("meta.t_iter must be >= 1");
  if (outer_lr_theta < 0 || outer_lr_alpha < 0) throw ConfigError("meta learning rates must be >= 0");
  if (episodes_per_batch < 1) throw ConfigError("meta.episodes_per_batch must be >= 1");
  if (alpha_max <= 0) throw ConfigError("meta.alpha_max must be > 0");
}

MetaState make_state(const ParamSet& full, const MetaConfig& cfg) {
  cfg.validate();
  MetaState s;
  for (const auto& [name, t] : full) {
    if (name.rfind("enc.", 0) == 0) {
      s.encoder.emplace(name, t.detached(false));
    } else {
      s.theta0.emplace(name, t.detached(true));
      s.alpha.emplace(name, Tensor::full(t.shape(), cfg.alpha_init, t.dtype(), true));
    }
  }
  if (s.theta0.empty()) throw ContractError("make_state: no target-model parameters found");
  return s;
}

ParamSet merged_params(const MetaState& state) {
  ParamSet p = state.encoder;
  for (const auto& [name, t] : state.theta0) p.emplace(name, t);
  return p;
}

namespace {

Tensor mean_pair_loss(const model::PairLossFn& loss, const ParamSet& theta,
                      const std::vector<model::FramePair>& pairs) {
  Tensor acc;
  for (const auto& pair : pairs) {
    Tensor l = loss(theta, pair);
    acc = acc.defined() ? add(acc, l) : l;
  }
  return mul_scalar(acc, 1.0 / static_cast<double>(pairs.size()));
}

}  // namespace

ParamSet inner_update(const MetaState& state, const model::PairLossFn& loss,
                      const std::vector<model::FramePair>& support, const MetaConfig& cfg) {
  if (support.empty()) throw DataError("inner_update: empty support set");
  ParamSet theta = state.theta0;
  for (int iter = 0; iter < cfg.t_iter; ++iter) {
    Tensor support_loss = mean_pair_loss(loss, theta, support);
    Gradients grads = backward(support_loss, /*create_graph=*/cfg.mode == Mode::Exact);
    ParamSet next;
    for (const auto& [name, p] : theta) {
      Tensor g = grads.of(p);
      if (!g.defined()) {
        next.emplace(name, p);
        continue;
      }
      if (!g.all_finite()) {
        throw NumericError("inner_update: non-finite gradient for parameter '" + name + "'");
      }
      if (cfg.mode == Mode::FirstOrder) g = g.detached(false);
      next.emplace(name, sub(p, mul(state.alpha.at(name), g)));
    }
    theta = std::move(next);
  }
  return theta;
}

MetaStepStats meta_step(MetaState& state, const model::PairLossFn& loss,
                        const std::vector<Episode>& episodes, const MetaConfig& cfg) {
  if (episodes.empty()) throw DataError("meta_step: empty episode batch");
  Tensor outer_acc;
  for (const auto& ep : episodes) {
    ParamSet adapted = inner_update(state, loss, ep.support, cfg);
    Tensor query_loss = mean_pair_loss(loss, adapted, ep.query);
    outer_acc = outer_acc.defined() ? add(outer_acc, query_loss) : query_loss;
  }
  Tensor outer = mul_scalar(outer_acc, 1.0 / static_cast<double>(episodes.size()));
  Gradients grads = backward(outer);

  MetaStepStats stats;
  stats.outer_loss = outer.item();

  ParamSet new_theta, new_alpha;
  for (const auto& [name, p] : state.theta0) {
    Tensor g = grads.of(p);
    if (!g.defined()) {
      new_theta.emplace(name, p);
    } else {
      if (!g.all_finite()) {
        throw NumericError("meta_step: non-finite outer gradient for '" + name + "'");
      }
      std::vector<double> d(p.data());
      for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] -= cfg.outer_lr_theta * g.at(static_cast<std::int64_t>(i));
      }
      new_theta.emplace(name, Tensor::from(std::move(d), p.shape(), p.dtype(), true));
    }
  }
  for (const auto& [name, a] : state.alpha) {
    Tensor g = grads.of(a);
    if (!g.defined()) {
      new_alpha.emplace(name, a);
      continue;
    }
    if (!g.all_finite()) {
      throw NumericError("meta_step: non-finite alpha gradient for '" + name + "'");
    }
    std::vector<double> d(a.data());
    for (std::size_t i = 0; i < d.size(); ++i) {
      double v = d[i] - cfg.outer_lr_alpha * g.at(static_cast<std::int64_t>(i));
      if (v > cfg.alpha_max) {
        v = cfg.alpha_max;
        ++stats.clamp_events;
      } else if (v < -cfg.alpha_max) {
        v = -cfg.alpha_max;
        ++stats.clamp_events;
      }
      d[i] = v;
    }
    new_alpha.emplace(name, Tensor::from(std::move(d), a.shape(), a.dtype(), true));
  }
  state.theta0 = std::move(new_theta);
  state.alpha = std::move(new_alpha);
  return stats;
}

Episode sample_episode(const scenesynth::VideoClip& clip, const std::string& scene_id, int k,
                       int t_in, std::uint64_t seed, DType dtype) {
  if (k < 1) throw DataError("sample_episode: k must be >= 1");
  int window = t_in + 1;
  int blocks = clip.frame_count() / window;
  if (blocks < 2 * k) {
    throw DataError("sample_episode: clip of " + std::to_string(clip.frame_count()) +
                    " frames cannot supply " + std::to_string(2 * k) +
                    " disjoint windows; need at least " + std::to_string(2 * k * window) +
                    " frames");
  }
  std::vector<int> order(blocks);
  for (int i = 0; i < blocks; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "episode"));
  rng.shuffle(order);

  Episode ep;
  ep.scene_id = scene_id;
  auto make_pair = [&](int block) {
    scenesynth::PairIndex pi{block * window, block * window + t_in};
    return model::FramePair{scenesynth::pair_input(clip, pi, t_in, dtype),
                            scenesynth::pair_target(clip, pi, dtype)};
  };
  for (int i = 0; i < k; ++i) ep.support.push_back(make_pair(order[i]));
  for (int i = k; i < 2 * k; ++i) ep.query.push_back(make_pair(order[i]));
  return ep;
}

ParamSet adapt(const MetaState& state, const model::PairLossFn& loss,
               const scenesynth::VideoClip& clip, int k, int t_in, const MetaConfig& cfg,
               DType dtype) {
  if (k == 0) {
    ParamSet out = state.theta0;
    return out;
  }
  int window = t_in + 1;
  if (k * window > clip.frame_count()) {
    throw DataError("adapt: need k*(t_in+1) = " + std::to_string(k * window) +
                    " leading frames, clip has " + std::to_string(clip.frame_count()));
  }
  std::vector<model::FramePair> support;
  for (int i = 0; i < k; ++i) {
    scenesynth::PairIndex pi{i * window, i * window + t_in};
    support.push_back(model::FramePair{scenesynth::pair_input(clip, pi, t_in, dtype),
                                       scenesynth::pair_target(clip, pi, dtype)});
  }
  ParamSet adapted = inner_update(state, loss, support, cfg);
  ParamSet out;
  for (const auto& [name, t] : adapted) out.emplace(name, t.detached(true));
  return out;
}

}  // namespace ndvad::meta
