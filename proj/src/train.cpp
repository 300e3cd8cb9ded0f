#include "ndvad/train.hpp"

#include <cmath>

#include "ndvad/autodiff.hpp"
#include "ndvad/ops.hpp"
#include "ndvad/rng.hpp"

namespace ndvad::train {

Result run(const model::ModelConfig& cfg, ParamSet params,
           const std::vector<const scenesynth::VideoClip*>& clips, bool with_dpu, int steps,
           const SgdOpts& opts, std::uint64_t seed) {
  if (clips.empty()) throw DataError("train: empty dataset");
  if (opts.batch < 1) throw ConfigError("train.batch must be >= 1");
  if (opts.lr < 0) throw ConfigError("train.lr must be >= 0");
  int t_in = cfg.ae.t_in;
  for (const auto* c : clips) {
    if (c->frame_count() <= t_in) {
      throw DataError("train: clip too short for t_in = " + std::to_string(t_in));
    }
  }

  Result res;
  res.params = std::move(params);
  std::map<std::string, std::vector<double>> velocity;

  for (int step = 0; step < steps; ++step) {
    Rng rng(derive_seed(seed, "train-step", static_cast<std::uint64_t>(step)));
    std::vector<Tensor> xs, ys;
    for (int b = 0; b < opts.batch; ++b) {
      int ci = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(clips.size()) - 1));
      const auto& clip = *clips[ci];
      int start = static_cast<int>(rng.uniform_int(0, clip.frame_count() - t_in - 1));
      scenesynth::PairIndex pi{start, start + t_in};
      xs.push_back(scenesynth::pair_input(clip, pi, t_in, cfg.ae.dtype));
      ys.push_back(scenesynth::pair_target(clip, pi, cfg.ae.dtype));
    }

    Tape tape;
    model::BatchLoss loss = model::batch_loss(cfg, res.params, xs, ys, with_dpu);
    if (!loss.total.all_finite()) {
      throw NumericError("train: non-finite loss at step " + std::to_string(step));
    }
    Gradients grads = tape.backward(loss.total);

    {
      NoGradGuard no_grad;
      double scale = 1.0;
      if (opts.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& [name, p] : res.params) {
          Tensor g = grads.of(p);
          if (!g.defined()) continue;
          for (double v : g.data()) sq += v * v;
        }
        double norm = std::sqrt(sq);
        if (norm > opts.clip_norm) scale = opts.clip_norm / norm;
      }
      ParamSet next;
      for (const auto& [name, p] : res.params) {
        Tensor g = grads.of(p);
        if (!g.defined()) {
          next.emplace(name, p);
          continue;
        }
        if (!g.all_finite()) {
          throw NumericError("train: non-finite gradient for '" + name + "' at step " +
                             std::to_string(step));
        }
        if (scale != 1.0) g = mul_scalar(g, scale);
        std::vector<double> d = p.data();
        if (opts.momentum > 0.0) {
          auto& v = velocity[name];
          if (v.empty()) v.assign(d.size(), 0.0);
          for (std::size_t i = 0; i < d.size(); ++i) {
            v[i] = opts.momentum * v[i] + g.at(static_cast<std::int64_t>(i));
            d[i] -= opts.lr * v[i];
          }
        } else {
          for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] -= opts.lr * g.at(static_cast<std::int64_t>(i));
          }
        }
        next.emplace(name, Tensor::from(std::move(d), p.shape(), p.dtype(), true));
      }
      res.params = std::move(next);
    }

    StepLog entry;
    entry.step = step;
    entry.total = loss.total.item();
    entry.frame = loss.frame.item();
    entry.compact = loss.compact.defined() ? loss.compact.item() : 0.0;
    entry.diverse = loss.diverse.defined() ? loss.diverse.item() : 0.0;
    res.log.push_back(entry);
  }
  return res;
}

}  // namespace ndvad::train
