#include "ndvad/model.hpp"

#include "ndvad/ops.hpp"
#include "ndvad/rng.hpp"

namespace ndvad::model {

void ModelConfig::validate() const {
  ae.validate();
  loss.validate();
  if (prototypes < 1) throw ConfigError("dpu.prototypes must be >= 1");
}

ParamSet build_params(const ModelConfig& cfg, std::uint64_t seed, bool with_dpu) {
  cfg.validate();
  ParamSet p = backbone::build(cfg.ae, seed);
  if (with_dpu) {
    auto plug = cfg.ae.plug_shape();
    ParamSet psi = dpu::init_attention(cfg.prototypes, static_cast<int>(plug.channels),
                                       derive_seed(seed, "dpu"), cfg.ae.dtype);
    p.merge(psi);
  }
  return p;
}

SampleForward forward_sample(const ModelConfig& cfg, const ParamSet& params, const Tensor& x,
                             bool with_dpu) {
  Shape batched = x.shape();
  batched.insert(batched.begin(), 1);
  Tensor xb = reshape(x, batched);
  Tensor enc = backbone::forward_to_plug(xb, cfg.ae, params);
  SampleForward out;
  out.with_dpu = with_dpu;
  Tensor plug_out;
  if (with_dpu) {
    auto shape = cfg.ae.plug_shape();
    Tensor map = reshape(enc, {shape.channels, shape.height, shape.width});
    out.dpu_out = dpu::forward(map, params, cfg.beta_mode);
    plug_out = reshape(out.dpu_out.out_map, enc.shape());
  } else {
    plug_out = enc;
  }
  Tensor yb = backbone::forward_from_plug(plug_out, cfg.ae, params);
  Shape frame_shape(yb.shape().begin() + 1, yb.shape().end());
  out.y_hat = reshape(yb, frame_shape);
  return out;
}

BatchLoss batch_loss(const ModelConfig& cfg, const ParamSet& params,
                     const std::vector<Tensor>& xs, const std::vector<Tensor>& ys,
                     bool with_dpu) {
  if (xs.empty() || xs.size() != ys.size()) {
    throw ContractError("batch_loss: need equal, non-empty input/target lists");
  }
  Tensor xb = stack0(xs);
  Tensor yb = stack0(ys);
  Tensor enc = backbone::forward_to_plug(xb, cfg.ae, params);
  BatchLoss out;
  Tensor plug_out;
  if (with_dpu) {
    auto shape = cfg.ae.plug_shape();
    std::vector<Tensor> maps;
    Tensor compact_acc, diverse_acc;
    for (std::size_t b = 0; b < xs.size(); ++b) {
      Tensor map = reshape(narrow(enc, 0, static_cast<std::int64_t>(b), 1),
                           {shape.channels, shape.height, shape.width});
      dpu::ForwardOut f = dpu::forward(map, params, cfg.beta_mode);
      maps.push_back(f.out_map);
      Tensor c = dpu::loss_compact(f.x_rows, f.prototypes, f.beta);
      Tensor d = dpu::loss_diverse(f.prototypes, cfg.loss.gamma);
      compact_acc = compact_acc.defined() ? add(compact_acc, c) : c;
      diverse_acc = diverse_acc.defined() ? add(diverse_acc, d) : d;
    }
    plug_out = stack0(maps);
    out.compact = mul_scalar(compact_acc, 1.0 / static_cast<double>(xs.size()));
    out.diverse = mul_scalar(diverse_acc, 1.0 / static_cast<double>(xs.size()));
  } else {
    plug_out = enc;
  }
  Tensor y_hat = backbone::forward_from_plug(plug_out, cfg.ae, params);
  out.frame = mean(square(sub(y_hat, yb)));
  if (with_dpu) {
    Tensor fea = add(out.compact, mul_scalar(out.diverse, cfg.loss.lambda2));
    out.total = add(out.frame, mul_scalar(fea, cfg.loss.lambda1));
  } else {
    out.total = out.frame;
  }
  return out;
}

PairLossFn pair_loss_with_frozen_encoder(const ModelConfig& cfg, const ParamSet& encoder) {
  ParamSet frozen;
  for (const auto& [name, t] : encoder) {
    if (name.rfind("enc.", 0) == 0) frozen.emplace(name, t.detached(false));
  }
  return [cfg, frozen](const ParamSet& theta, const FramePair& pair) {
    ParamSet full = frozen;
    for (const auto& [name, t] : theta) full.emplace(name, t);
    BatchLoss l = batch_loss(cfg, full, {pair.x}, {pair.y}, true);
    return l.total;
  };
}

}  // namespace ndvad::model
