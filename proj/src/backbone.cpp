#include "ndvad/backbone.hpp"

#include <cmath>

#include "ndvad/ops.hpp"
#include "ndvad/rng.hpp"

namespace ndvad::backbone {

void AEConfig::validate() const {
  if (t_in < 1) throw ConfigError("backbone.t_in must be >= 1");
  if (frame_channels < 1) throw ConfigError("backbone.frame_channels must be >= 1");
  if (stage_channels.empty()) throw ConfigError("backbone.stage_channels must be non-empty");
  for (int c : stage_channels) {
    if (c < 1) throw ConfigError("backbone.stage_channels entries must be >= 1");
  }
  int div = 1 << n_stages();
  if (height % div != 0 || width % div != 0) {
    throw ConfigError("backbone.frame_size " + std::to_string(height) + "x" +
                      std::to_string(width) + " must be divisible by 2^stages = " +
                      std::to_string(div));
  }
  if (height / div < 1 || width / div < 1) {
    throw ConfigError("backbone.frame_size too small for " + std::to_string(n_stages()) +
                      " stages");
  }
  if (plug_stage < 1 || plug_stage > n_stages() + 1) {
    throw ConfigError("backbone.plug_stage must lie in [1, " + std::to_string(n_stages() + 1) +
                      "]");
  }
}

AEConfig::PlugShape AEConfig::plug_shape(int stage) const {
  // stage 1 = encoder output; each further stage undoes one downsampling
  int ups_applied = stage - 1;
  int div = 1 << (n_stages() - ups_applied);
  std::int64_t ch = ups_applied == n_stages()
                        ? stage_channels.front()
                        : stage_channels[n_stages() - 1 - ups_applied];
  return {ch, height / div, width / div};
}

AEConfig::PlugShape AEConfig::plug_shape() const { return plug_shape(plug_stage); }

namespace {

Tensor init_conv(Shape shape, std::int64_t fan_in, std::uint64_t seed, DType dtype) {
  Rng rng(seed);
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> d(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : d) v = rng.uniform(-bound, bound);
  return Tensor::from(std::move(d), std::move(shape), dtype, true);
}

}  // namespace

ParamSet build(const AEConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamSet p;
  int n = cfg.n_stages();
  int in_c = cfg.input_channels();
  for (int i = 0; i < n; ++i) {
    int out_c = cfg.stage_channels[i];
    std::string name = "enc.conv" + std::to_string(i + 1);
    std::int64_t fan_in = static_cast<std::int64_t>(in_c) * 9;
    p.emplace(name + ".w", init_conv({out_c, in_c, 3, 3}, fan_in, derive_seed(seed, name),
                                     cfg.dtype));
    p.emplace(name + ".b",
              init_conv({out_c}, fan_in, derive_seed(seed, name + ".b"), cfg.dtype));
    in_c = out_c;
  }
  // up-stages: up1 is the deepest; the last one keeps stage_channels[0]
  for (int i = 0; i < n; ++i) {
    int cin = cfg.stage_channels[n - 1 - i];
    int cout = i == n - 1 ? cfg.stage_channels.front() : cfg.stage_channels[n - 2 - i];
    std::string name = "dec.up" + std::to_string(i + 1);
    std::int64_t fan_in = static_cast<std::int64_t>(cin) * 9;
    p.emplace(name + ".w", init_conv({cin, cout, 3, 3}, fan_in, derive_seed(seed, name),
                                     cfg.dtype));
    p.emplace(name + ".b",
              init_conv({cout}, fan_in, derive_seed(seed, name + ".b"), cfg.dtype));
  }
  std::int64_t out_fan = static_cast<std::int64_t>(cfg.stage_channels.front()) * 9;
  p.emplace("dec.out.w", init_conv({cfg.frame_channels, cfg.stage_channels.front(), 3, 3},
                                   out_fan, derive_seed(seed, "dec.out"), cfg.dtype));
  p.emplace("dec.out.b",
            init_conv({cfg.frame_channels}, out_fan, derive_seed(seed, "dec.out.b"), cfg.dtype));
  return p;
}

namespace {

const Tensor& param(const ParamSet& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw ContractError("missing parameter '" + name + "'");
  return it->second;
}

Tensor bias_add_nchw(const Tensor& x, const Tensor& b) {
  // [B,C,H,W] + [C] -> broadcast over batch and space
  return add(x, reshape(b, {1, b.dim(0), 1, 1}));
}

Tensor up_stage(const Tensor& x, const ParamSet& params, const std::string& name) {
  Tensor y = conv_transpose2d(x, param(params, name + ".w"), 2, 1, 1);
  return relu(bias_add_nchw(y, param(params, name + ".b")));
}

}  // namespace

Tensor forward_to_plug(const Tensor& x, const AEConfig& cfg, const ParamSet& params) {
  if (x.rank() != 4) {
    throw DimensionError("backbone input must be [B, t_in*c, h, w], got " + shape_str(x.shape()));
  }
  if (x.dim(1) != cfg.input_channels() || x.dim(2) != cfg.height || x.dim(3) != cfg.width) {
    throw DimensionError("backbone input " + shape_str(x.shape()) + " does not match config [" +
                         std::to_string(cfg.input_channels()) + "," + std::to_string(cfg.height) +
                         "," + std::to_string(cfg.width) + "]");
  }
  Tensor h = x;
  for (int i = 0; i < cfg.n_stages(); ++i) {
    std::string name = "enc.conv" + std::to_string(i + 1);
    h = relu(bias_add_nchw(conv2d(h, param(params, name + ".w"), 2, 1),
                           param(params, name + ".b")));
  }
  for (int i = 0; i < cfg.plug_stage - 1; ++i) {
    h = up_stage(h, params, "dec.up" + std::to_string(i + 1));
  }
  return h;
}

Tensor forward_from_plug(const Tensor& enc, const AEConfig& cfg, const ParamSet& params) {
  auto want = cfg.plug_shape();
  if (enc.rank() != 4 || enc.dim(1) != want.channels || enc.dim(2) != want.height ||
      enc.dim(3) != want.width) {
    throw DimensionError("plug-spot encoding " + shape_str(enc.shape()) +
                         " does not match expected [B," + std::to_string(want.channels) + "," +
                         std::to_string(want.height) + "," + std::to_string(want.width) + "]");
  }
  Tensor h = enc;
  for (int i = cfg.plug_stage - 1; i < cfg.n_stages(); ++i) {
    h = up_stage(h, params, "dec.up" + std::to_string(i + 1));
  }
  h = bias_add_nchw(conv2d(h, param(params, "dec.out.w"), 1, 1), param(params, "dec.out.b"));
  return tanh(h);
}

Tensor forward(const Tensor& x, const AEConfig& cfg, const ParamSet& params) {
  return forward_from_plug(forward_to_plug(x, cfg, params), cfg, params);
}

}  // namespace ndvad::backbone
