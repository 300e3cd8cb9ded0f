#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "ndvad/gradcheck.hpp"
#include "ndvad/meta.hpp"
#include "ndvad/ops.hpp"
#include "oracles.hpp"

using namespace ndvad;
using namespace ndvad::meta;

namespace {

// 1-parameter toy: L(theta) = (theta - 5)^2, independent of the data pair.
model::PairLossFn toy_loss() {
  return [](const ParamSet& theta, const model::FramePair&) {
    return sum(square(sub_scalar(theta.at("w"), 5.0)));
  };
}

MetaState toy_state(double w0, double alpha) {
  MetaState s;
  s.theta0.emplace("w", Tensor::scalar(w0, DType::F64, true));
  s.alpha.emplace("w", Tensor::scalar(alpha, DType::F64, true));
  return s;
}

model::FramePair dummy_pair() { return model::FramePair{Tensor(), Tensor()}; }

MetaConfig exact_cfg(int t_iter = 1) {
  MetaConfig cfg;
  cfg.t_iter = t_iter;
  cfg.mode = Mode::Exact;
  return cfg;
}

}  // namespace

TEST_CASE("inner update on the closed-form toy: 1.8 after one step, 2.44 after two") {
  MetaState s = toy_state(1.0, 0.1);
  ParamSet one = inner_update(s, toy_loss(), {dummy_pair()}, exact_cfg(1));
  CHECK(one.at("w").item() == doctest::Approx(1.8).epsilon(1e-12));

  ParamSet two = inner_update(s, toy_loss(), {dummy_pair()}, exact_cfg(2));
  CHECK(two.at("w").item() == doctest::Approx(2.44).epsilon(1e-12));
}

TEST_CASE("alpha = 0 leaves theta unchanged") {
  MetaState s = toy_state(1.0, 0.0);
  ParamSet out = inner_update(s, toy_loss(), {dummy_pair()}, exact_cfg(1));
  CHECK(out.at("w").item() == 1.0);
}

TEST_CASE("closed-form outer gradients: exact -5.12, first-order -6.4, alpha -51.2") {
  // theta_hat(theta) = theta - 0.1 * 2(theta - 5) = 0.8*theta + 1, so the
  // exact outer gradient is L'(theta_hat) * 0.8 = -6.4 * 0.8 = -5.12;
  // d theta_hat / d alpha = -L'(theta0) = 8, so dL/d alpha = -6.4 * 8 = -51.2.
  for (auto mode : {Mode::Exact, Mode::FirstOrder}) {
    MetaState s = toy_state(1.0, 0.1);
    MetaConfig cfg = exact_cfg(1);
    cfg.mode = mode;
    Tape tape(true);
    ParamSet adapted = inner_update(s, toy_loss(), {dummy_pair()}, cfg);
    Tensor qloss = toy_loss()(adapted, dummy_pair());
    Gradients g = backward(qloss);
    double g_theta = g.of(s.theta0.at("w")).item();
    double g_alpha = g.of(s.alpha.at("w")).item();
    if (mode == Mode::Exact) {
      CHECK(g_theta == doctest::Approx(-5.12).epsilon(1e-9));
    } else {
      CHECK(g_theta == doctest::Approx(-6.4).epsilon(1e-9));
    }
    CHECK(g_alpha == doctest::Approx(-51.2).epsilon(1e-9));
  }

  // the exact value is anchored by finite differences through the whole
  // two-level computation
  auto outer_of = [](const Tensor& th) {
    Tape tape(true);
    Tensor L = sum(square(sub_scalar(th, 5.0)));
    Gradients gs = backward(L, true);
    Tensor theta_hat = sub(th, mul_scalar(gs.of(th), 0.1));
    return sum(square(sub_scalar(theta_hat, 5.0)));
  };
  CHECK(grad_check(outer_of, Tensor::scalar(1.0, DType::F64), 1e-6) < 1e-8);
}

TEST_CASE("exact and first-order produce identical adapted parameters") {
  MetaState s = toy_state(1.0, 0.1);
  MetaConfig ex = exact_cfg(2);
  MetaConfig fo = ex;
  fo.mode = Mode::FirstOrder;
  ParamSet a = inner_update(s, toy_loss(), {dummy_pair()}, ex);
  ParamSet b = inner_update(s, toy_loss(), {dummy_pair()}, fo);
  CHECK(a.at("w").data() == b.at("w").data());
}

TEST_CASE("meta_step applies the outer gradients and zero lrs change nothing") {
  Episode ep;
  ep.scene_id = "toy";
  ep.support = {dummy_pair()};
  ep.query = {dummy_pair()};

  MetaState s = toy_state(1.0, 0.1);
  MetaConfig cfg = exact_cfg(1);
  cfg.outer_lr_theta = 0.01;
  cfg.outer_lr_alpha = 0.001;
  auto stats = meta_step(s, toy_loss(), {ep}, cfg);
  CHECK(stats.outer_loss == doctest::Approx((1.8 - 5.0) * (1.8 - 5.0)).epsilon(1e-9));
  CHECK(s.theta0.at("w").item() == doctest::Approx(1.0 + 0.01 * 5.12).epsilon(1e-9));
  CHECK(s.alpha.at("w").item() == doctest::Approx(0.1 + 0.001 * 51.2).epsilon(1e-9));

  MetaState s2 = toy_state(1.0, 0.1);
  MetaConfig frozen = exact_cfg(1);
  frozen.outer_lr_theta = 0.0;
  frozen.outer_lr_alpha = 0.0;
  meta_step(s2, toy_loss(), {ep}, frozen);
  CHECK(s2.theta0.at("w").data() == std::vector<double>{1.0});
  CHECK(s2.alpha.at("w").data() == std::vector<double>{0.1});

  CHECK_THROWS_AS(meta_step(s2, toy_loss(), {}, frozen), DataError);
}

TEST_CASE("alpha updates are clamped and clamp events counted") {
  Episode ep;
  ep.support = {dummy_pair()};
  ep.query = {dummy_pair()};
  MetaState s = toy_state(1.0, 0.1);
  MetaConfig cfg = exact_cfg(1);
  cfg.outer_lr_alpha = 1.0;  // alpha would jump to 0.1 + 51.2
  cfg.alpha_max = 1.0;
  auto stats = meta_step(s, toy_loss(), {ep}, cfg);
  CHECK(stats.clamp_events == 1);
  CHECK(s.alpha.at("w").item() == 1.0);
}

TEST_CASE("outer gradient through the inner step matches finite differences on a real model") {
  model::ModelConfig mc;
  mc.ae.t_in = 2;
  mc.ae.height = 8;
  mc.ae.width = 8;
  mc.ae.frame_channels = 1;
  mc.ae.stage_channels = {3};
  mc.ae.plug_stage = 1;
  mc.ae.dtype = DType::F64;
  mc.prototypes = 2;
  mc.loss.lambda1 = 1.0;
  mc.loss.lambda2 = 0.01;

  ParamSet full = model::build_params(mc, 71, true);
  MetaConfig cfg = exact_cfg(1);
  cfg.alpha_init = 0.05;
  MetaState state = make_state(full, cfg);
  auto loss_fn = model::pair_loss_with_frozen_encoder(mc, state.encoder);

  Rng rng(9);
  model::FramePair support{oracle::random_tensor(rng, {2, 8, 8}, -0.6, 0.6),
                           oracle::random_tensor(rng, {1, 8, 8}, -0.6, 0.6)};
  model::FramePair query{oracle::random_tensor(rng, {2, 8, 8}, -0.6, 0.6),
                         oracle::random_tensor(rng, {1, 8, 8}, -0.6, 0.6)};

  // outer loss as a pure function of theta0
  auto outer_of = [&](const ParamSet& theta0) {
    MetaState s2;
    s2.theta0 = theta0;
    s2.alpha = state.alpha;
    s2.encoder = state.encoder;
    Tape tape(true);
    ParamSet adapted = inner_update(s2, loss_fn, {support}, cfg);
    return loss_fn(adapted, query);
  };
  std::string worst;
  double err = grad_check_params(outer_of, state.theta0, 1e-4, &worst);
  INFO("theta0 worst " << worst);
  CHECK(err < 1e-4);

  // and w.r.t. alpha
  auto outer_of_alpha = [&](const ParamSet& alpha) {
    MetaState s2;
    s2.theta0 = state.theta0;
    s2.alpha = alpha;
    s2.encoder = state.encoder;
    Tape tape(true);
    ParamSet adapted = inner_update(s2, loss_fn, {support}, cfg);
    return loss_fn(adapted, query);
  };
  double err2 = grad_check_params(outer_of_alpha, state.alpha, 1e-4, &worst);
  INFO("alpha worst " << worst);
  CHECK(err2 < 1e-4);
}

TEST_CASE("make_state splits names and the encoder stays frozen through meta steps") {
  model::ModelConfig mc;
  mc.ae.t_in = 2;
  mc.ae.height = 8;
  mc.ae.width = 8;
  mc.ae.stage_channels = {3};
  mc.ae.plug_stage = 1;
  mc.ae.dtype = DType::F64;
  mc.prototypes = 2;
  ParamSet full = model::build_params(mc, 5, true);
  MetaConfig cfg = exact_cfg(1);
  cfg.outer_lr_theta = 1e-3;
  cfg.outer_lr_alpha = 1e-3;
  MetaState state = make_state(full, cfg);
  for (const auto& [name, t] : state.theta0) {
    CHECK(name.rfind("enc.", 0) != 0);
    CHECK(state.alpha.count(name) == 1);
    CHECK(state.alpha.at(name).shape() == t.shape());
    CHECK(state.alpha.at(name).at(0) == doctest::Approx(cfg.alpha_init));
  }
  for (const auto& [name, t] : state.encoder) CHECK(name.rfind("enc.", 0) == 0);

  auto encoder_before = state.encoder;
  auto loss_fn = model::pair_loss_with_frozen_encoder(mc, state.encoder);
  Rng rng(3);
  Episode ep;
  ep.support = {model::FramePair{oracle::random_tensor(rng, {2, 8, 8}),
                                 oracle::random_tensor(rng, {1, 8, 8})}};
  ep.query = {model::FramePair{oracle::random_tensor(rng, {2, 8, 8}),
                               oracle::random_tensor(rng, {1, 8, 8})}};
  meta_step(state, loss_fn, {ep}, cfg);
  meta_step(state, loss_fn, {ep}, cfg);
  for (const auto& [name, t] : encoder_before) {
    CHECK(state.encoder.at(name).data() == t.data());
  }
  // theta did move
  bool moved = false;
  for (const auto& [name, t] : state.theta0) {
    if (t.data() != full.at(name).data()) moved = true;
  }
  CHECK(moved);
}

TEST_CASE("sample_episode: disjoint windows, determinism, support != query") {
  scenesynth::SceneSpec spec;
  spec.scene_id = "s";
  spec.background = scenesynth::Background::Flat;
  scenesynth::ObjectSpec obj;
  obj.shape = scenesynth::ShapeKind::Disc;
  obj.size_px = 6;
  obj.speed = 1.0;
  spec.objects.push_back(obj);
  spec.height = 16;
  spec.width = 16;

  SUBCASE("exact minimum length succeeds with disjoint windows") {
    int k = 3, t_in = 4;
    spec.frame_count = 2 * k * (t_in + 1);
    auto clip = scenesynth::generate_scene(spec, 1);
    Episode ep = sample_episode(clip, "s", k, t_in, 42, DType::F64);
    CHECK(ep.support.size() == 3);
    CHECK(ep.query.size() == 3);

    auto clip_short = [&] {
      scenesynth::SceneSpec s2 = spec;
      s2.frame_count = 2 * k * (t_in + 1) - 1;
      return scenesynth::generate_scene(s2, 1);
    }();
    CHECK_THROWS_AS(sample_episode(clip_short, "s", k, t_in, 42, DType::F64), DataError);
  }

  SUBCASE("same seed gives the identical episode") {
    spec.frame_count = 80;
    auto clip = scenesynth::generate_scene(spec, 2);
    Episode a = sample_episode(clip, "s", 2, 4, 7, DType::F64);
    Episode b = sample_episode(clip, "s", 2, 4, 7, DType::F64);
    for (int i = 0; i < 2; ++i) {
      CHECK(a.support[i].x.data() == b.support[i].x.data());
      CHECK(a.query[i].y.data() == b.query[i].y.data());
    }
  }

  SUBCASE("k=1 over 1000 seeds never collides support with query") {
    spec.frame_count = 100;
    auto clip = scenesynth::generate_scene(spec, 3);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      Episode ep = sample_episode(clip, "s", 1, 4, seed, DType::F32);
      CHECK(ep.support[0].x.data() != ep.query[0].x.data());
    }
  }
}

TEST_CASE("adapt: k=0 and alpha=0 keep the model; k>0 moves it") {
  model::ModelConfig mc;
  mc.ae.t_in = 2;
  mc.ae.height = 16;
  mc.ae.width = 16;
  mc.ae.stage_channels = {3};
  mc.ae.plug_stage = 1;
  mc.ae.dtype = DType::F64;
  mc.prototypes = 2;
  ParamSet full = model::build_params(mc, 5, true);
  MetaConfig cfg = exact_cfg(1);
  MetaState state = make_state(full, cfg);
  auto loss_fn = model::pair_loss_with_frozen_encoder(mc, state.encoder);

  scenesynth::SceneSpec spec;
  spec.scene_id = "s";
  scenesynth::ObjectSpec obj;
  obj.shape = scenesynth::ShapeKind::Square;
  obj.size_px = 5;
  obj.speed = 1.5;
  spec.objects.push_back(obj);
  spec.height = 16;
  spec.width = 16;
  spec.frame_count = 40;
  auto clip = scenesynth::generate_scene(spec, 4);

  ParamSet zero = adapt(state, loss_fn, clip, 0, mc.ae.t_in, cfg, DType::F64);
  for (const auto& [name, t] : state.theta0) CHECK(zero.at(name).data() == t.data());

  MetaState state0 = state;
  for (auto& [name, a] : state0.alpha) a = Tensor::zeros(a.shape(), a.dtype(), true);
  ParamSet same = adapt(state0, loss_fn, clip, 1, mc.ae.t_in, cfg, DType::F64);
  for (const auto& [name, t] : state0.theta0) CHECK(same.at(name).data() == t.data());

  ParamSet moved = adapt(state, loss_fn, clip, 2, mc.ae.t_in, cfg, DType::F64);
  bool any = false;
  for (const auto& [name, t] : state.theta0) {
    if (moved.at(name).data() != t.data()) any = true;
  }
  CHECK(any);

  CHECK_THROWS_AS(adapt(state, loss_fn, clip, 100, mc.ae.t_in, cfg, DType::F64), DataError);
}

TEST_CASE("k=10 adaptation lowers the query prediction loss, averaged over 5 seeds") {
  model::ModelConfig mc;
  mc.ae.t_in = 2;
  mc.ae.height = 16;
  mc.ae.width = 16;
  mc.ae.stage_channels = {4};
  mc.ae.plug_stage = 1;
  mc.ae.dtype = DType::F64;
  mc.prototypes = 3;

  double before = 0.0, after = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    scenesynth::SceneSpec spec;
    spec.scene_id = "adapt-gain";
    spec.background = scenesynth::Background::Gradient;
    scenesynth::ObjectSpec obj;
    obj.shape = scenesynth::ShapeKind::Cross;
    obj.size_px = 5;
    obj.speed = 2.0;
    obj.intensity = 0.2;
    spec.objects.push_back(obj);
    spec.height = 16;
    spec.width = 16;
    spec.frame_count = 60;
    auto clip = scenesynth::generate_scene(spec, derive_seed(seed, "scene"));

    ParamSet full = model::build_params(mc, derive_seed(seed, "model"), true);
    MetaConfig cfg = exact_cfg(1);
    cfg.alpha_init = 0.05;
    MetaState state = make_state(full, cfg);
    auto loss_fn = model::pair_loss_with_frozen_encoder(mc, state.encoder);

    // query pairs from the tail of the clip (disjoint from the k=10 lead)
    std::vector<model::FramePair> query;
    for (int s = 30; s + mc.ae.t_in < 60; s += mc.ae.t_in + 1) {
      scenesynth::PairIndex pi{s, s + mc.ae.t_in};
      query.push_back(model::FramePair{scenesynth::pair_input(clip, pi, mc.ae.t_in, DType::F64),
                                       scenesynth::pair_target(clip, pi, DType::F64)});
    }
    auto mean_loss = [&](const ParamSet& theta) {
      NoGradGuard no_grad;
      double acc = 0.0;
      for (const auto& pair : query) acc += loss_fn(theta, pair).item();
      return acc / static_cast<double>(query.size());
    };
    before += mean_loss(state.theta0);
    ParamSet adapted = adapt(state, loss_fn, clip, 10, mc.ae.t_in, cfg, DType::F64);
    after += mean_loss(adapted);
  }
  CHECK(after / 5.0 < before / 5.0);
}
