#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ndvad/scenesynth.hpp"

using namespace ndvad;
using namespace ndvad::scenesynth;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("scenesynth_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SceneSpec simple_scene(double speed = 2.0, int frames = 60) {
  SceneSpec s;
  s.scene_id = "t";
  s.background = Background::Gradient;
  ObjectSpec o;
  o.shape = ShapeKind::Square;
  o.size_px = 8;
  o.speed = speed;
  o.trajectory = Trajectory::LinearBounce;
  s.objects.push_back(o);
  s.height = 64;
  s.width = 64;
  s.frame_count = frames;
  return s;
}

// Independent reflect-walk: steps the position with per-frame velocity and
// mirrors at the walls, instead of folding a free coordinate.
struct ReflectWalk {
  double x, y, vx, vy, lo_x, hi_x, lo_y, hi_y;
  void step(double scale) {
    auto bounce = [](double& p, double& v, double lo, double hi) {
      if (p > hi) {
        p = 2 * hi - p;
        v = -v;
      } else if (p < lo) {
        p = 2 * lo - p;
        v = -v;
      }
    };
    x += vx * scale;
    y += vy * scale;
    bounce(x, vx, lo_x, hi_x);
    bounce(y, vy, lo_y, hi_y);
  }
};

ReflectWalk make_walk(const SceneSpec& spec, const ObjectSpec& obj, const ObjectMotion& m) {
  double margin = obj.size_px / 2.0 + 1.0;
  return ReflectWalk{m.x0,
                     m.y0,
                     m.dx * obj.speed,
                     m.dy * obj.speed,
                     margin,
                     spec.width - 1 - margin,
                     margin,
                     spec.height - 1 - margin};
}

}  // namespace

TEST_CASE("generate_scene is deterministic and labels are all zero") {
  SceneSpec s = simple_scene();
  VideoClip a = generate_scene(s, 42);
  VideoClip b = generate_scene(s, 42);
  REQUIRE(a.pixels.size() == b.pixels.size());
  CHECK(a.pixels == b.pixels);
  for (auto l : a.labels) CHECK(l == 0);
  VideoClip c = generate_scene(s, 43);
  CHECK(c.pixels != a.pixels);
}

TEST_CASE("speed 0 gives a static clip") {
  VideoClip clip = generate_scene(simple_scene(0.0, 10), 7);
  for (int t = 1; t < clip.frame_count(); ++t) {
    for (std::size_t i = 0; i < clip.frame_size(); ++i) {
      REQUIRE(clip.frame_data(t)[i] == clip.frame_data(0)[i]);
    }
  }
}

TEST_CASE("all pixel values lie in [-1, 1]") {
  for (auto bg : {Background::Flat, Background::Gradient, Background::Checker, Background::Noise}) {
    SceneSpec s = simple_scene(2.5, 8);
    s.background = bg;
    VideoClip clip = generate_scene(s, 11);
    for (float v : clip.pixels) {
      REQUIRE(v >= -1.0f);
      REQUIRE(v <= 1.0f);
    }
  }
}

TEST_CASE("linear-bounce trajectory matches the reflect-walk oracle") {
  SceneSpec s = simple_scene(2.0, 120);
  ObjectMotion m = object_motion(s, s.objects[0], 42, 0);
  ReflectWalk walk = make_walk(s, s.objects[0], m);
  for (int t = 0; t <= 120; ++t) {
    auto [x, y] = object_center(s, s.objects[0], m, static_cast<double>(t));
    CHECK(std::abs(x - walk.x) < 1e-9);
    CHECK(std::abs(y - walk.y) < 1e-9);
    walk.step(1.0);
  }
}

TEST_CASE("rendered frame puts the object at the computed center") {
  SceneSpec s = simple_scene(1.5, 6);
  VideoClip clip = generate_scene(s, 5);
  ObjectMotion m = object_motion(s, s.objects[0], 5, 0);
  for (int t = 0; t < 6; ++t) {
    auto [x, y] = object_center(s, s.objects[0], m, static_cast<double>(t));
    int cx = static_cast<int>(std::lround(x));
    int cy = static_cast<int>(std::lround(y));
    float v = clip.frame_data(t)[cy * s.width + cx];
    CHECK(v > 0.5f);  // object intensities are drawn in [0.55, 0.95]
  }
}

TEST_CASE("inject_anomaly labels exactly the interval, touches only it") {
  SceneSpec s = simple_scene(2.0, 80);
  VideoClip clip = generate_scene(s, 9);
  AnomalySpec a;
  a.kind = AnomalyKind::Teleport;
  a.start_frame = 20;
  a.end_frame = 35;
  VideoClip out = inject_anomaly(clip, s, 9, a, 1234);
  int label_sum = 0;
  for (auto l : out.labels) label_sum += l;
  CHECK(label_sum == 15);
  for (int t = 0; t < 80; ++t) {
    bool inside = t >= 20 && t < 35;
    bool same = std::equal(out.frame_data(t), out.frame_data(t) + out.frame_size(),
                           clip.frame_data(t));
    if (inside) {
      CHECK(out.labels[t] == 1);
    } else {
      CHECK(out.labels[t] == 0);
      CHECK(same);
    }
  }
  AnomalySpec bad = a;
  bad.end_frame = 100;
  CHECK_THROWS_AS(inject_anomaly(clip, s, 9, bad, 1), ConfigError);
}

TEST_CASE("speed-multiplier dilates the trajectory threefold inside the interval") {
  SceneSpec s = simple_scene(1.5, 60);
  ObjectMotion m = object_motion(s, s.objects[0], 21, 0);
  AnomalySpec a;
  a.kind = AnomalyKind::SpeedMultiplier;
  a.start_frame = 10;
  a.end_frame = 30;
  a.multiplier = 3.0;

  // oracle: reflect-walk with velocity scaled x3 inside the interval
  ReflectWalk walk = make_walk(s, s.objects[0], m);
  for (int t = 0; t < 30; ++t) {
    double t_eff = t < a.start_frame
                       ? static_cast<double>(t)
                       : a.start_frame + (t - a.start_frame) * a.multiplier;
    auto [x, y] = object_center(s, s.objects[0], m, t_eff);
    CHECK(std::abs(x - walk.x) < 1e-9);
    CHECK(std::abs(y - walk.y) < 1e-9);
    walk.step(t >= a.start_frame ? a.multiplier : 1.0);
  }

  // and the rendered clip reflects it: frames differ inside, match outside
  VideoClip clip = generate_scene(s, 21);
  VideoClip out = inject_anomaly(clip, s, 21, a, 77);
  bool any_diff = false;
  for (int t = a.start_frame + 1; t < a.end_frame; ++t) {
    if (!std::equal(out.frame_data(t), out.frame_data(t) + out.frame_size(),
                    clip.frame_data(t))) {
      any_diff = true;
    }
  }
  CHECK(any_diff);
}

TEST_CASE("unseen-shape anomaly draws an extra object") {
  SceneSpec s = simple_scene(1.0, 40);
  VideoClip clip = generate_scene(s, 3);
  AnomalySpec a;
  a.kind = AnomalyKind::UnseenShape;
  a.start_frame = 5;
  a.end_frame = 20;
  a.shape = ShapeKind::Ring;
  a.size_px = 14;
  VideoClip out = inject_anomaly(clip, s, 3, a, 99);
  int changed = 0;
  for (int t = 5; t < 20; ++t) {
    if (!std::equal(out.frame_data(t), out.frame_data(t) + out.frame_size(),
                    clip.frame_data(t))) {
      ++changed;
    }
  }
  CHECK(changed == 15);
}

TEST_CASE("ndvf round-trip is bit-exact; corruption is a format error") {
  TempDir tmp;
  VideoClip clip = generate_scene(simple_scene(2.0, 12), 8);
  clip.labels[3] = 1;
  std::string v = (tmp.path / "c.ndvf").string();
  std::string l = (tmp.path / "c.labels.csv").string();
  write_clip(v, l, clip);
  VideoClip back = read_clip(v, l);
  CHECK(back.pixels == clip.pixels);
  CHECK(back.labels == clip.labels);
  CHECK(back.height == clip.height);

  // truncate
  {
    std::ifstream in(v, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out((tmp.path / "bad.ndvf").string(), std::ios::binary);
    out << bytes.substr(0, 20);
  }
  CHECK_THROWS_AS(read_clip((tmp.path / "bad.ndvf").string(), l), DataError);
  // wrong magic
  {
    std::ofstream out((tmp.path / "junk.ndvf").string(), std::ios::binary);
    out << "JUNKJUNKJUNK";
  }
  CHECK_THROWS_AS(read_clip((tmp.path / "junk.ndvf").string(), l), DataError);
}

TEST_CASE("build_pairs counts, indexing and channel order") {
  VideoClip clip = generate_scene(simple_scene(1.0, 10), 2);
  auto pairs = build_pairs(clip, 4);
  REQUIRE(pairs.size() == 6);
  CHECK(pairs[0].start == 0);
  CHECK(pairs[0].frame_index == 4);
  CHECK(pairs[5].frame_index == 9);

  Tensor x = pair_input(clip, pairs[2], 4, DType::F64);
  REQUIRE(x.shape() == Shape{4, 64, 64});
  // channel f of x equals frame start+f
  for (int f = 0; f < 4; ++f) {
    Tensor fr = clip.frame(pairs[2].start + f, DType::F64);
    for (std::int64_t i = 0; i < 64 * 64; ++i) {
      REQUIRE(x.at(f * 64 * 64 + i) == fr.at(i));
    }
  }
  Tensor y = pair_target(clip, pairs[2], DType::F64);
  Tensor fr = clip.frame(6, DType::F64);
  for (std::int64_t i = 0; i < fr.numel(); ++i) REQUIRE(y.at(i) == fr.at(i));

  VideoClip tiny = generate_scene(simple_scene(1.0, 3), 2);
  CHECK_THROWS_AS(build_pairs(tiny, 4), DataError);
}

TEST_CASE("default benchmark: roles, labels, bit-identical regeneration") {
  TempDir tmp;
  BenchmarkParams p;
  p.meta_scenes = 3;
  p.target_scenes = 2;
  p.frame_count = 90;
  p.height = 32;
  p.width = 32;
  p.lead_frames = 20;
  p.seed = 5;
  DatasetManifest m = default_benchmark(p);
  REQUIRE(m.scenes.size() == 5);

  std::string dir = (tmp.path / "bench").string();
  write_dataset(m, dir);
  DatasetManifest m2 = read_manifest(dir);
  REQUIRE(m2.scenes.size() == 5);

  for (const auto& e : m2.scenes) {
    VideoClip stored = load_clip(dir, e);
    VideoClip regen = render_entry(e);
    CHECK(stored.pixels == regen.pixels);
    CHECK(stored.labels == regen.labels);
    int label_sum = 0;
    for (auto l : stored.labels) label_sum += l;
    if (e.role == "meta-train") {
      CHECK(label_sum == 0);
    } else {
      CHECK(label_sum > 0);
      // anomalies never intrude into the normal-only lead
      for (int t = 0; t < e.lead_frames; ++t) CHECK(stored.labels[t] == 0);
    }
  }
}

TEST_CASE("unknown spec names raise config errors naming the value") {
  CHECK_THROWS_AS(shape_from_string("blob"), ConfigError);
  CHECK_THROWS_AS(background_from_string("lava"), ConfigError);
  CHECK_THROWS_AS(trajectory_from_string("warp"), ConfigError);
  CHECK_THROWS_AS(anomaly_from_string("ghost"), ConfigError);
  SceneSpec s = simple_scene();
  s.objects[0].size_px = 100;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("default benchmark fits comfortably under 200 MB") {
  BenchmarkParams p;  // 8 meta-train + 3 target scenes, 500 frames of 64x64
  DatasetManifest m = default_benchmark(p);
  REQUIRE(m.scenes.size() == 11);
  // per clip: 16-byte header + frames as f32
  std::size_t per_clip = 16 + static_cast<std::size_t>(p.frame_count) * p.height * p.width * 4;
  std::size_t total = per_clip * m.scenes.size();
  CHECK(total < 200ull * 1024 * 1024);

  // and the on-disk size of one rendered clip matches the arithmetic
  TempDir tmp;
  VideoClip clip = render_entry(m.scenes.front());
  std::string v = (tmp.path / "x.ndvf").string();
  write_clip(v, (tmp.path / "x.labels.csv").string(), clip);
  CHECK(fs::file_size(v) == per_clip);
}
