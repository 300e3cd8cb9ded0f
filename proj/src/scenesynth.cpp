#include "ndvad/scenesynth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ndvad/binio.hpp"
#include "ndvad/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ndvad::scenesynth {

std::string to_string(Background b) {
  switch (b) {
    case Background::Flat: return "flat";
    case Background::Gradient: return "gradient";
    case Background::Checker: return "checker";
    case Background::Noise: return "noise";
  }
  return "flat";
}

std::string to_string(ShapeKind s) {
  switch (s) {
    case ShapeKind::Square: return "square";
    case ShapeKind::Disc: return "disc";
    case ShapeKind::Cross: return "cross";
    case ShapeKind::Triangle: return "triangle";
    case ShapeKind::Ring: return "ring";
  }
  return "square";
}

std::string to_string(Trajectory t) {
  return t == Trajectory::LinearBounce ? "linear-bounce" : "sinusoid";
}

std::string to_string(AnomalyKind a) {
  switch (a) {
    case AnomalyKind::UnseenShape: return "unseen-shape";
    case AnomalyKind::SpeedMultiplier: return "speed-multiplier";
    case AnomalyKind::Teleport: return "teleport";
  }
  return "unseen-shape";
}

Background background_from_string(const std::string& s) {
  if (s == "flat") return Background::Flat;
  if (s == "gradient") return Background::Gradient;
  if (s == "checker") return Background::Checker;
  if (s == "noise") return Background::Noise;
  throw ConfigError("unknown background '" + s + "'");
}

ShapeKind shape_from_string(const std::string& s) {
  if (s == "square") return ShapeKind::Square;
  if (s == "disc") return ShapeKind::Disc;
  if (s == "cross") return ShapeKind::Cross;
  if (s == "triangle") return ShapeKind::Triangle;
  if (s == "ring") return ShapeKind::Ring;
  throw ConfigError("unknown shape '" + s + "'");
}

Trajectory trajectory_from_string(const std::string& s) {
  if (s == "linear-bounce") return Trajectory::LinearBounce;
  if (s == "sinusoid") return Trajectory::Sinusoid;
  throw ConfigError("unknown trajectory '" + s + "'");
}

AnomalyKind anomaly_from_string(const std::string& s) {
  if (s == "unseen-shape") return AnomalyKind::UnseenShape;
  if (s == "speed-multiplier") return AnomalyKind::SpeedMultiplier;
  if (s == "teleport") return AnomalyKind::Teleport;
  throw ConfigError("unknown anomaly type '" + s + "'");
}

void SceneSpec::validate() const {
  if (height < 8 || width < 8) throw ConfigError("scene '" + scene_id + "': frame size too small");
  if (frame_count < 1) throw ConfigError("scene '" + scene_id + "': frame_count must be >= 1");
  for (const auto& o : objects) {
    if (o.size_px < 1 || o.size_px >= std::min(height, width)) {
      throw ConfigError("scene '" + scene_id + "': object size " + std::to_string(o.size_px) +
                        " must be in [1, frame size)");
    }
    if (o.speed < 0) throw ConfigError("scene '" + scene_id + "': speed must be >= 0");
  }
}

Tensor VideoClip::frame(int t, DType want) const {
  std::vector<double> d(frame_size());
  const float* src = frame_data(t);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(src[i]);
  return Tensor::from(std::move(d), {channels, height, width}, want);
}

namespace {

// Reflecting walk as folding of the free coordinate onto [lo, hi].
double fold1d(double v, double lo, double hi) {
  double span = hi - lo;
  if (span <= 0.0) return lo;
  double period = 2.0 * span;
  double u = std::fmod(v - lo, period);
  if (u < 0.0) u += period;
  return lo + (u <= span ? u : period - u);
}

struct Placed {
  ShapeKind shape;
  int size;
  double cx, cy;
  double intensity;
};

void draw_object(std::vector<float>& img, int h, int w, const Placed& o) {
  int cx = static_cast<int>(std::lround(o.cx));
  int cy = static_cast<int>(std::lround(o.cy));
  int r = o.size / 2;
  auto put = [&](int y, int x) {
    if (y < 0 || y >= h || x < 0 || x >= w) return;
    img[static_cast<std::size_t>(y) * w + x] = static_cast<float>(o.intensity);
  };
  switch (o.shape) {
    case ShapeKind::Square:
      for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x) put(y, x);
      break;
    case ShapeKind::Disc:
      for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x)
          if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) put(y, x);
      break;
    case ShapeKind::Cross: {
      int t = std::max(1, o.size / 6);
      for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - t; x <= cx + t; ++x) put(y, x);
      for (int y = cy - t; y <= cy + t; ++y)
        for (int x = cx - r; x <= cx + r; ++x) put(y, x);
      break;
    }
    case ShapeKind::Triangle:
      for (int dy = -r; dy <= r; ++dy) {
        // width grows linearly from the apex at the top
        int half = static_cast<int>(std::lround((dy + r) * 0.5));
        for (int x = cx - half; x <= cx + half; ++x) put(cy + dy, x);
      }
      break;
    case ShapeKind::Ring: {
      int ri = std::max(1, r / 2);
      for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x) {
          int d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          if (d2 <= r * r && d2 >= ri * ri) put(y, x);
        }
      break;
    }
  }
}

std::vector<float> render_background(const SceneSpec& spec, std::uint64_t scene_seed) {
  Rng rng(derive_seed(scene_seed, "background"));
  int h = spec.height, w = spec.width;
  std::vector<float> img(static_cast<std::size_t>(h) * w, 0.0f);
  switch (spec.background) {
    case Background::Flat: {
      float v = static_cast<float>(rng.uniform(-0.9, -0.4));
      std::fill(img.begin(), img.end(), v);
      break;
    }
    case Background::Gradient: {
      double v0 = rng.uniform(-0.9, -0.5);
      double v1 = rng.uniform(-0.4, -0.1);
      bool horizontal = rng.uniform() < 0.5;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double a = horizontal ? static_cast<double>(x) / (w - 1)
                                : static_cast<double>(y) / (h - 1);
          img[static_cast<std::size_t>(y) * w + x] = static_cast<float>(v0 + (v1 - v0) * a);
        }
      break;
    }
    case Background::Checker: {
      int cell = rng.uniform() < 0.5 ? 8 : 16;
      float a = static_cast<float>(rng.uniform(-0.9, -0.6));
      float b = static_cast<float>(rng.uniform(-0.5, -0.2));
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          bool odd = ((y / cell) + (x / cell)) % 2 == 1;
          img[static_cast<std::size_t>(y) * w + x] = odd ? b : a;
        }
      break;
    }
    case Background::Noise: {
      // value noise: coarse uniform grid, bilinear upsample
      int grid = 8;
      std::vector<double> coarse(static_cast<std::size_t>(grid + 1) * (grid + 1));
      for (auto& v : coarse) v = rng.uniform(-0.8, -0.2);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double gy = static_cast<double>(y) / h * grid;
          double gx = static_cast<double>(x) / w * grid;
          int iy = static_cast<int>(gy), ix = static_cast<int>(gx);
          double fy = gy - iy, fx = gx - ix;
          double v00 = coarse[static_cast<std::size_t>(iy) * (grid + 1) + ix];
          double v01 = coarse[static_cast<std::size_t>(iy) * (grid + 1) + ix + 1];
          double v10 = coarse[static_cast<std::size_t>(iy + 1) * (grid + 1) + ix];
          double v11 = coarse[static_cast<std::size_t>(iy + 1) * (grid + 1) + ix + 1];
          double v = v00 * (1 - fy) * (1 - fx) + v01 * (1 - fy) * fx + v10 * fy * (1 - fx) +
                     v11 * fy * fx;
          img[static_cast<std::size_t>(y) * w + x] = static_cast<float>(v);
        }
      break;
    }
  }
  return img;
}

double object_intensity(std::uint64_t scene_seed, int object_index) {
  Rng rng(derive_seed(scene_seed, "object-intensity", static_cast<std::uint64_t>(object_index)));
  return rng.uniform(0.55, 0.95);
}

struct FrameOverrides {
  std::vector<double> object_time;                            // effective time per object
  std::vector<std::optional<std::pair<double, double>>> center_override;
  std::vector<Placed> extras;
};

std::vector<float> render_frame(const SceneSpec& spec, std::uint64_t scene_seed,
                                const FrameOverrides& ov) {
  std::vector<float> img = render_background(spec, scene_seed);
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const ObjectSpec& obj = spec.objects[i];
    ObjectMotion m = object_motion(spec, obj, scene_seed, static_cast<int>(i));
    Placed p;
    p.shape = obj.shape;
    p.size = obj.size_px;
    p.intensity = obj.intensity >= 0.0 ? obj.intensity
                                       : object_intensity(scene_seed, static_cast<int>(i));
    if (ov.center_override[i]) {
      p.cx = ov.center_override[i]->first;
      p.cy = ov.center_override[i]->second;
    } else {
      auto [x, y] = object_center(spec, obj, m, ov.object_time[i]);
      p.cx = x;
      p.cy = y;
    }
    draw_object(img, spec.height, spec.width, p);
  }
  for (const auto& e : ov.extras) draw_object(img, spec.height, spec.width, e);
  for (auto& v : img) v = std::clamp(v, -1.0f, 1.0f);
  return img;
}

FrameOverrides plain_overrides(const SceneSpec& spec, double t) {
  FrameOverrides ov;
  ov.object_time.assign(spec.objects.size(), t);
  ov.center_override.assign(spec.objects.size(), std::nullopt);
  return ov;
}

}  // namespace

ObjectMotion object_motion(const SceneSpec& spec, const ObjectSpec& obj, std::uint64_t scene_seed,
                           int object_index) {
  Rng rng(derive_seed(scene_seed, "object", static_cast<std::uint64_t>(object_index)));
  ObjectMotion m{};
  double margin = obj.size_px / 2.0 + 1.0;
  double lox = margin, hix = spec.width - 1 - margin;
  double loy = margin, hiy = spec.height - 1 - margin;
  m.x0 = rng.uniform(lox, std::max(lox, hix));
  m.y0 = rng.uniform(loy, std::max(loy, hiy));
  double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  m.dx = std::cos(angle);
  m.dy = std::sin(angle);
  m.cx = (lox + hix) / 2.0;
  m.cy = (loy + hiy) / 2.0;
  m.ax = rng.uniform(0.4, 1.0) * std::max(1.0, (hix - lox) / 2.0);
  m.ay = rng.uniform(0.4, 1.0) * std::max(1.0, (hiy - loy) / 2.0);
  m.phx = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  m.phy = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  return m;
}

std::pair<double, double> object_center(const SceneSpec& spec, const ObjectSpec& obj,
                                        const ObjectMotion& m, double t) {
  double margin = obj.size_px / 2.0 + 1.0;
  double lox = margin, hix = spec.width - 1 - margin;
  double loy = margin, hiy = spec.height - 1 - margin;
  if (obj.trajectory == Trajectory::LinearBounce) {
    double x = fold1d(m.x0 + m.dx * obj.speed * t, lox, hix);
    double y = fold1d(m.y0 + m.dy * obj.speed * t, loy, hiy);
    return {x, y};
  }
  // sinusoid: angular rate chosen so the peak pixel speed matches obj.speed
  double omega = obj.speed / std::max({m.ax, m.ay, 1.0});
  double x = m.cx + m.ax * std::sin(omega * t + m.phx);
  double y = m.cy + m.ay * std::sin(omega * t + m.phy);
  return {std::clamp(x, lox, std::max(lox, hix)), std::clamp(y, loy, std::max(loy, hiy))};
}

VideoClip generate_scene(const SceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  VideoClip clip;
  clip.channels = 1;
  clip.height = spec.height;
  clip.width = spec.width;
  clip.pixels.reserve(static_cast<std::size_t>(spec.frame_count) * spec.height * spec.width);
  for (int t = 0; t < spec.frame_count; ++t) {
    auto img = render_frame(spec, seed, plain_overrides(spec, static_cast<double>(t)));
    clip.pixels.insert(clip.pixels.end(), img.begin(), img.end());
  }
  clip.labels.assign(static_cast<std::size_t>(spec.frame_count), 0);
  return clip;
}

VideoClip inject_anomaly(const VideoClip& clip, const SceneSpec& spec, std::uint64_t scene_seed,
                         const AnomalySpec& anomaly, std::uint64_t anomaly_seed) {
  if (anomaly.start_frame < 0 || anomaly.end_frame > clip.frame_count() ||
      anomaly.start_frame >= anomaly.end_frame) {
    throw ConfigError("anomaly interval [" + std::to_string(anomaly.start_frame) + "," +
                      std::to_string(anomaly.end_frame) + ") out of range for clip of " +
                      std::to_string(clip.frame_count()) + " frames");
  }
  if (anomaly.kind != AnomalyKind::UnseenShape &&
      (anomaly.object_index < 0 ||
       anomaly.object_index >= static_cast<int>(spec.objects.size()))) {
    throw ConfigError("anomaly object_index " + std::to_string(anomaly.object_index) +
                      " out of range");
  }
  VideoClip out = clip;
  Rng rng(derive_seed(anomaly_seed, "anomaly"));

  // An unseen-shape object follows its own bouncing track through the interval.
  SceneSpec ghost = spec;
  ObjectSpec extra_obj;
  ObjectMotion extra_motion{};
  if (anomaly.kind == AnomalyKind::UnseenShape) {
    extra_obj.shape = anomaly.shape;
    extra_obj.size_px = anomaly.size_px;
    extra_obj.speed = anomaly.speed;
    extra_obj.trajectory = Trajectory::LinearBounce;
    extra_motion = object_motion(ghost, extra_obj, derive_seed(anomaly_seed, "extra"), 0);
  }

  for (int t = anomaly.start_frame; t < anomaly.end_frame; ++t) {
    FrameOverrides ov = plain_overrides(spec, static_cast<double>(t));
    switch (anomaly.kind) {
      case AnomalyKind::SpeedMultiplier:
        // local time dilation: frames after the interval are untouched
        ov.object_time[anomaly.object_index] =
            anomaly.start_frame + (t - anomaly.start_frame) * anomaly.multiplier;
        break;
      case AnomalyKind::Teleport: {
        const ObjectSpec& obj = spec.objects[anomaly.object_index];
        double margin = obj.size_px / 2.0 + 1.0;
        double x = rng.uniform(margin, spec.width - 1 - margin);
        double y = rng.uniform(margin, spec.height - 1 - margin);
        ov.center_override[anomaly.object_index] = {x, y};
        break;
      }
      case AnomalyKind::UnseenShape: {
        auto [x, y] = object_center(ghost, extra_obj, extra_motion,
                                    static_cast<double>(t - anomaly.start_frame));
        Placed p;
        p.shape = extra_obj.shape;
        p.size = extra_obj.size_px;
        p.cx = x;
        p.cy = y;
        p.intensity = 0.9;
        ov.extras.push_back(p);
        break;
      }
    }
    auto img = render_frame(spec, scene_seed, ov);
    std::copy(img.begin(), img.end(), out.pixels.begin() + out.frame_size() * t);
    out.labels[t] = 1;
  }
  return out;
}

void write_clip(const std::string& ndvf_path, const std::string& labels_path,
                const VideoClip& clip) {
  ByteWriter w;
  w.str("NDVF");
  w.u16(kNdvfVersion);
  w.u32(static_cast<std::uint32_t>(clip.frame_count()));
  w.u8(static_cast<std::uint8_t>(clip.channels));
  w.u16(static_cast<std::uint16_t>(clip.height));
  w.u16(static_cast<std::uint16_t>(clip.width));
  w.u8(static_cast<std::uint8_t>(clip.dtype));
  if (clip.dtype == DType::F32) {
    for (float v : clip.pixels) w.f32(v);
  } else {
    for (float v : clip.pixels) w.f64(static_cast<double>(v));
  }
  w.write_file(ndvf_path);

  std::ofstream csv(labels_path, std::ios::trunc);
  if (!csv) throw DataError("cannot open '" + labels_path + "' for writing");
  csv << "frame_index,label\n";
  for (int t = 0; t < clip.frame_count(); ++t) {
    csv << t << "," << static_cast<int>(clip.labels[t]) << "\n";
  }
}

VideoClip read_clip(const std::string& ndvf_path, const std::string& labels_path) {
  ByteReader r = ByteReader::from_file(ndvf_path);
  if (r.str(4) != "NDVF") r.fail("bad magic, expected 'NDVF'");
  std::uint16_t version = r.u16();
  if (version != kNdvfVersion) r.fail("unsupported version " + std::to_string(version));
  VideoClip clip;
  std::uint32_t frames = r.u32();
  clip.channels = r.u8();
  clip.height = r.u16();
  clip.width = r.u16();
  std::uint8_t dtag = r.u8();
  if (dtag != static_cast<std::uint8_t>(DType::F32) &&
      dtag != static_cast<std::uint8_t>(DType::F64)) {
    r.fail("unknown dtype tag " + std::to_string(dtag));
  }
  clip.dtype = static_cast<DType>(dtag);
  std::size_t n = static_cast<std::size_t>(frames) * clip.channels * clip.height * clip.width;
  clip.pixels.resize(n);
  for (auto& v : clip.pixels) {
    v = clip.dtype == DType::F32 ? r.f32() : static_cast<float>(r.f64());
  }
  if (!r.at_end()) r.fail("trailing bytes after pixel data");

  clip.labels.assign(frames, 0);
  std::ifstream csv(labels_path);
  if (!csv) throw DataError("cannot open '" + labels_path + "' for reading");
  std::string line;
  if (!std::getline(csv, line) || line != "frame_index,label") {
    throw DataError("format error in '" + labels_path + "': expected 'frame_index,label' header");
  }
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("format error in '" + labels_path + "'");
    int idx = std::stoi(line.substr(0, comma));
    int lab = std::stoi(line.substr(comma + 1));
    if (idx < 0 || idx >= static_cast<int>(frames)) {
      throw DataError("label frame_index " + std::to_string(idx) + " out of range in '" +
                      labels_path + "'");
    }
    clip.labels[idx] = static_cast<std::uint8_t>(lab != 0);
  }
  return clip;
}

std::vector<PairIndex> build_pairs(const VideoClip& clip, int t_in) {
  if (clip.frame_count() <= t_in) {
    throw DataError("clip too short to build pairs: " + std::to_string(clip.frame_count()) +
                    " frames, need > " + std::to_string(t_in));
  }
  std::vector<PairIndex> pairs;
  pairs.reserve(clip.frame_count() - t_in);
  for (int s = 0; s + t_in < clip.frame_count(); ++s) pairs.push_back({s, s + t_in});
  return pairs;
}

Tensor pair_input(const VideoClip& clip, const PairIndex& p, int t_in, DType dtype) {
  std::vector<double> d(clip.frame_size() * t_in);
  for (int f = 0; f < t_in; ++f) {
    const float* src = clip.frame_data(p.start + f);
    for (std::size_t i = 0; i < clip.frame_size(); ++i) {
      d[clip.frame_size() * f + i] = static_cast<double>(src[i]);
    }
  }
  return Tensor::from(std::move(d), {t_in * clip.channels, clip.height, clip.width}, dtype);
}

Tensor pair_target(const VideoClip& clip, const PairIndex& p, DType dtype) {
  return clip.frame(p.frame_index, dtype);
}

namespace {

json object_to_json(const ObjectSpec& o) {
  return json{{"shape", to_string(o.shape)},
              {"size_px", o.size_px},
              {"speed", o.speed},
              {"trajectory", to_string(o.trajectory)},
              {"intensity", o.intensity}};
}

ObjectSpec object_from_json(const json& j) {
  ObjectSpec o;
  o.shape = shape_from_string(j.at("shape").get<std::string>());
  o.size_px = j.at("size_px").get<int>();
  o.speed = j.at("speed").get<double>();
  o.trajectory = trajectory_from_string(j.at("trajectory").get<std::string>());
  if (j.contains("intensity")) o.intensity = j.at("intensity").get<double>();
  return o;
}

json anomaly_to_json(const AnomalySpec& a) {
  return json{{"kind", to_string(a.kind)},     {"start_frame", a.start_frame},
              {"end_frame", a.end_frame},      {"object_index", a.object_index},
              {"multiplier", a.multiplier},    {"shape", to_string(a.shape)},
              {"size_px", a.size_px},          {"speed", a.speed}};
}

AnomalySpec anomaly_from_json(const json& j) {
  AnomalySpec a;
  a.kind = anomaly_from_string(j.at("kind").get<std::string>());
  a.start_frame = j.at("start_frame").get<int>();
  a.end_frame = j.at("end_frame").get<int>();
  a.object_index = j.at("object_index").get<int>();
  a.multiplier = j.at("multiplier").get<double>();
  a.shape = shape_from_string(j.at("shape").get<std::string>());
  a.size_px = j.at("size_px").get<int>();
  a.speed = j.at("speed").get<double>();
  return a;
}

json scene_to_json(const SceneEntry& e) {
  json objs = json::array();
  for (const auto& o : e.spec.objects) objs.push_back(object_to_json(o));
  json anomalies = json::array();
  for (const auto& a : e.anomalies) anomalies.push_back(anomaly_to_json(a));
  return json{{"scene_id", e.spec.scene_id},
              {"background", to_string(e.spec.background)},
              {"objects", objs},
              {"height", e.spec.height},
              {"width", e.spec.width},
              {"frame_count", e.spec.frame_count},
              {"seed", e.seed},
              {"role", e.role},
              {"anomalies", anomalies},
              {"anomaly_seed", e.anomaly_seed},
              {"lead_frames", e.lead_frames},
              {"clip", e.clip_path},
              {"labels", e.labels_path}};
}

SceneEntry scene_from_json(const json& j) {
  SceneEntry e;
  e.spec.scene_id = j.at("scene_id").get<std::string>();
  e.spec.background = background_from_string(j.at("background").get<std::string>());
  for (const auto& o : j.at("objects")) e.spec.objects.push_back(object_from_json(o));
  e.spec.height = j.at("height").get<int>();
  e.spec.width = j.at("width").get<int>();
  e.spec.frame_count = j.at("frame_count").get<int>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.role = j.at("role").get<std::string>();
  for (const auto& a : j.at("anomalies")) e.anomalies.push_back(anomaly_from_json(a));
  e.anomaly_seed = j.at("anomaly_seed").get<std::uint64_t>();
  e.lead_frames = j.at("lead_frames").get<int>();
  e.clip_path = j.at("clip").get<std::string>();
  e.labels_path = j.at("labels").get<std::string>();
  return e;
}

}  // namespace

VideoClip render_entry(const SceneEntry& entry) {
  VideoClip clip = generate_scene(entry.spec, entry.seed);
  for (std::size_t i = 0; i < entry.anomalies.size(); ++i) {
    clip = inject_anomaly(clip, entry.spec, entry.seed, entry.anomalies[i],
                          derive_seed(entry.anomaly_seed, "instance", i));
  }
  return clip;
}

void write_dataset(const DatasetManifest& manifest, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "clips");
  json scenes = json::array();
  for (const auto& e : manifest.scenes) scenes.push_back(scene_to_json(e));
  json root{{"version", manifest.version}, {"scenes", scenes}};
  std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
  if (!mf) throw DataError("cannot write manifest in '" + dir + "'");
  mf << root.dump(2) << "\n";

  for (const auto& e : manifest.scenes) {
    VideoClip clip = render_entry(e);
    write_clip((fs::path(dir) / e.clip_path).string(), (fs::path(dir) / e.labels_path).string(),
               clip);
  }
}

DatasetManifest read_manifest(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw DataError("no manifest.json in '" + dir + "'");
  json root;
  try {
    mf >> root;
  } catch (const json::exception& e) {
    throw DataError("manifest.json in '" + dir + "' is not valid JSON: " + e.what());
  }
  DatasetManifest m;
  m.version = root.at("version").get<int>();
  for (const auto& s : root.at("scenes")) m.scenes.push_back(scene_from_json(s));
  return m;
}

VideoClip load_clip(const std::string& dir, const SceneEntry& entry) {
  return read_clip((fs::path(dir) / entry.clip_path).string(),
                   (fs::path(dir) / entry.labels_path).string());
}

DatasetManifest default_benchmark(const BenchmarkParams& params) {
  DatasetManifest m;
  const Background bgs[] = {Background::Flat, Background::Gradient, Background::Checker,
                            Background::Noise};
  // meta-train scenes: squares and discs on varied backgrounds
  for (int i = 0; i < params.meta_scenes; ++i) {
    SceneEntry e;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "meta%02d", i);
    e.spec.scene_id = buf;
    e.spec.background = bgs[i % 4];
    e.spec.height = params.height;
    e.spec.width = params.width;
    e.spec.frame_count = params.frame_count;
    int objects = 1 + (i % 2);
    for (int o = 0; o < objects; ++o) {
      ObjectSpec obj;
      obj.shape = (i + o) % 2 == 0 ? ShapeKind::Square : ShapeKind::Disc;
      obj.size_px = std::max(6, params.height / 8 + ((i + o) % 3) * 2);
      obj.speed = 1.0 + 0.5 * ((i + o) % 3);
      obj.trajectory = (i + o) % 3 == 2 ? Trajectory::Sinusoid : Trajectory::LinearBounce;
      e.spec.objects.push_back(obj);
    }
    e.seed = derive_seed(params.seed, "meta-scene", static_cast<std::uint64_t>(i));
    e.role = "meta-train";
    e.anomaly_seed = 0;
    e.lead_frames = 0;
    e.clip_path = std::string("clips/") + buf + ".ndvf";
    e.labels_path = std::string("clips/") + buf + ".labels.csv";
    m.scenes.push_back(e);
  }
  // target scenes: crosses (a shape never seen in meta-train) at unseen
  // speeds plus a fast second object, so scene configurations vary over time
  // and anomalies land after the normal-only lead
  for (int i = 0; i < params.target_scenes; ++i) {
    SceneEntry e;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "target%02d", i);
    e.spec.scene_id = buf;
    e.spec.background = bgs[(i + 1) % 4];
    e.spec.height = params.height;
    e.spec.width = params.width;
    e.spec.frame_count = params.frame_count;
    ObjectSpec obj;
    obj.shape = ShapeKind::Cross;
    obj.size_px = std::max(7, params.height / 6);
    obj.speed = 3.0 + params.target_shift + 0.75 * i;
    obj.trajectory = i % 2 == 0 ? Trajectory::LinearBounce : Trajectory::Sinusoid;
    obj.intensity = 0.15 - 0.1 * params.target_shift + 0.1 * (i % 3);
    e.spec.objects.push_back(obj);
    ObjectSpec second;
    second.shape = ShapeKind::Disc;
    second.size_px = std::max(5, params.height / 9);
    second.speed = 2.75 + 0.5 * params.target_shift + 0.25 * i;
    second.trajectory = i % 2 == 0 ? Trajectory::Sinusoid : Trajectory::LinearBounce;
    second.intensity = 0.3 - 0.1 * params.target_shift + 0.05 * (i % 3);
    e.spec.objects.push_back(second);
    e.seed = derive_seed(params.seed, "target-scene", static_cast<std::uint64_t>(i));
    e.role = "target";
    e.anomaly_seed = derive_seed(params.seed, "target-anomaly", static_cast<std::uint64_t>(i));
    e.lead_frames = params.lead_frames;
    int post = params.frame_count - params.lead_frames;
    if (post < 24) {
      throw ConfigError("benchmark: frame_count too small for lead_frames + anomalies");
    }
    int len = std::max(6, post / 10);
    const AnomalyKind kinds[] = {AnomalyKind::UnseenShape, AnomalyKind::SpeedMultiplier,
                                 AnomalyKind::Teleport};
    for (int a = 0; a < 3; ++a) {
      AnomalySpec an;
      an.kind = kinds[(a + i) % 3];
      an.start_frame = params.lead_frames + post * (1 + 2 * a) / 8;
      an.end_frame = std::min(params.frame_count, an.start_frame + len);
      an.object_index = 0;
      an.multiplier = 3.0;
      an.shape = (a + i) % 2 == 0 ? ShapeKind::Triangle : ShapeKind::Ring;
      an.size_px = std::max(8, params.height / 6);
      an.speed = 1.5;
      e.anomalies.push_back(an);
    }
    e.clip_path = std::string("clips/") + buf + ".ndvf";
    e.labels_path = std::string("clips/") + buf + ".labels.csv";
    m.scenes.push_back(e);
  }
  return m;
}

}  // namespace ndvad::scenesynth
