#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ndvad/tensor.hpp"

namespace ndvad::scenesynth {

enum class Background { Flat, Gradient, Checker, Noise };
enum class ShapeKind { Square, Disc, Cross, Triangle, Ring };
enum class Trajectory { LinearBounce, Sinusoid };
enum class AnomalyKind { UnseenShape, SpeedMultiplier, Teleport };

std::string to_string(Background b);
std::string to_string(ShapeKind s);
std::string to_string(Trajectory t);
std::string to_string(AnomalyKind a);
Background background_from_string(const std::string& s);
ShapeKind shape_from_string(const std::string& s);
Trajectory trajectory_from_string(const std::string& s);
AnomalyKind anomaly_from_string(const std::string& s);

struct ObjectSpec {
  ShapeKind shape = ShapeKind::Square;
  int size_px = 10;
  double speed = 1.0;  // px/frame
  Trajectory trajectory = Trajectory::LinearBounce;
  double intensity = -1.0;  // pixel value; negative = derived from the scene seed
};

struct SceneSpec {
  std::string scene_id;
  Background background = Background::Flat;
  std::vector<ObjectSpec> objects;
  int height = 64;
  int width = 64;
  int frame_count = 500;
  void validate() const;
};

struct AnomalySpec {
  AnomalyKind kind = AnomalyKind::UnseenShape;
  int start_frame = 0;
  int end_frame = 0;  // interval [start_frame, end_frame)
  int object_index = 0;
  double multiplier = 3.0;                 // SpeedMultiplier
  ShapeKind shape = ShapeKind::Triangle;   // UnseenShape
  int size_px = 12;
  double speed = 1.5;
};

struct VideoClip {
  int channels = 1;
  int height = 0;
  int width = 0;
  DType dtype = DType::F32;
  std::vector<float> pixels;         // frame-major [t][c][h][w], values in [-1,1]
  std::vector<std::uint8_t> labels;  // one per frame, 1 = anomalous

  int frame_count() const { return static_cast<int>(labels.size()); }
  std::size_t frame_size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  const float* frame_data(int t) const { return pixels.data() + frame_size() * t; }
  Tensor frame(int t, DType dtype = DType::F32) const;  // [c,h,w]
};

// Object center at effective time t (continuous); exported so tests can
// compare against an independent trajectory simulation.
struct ObjectMotion {
  double x0, y0;      // base position
  double dx, dy;      // unit direction (LinearBounce)
  double ax, ay;      // amplitudes (Sinusoid)
  double phx, phy;    // phases
  double cx, cy;      // orbit center
};
ObjectMotion object_motion(const SceneSpec& spec, const ObjectSpec& obj, std::uint64_t scene_seed,
                           int object_index);
std::pair<double, double> object_center(const SceneSpec& spec, const ObjectSpec& obj,
                                        const ObjectMotion& m, double t);

VideoClip generate_scene(const SceneSpec& spec, std::uint64_t seed);

// Re-renders the frames inside [start_frame, end_frame) with the anomaly
// applied and labels set; frames outside the interval are byte-identical.
VideoClip inject_anomaly(const VideoClip& clip, const SceneSpec& spec, std::uint64_t scene_seed,
                         const AnomalySpec& anomaly, std::uint64_t anomaly_seed);

// Frame container (magic "NDVF") + sibling "frame_index,label" CSV.
inline constexpr std::uint16_t kNdvfVersion = 1;
void write_clip(const std::string& ndvf_path, const std::string& labels_path,
                const VideoClip& clip);
VideoClip read_clip(const std::string& ndvf_path, const std::string& labels_path);

// ---- sliding-window pair construction ----
struct PairIndex {
  int start;        // first input frame
  int frame_index;  // index of the predicted frame y
};
// Exactly frame_count - t_in pairs; x stacks frames [start, start+t_in) along
// channels and y is the frame at frame_index = start + t_in.
std::vector<PairIndex> build_pairs(const VideoClip& clip, int t_in);
Tensor pair_input(const VideoClip& clip, const PairIndex& p, int t_in,
                  DType dtype = DType::F32);                                  // [t_in*c,h,w]
Tensor pair_target(const VideoClip& clip, const PairIndex& p, DType dtype = DType::F32);  // [c,h,w]

// ---- dataset on disk ----
struct SceneEntry {
  SceneSpec spec;
  std::uint64_t seed = 0;
  std::string role;  // "meta-train" | "target"
  std::vector<AnomalySpec> anomalies;
  std::uint64_t anomaly_seed = 0;
  int lead_frames = 0;  // normal-only lead kept free of anomalies (target scenes)
  std::string clip_path;    // relative to the dataset dir
  std::string labels_path;
};

struct DatasetManifest {
  int version = 1;
  std::vector<SceneEntry> scenes;
};

VideoClip render_entry(const SceneEntry& entry);

void write_dataset(const DatasetManifest& manifest, const std::string& dir);
DatasetManifest read_manifest(const std::string& dir);
VideoClip load_clip(const std::string& dir, const SceneEntry& entry);

// ---- default benchmark ----
struct BenchmarkParams {
  int meta_scenes = 8;
  int target_scenes = 3;
  int frame_count = 500;
  int height = 64;
  int width = 64;
  int lead_frames = 60;
  // 0 = mild domain gap between meta-train and target scenes, 1 = strong
  // (dimmer, faster target objects)
  double target_shift = 0.5;
  std::uint64_t seed = 1;
};
DatasetManifest default_benchmark(const BenchmarkParams& params);

}  // namespace ndvad::scenesynth
