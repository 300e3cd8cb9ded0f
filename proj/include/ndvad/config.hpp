#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ndvad/meta.hpp"
#include "ndvad/model.hpp"
#include "ndvad/scenesynth.hpp"

namespace ndvad::config {

struct TrainConfig {
  int pretrain_steps = 2000;
  int dpu_steps = 2000;
  int meta_steps = 1000;
  double lr = 1e-4;
  int batch = 4;
  double momentum = 0.0;
  double clip_norm = 5.0;
};

struct SceneConfig {
  int meta_scenes = 8;
  int target_scenes = 3;
  int frame_count = 500;
  double target_shift = 0.5;
  std::optional<int> lead_frames;  // derived from k_list/t_in when absent
  std::vector<scenesynth::SceneEntry> custom;  // replaces the default benchmark
};

struct ScoreConfig {
  bool normalize_per_video = true;
  std::string aggregate = "concat";  // or "mean"
};

struct RunConfig {
  std::uint64_t seed = 1;
  DType precision = DType::F32;
  std::string out_dir = "out";
  std::string data_dir = "data";
  model::ModelConfig model;  // backbone + dpu + loss weights
  meta::MetaConfig meta;
  std::vector<int> k_list = {0, 1, 5, 10};
  TrainConfig train;
  SceneConfig scenes;
  ScoreConfig score;

  int lead_frames() const;  // explicit or derived
  void validate() const;
};

// Precedence: defaults < config file < NDVAD_SEED < overrides. Unknown keys
// anywhere are rejected with a ConfigError naming the key.
RunConfig load(const std::string& config_path_or_empty, const std::string& overrides_json);
RunConfig from_json_text(const std::string& text);

std::string to_json_text(const RunConfig& cfg);   // canonical effective config
std::string config_hash(const RunConfig& cfg);    // 16-hex FNV-1a of the canonical text

}  // namespace ndvad::config
