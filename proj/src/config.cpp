#include "ndvad/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include <json.hpp>

using nlohmann::json;

namespace ndvad::config {

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <class T>
void get_to(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

void parse_backbone(const json& j, backbone::AEConfig& cfg) {
  check_keys(j, {"t_in", "frame_size", "frame_channels", "stage_channels", "plug_stage"},
             "backbone");
  get_to(j, "t_in", cfg.t_in);
  if (j.contains("frame_size")) {
    auto fs = j.at("frame_size");
    if (!fs.is_array() || fs.size() != 2) {
      throw ConfigError("backbone.frame_size must be [height, width]");
    }
    cfg.height = fs[0].get<int>();
    cfg.width = fs[1].get<int>();
  }
  get_to(j, "frame_channels", cfg.frame_channels);
  get_to(j, "stage_channels", cfg.stage_channels);
  get_to(j, "plug_stage", cfg.plug_stage);
}

void parse_dpu(const json& j, model::ModelConfig& cfg) {
  check_keys(j, {"prototypes", "beta_mode"}, "dpu");
  get_to(j, "prototypes", cfg.prototypes);
  if (j.contains("beta_mode")) {
    cfg.beta_mode = dpu::beta_mode_from_string(j.at("beta_mode").get<std::string>());
  }
}

void parse_loss(const json& j, dpu::LossWeights& w) {
  check_keys(j, {"lambda1", "lambda2", "gamma", "lambda_s"}, "loss");
  get_to(j, "lambda1", w.lambda1);
  get_to(j, "lambda2", w.lambda2);
  get_to(j, "gamma", w.gamma);
  get_to(j, "lambda_s", w.lambda_s);
}

void parse_meta(const json& j, meta::MetaConfig& m, std::vector<int>& k_list) {
  check_keys(j,
             {"train_k", "k_list", "t_iter", "mode", "outer_lr_theta", "outer_lr_alpha",
              "episodes_per_batch", "alpha_init", "alpha_max"},
             "meta");
  get_to(j, "train_k", m.train_k);
  get_to(j, "k_list", k_list);
  get_to(j, "t_iter", m.t_iter);
  if (j.contains("mode")) m.mode = meta::mode_from_string(j.at("mode").get<std::string>());
  get_to(j, "outer_lr_theta", m.outer_lr_theta);
  get_to(j, "outer_lr_alpha", m.outer_lr_alpha);
  get_to(j, "episodes_per_batch", m.episodes_per_batch);
  get_to(j, "alpha_init", m.alpha_init);
  get_to(j, "alpha_max", m.alpha_max);
}

void parse_train(const json& j, TrainConfig& t) {
  check_keys(j,
             {"pretrain_steps", "dpu_steps", "meta_steps", "lr", "batch", "momentum",
              "clip_norm"},
             "train");
  get_to(j, "pretrain_steps", t.pretrain_steps);
  get_to(j, "dpu_steps", t.dpu_steps);
  get_to(j, "meta_steps", t.meta_steps);
  get_to(j, "lr", t.lr);
  get_to(j, "batch", t.batch);
  get_to(j, "momentum", t.momentum);
  get_to(j, "clip_norm", t.clip_norm);
}

scenesynth::SceneEntry parse_custom_scene(const json& j) {
  check_keys(j,
             {"scene_id", "background", "objects", "frame_count", "seed", "role", "anomalies",
              "anomaly_seed", "lead_frames"},
             "scenes.custom[]");
  scenesynth::SceneEntry e;
  e.spec.scene_id = j.at("scene_id").get<std::string>();
  e.spec.background = scenesynth::background_from_string(j.at("background").get<std::string>());
  for (const auto& o : j.at("objects")) {
    check_keys(o, {"shape", "size_px", "speed", "trajectory", "intensity"},
               "scenes.custom[].objects[]");
    scenesynth::ObjectSpec obj;
    obj.shape = scenesynth::shape_from_string(o.at("shape").get<std::string>());
    obj.size_px = o.at("size_px").get<int>();
    obj.speed = o.at("speed").get<double>();
    if (o.contains("trajectory")) {
      obj.trajectory = scenesynth::trajectory_from_string(o.at("trajectory").get<std::string>());
    }
    get_to(o, "intensity", obj.intensity);
    e.spec.objects.push_back(obj);
  }
  get_to(j, "frame_count", e.spec.frame_count);
  get_to(j, "seed", e.seed);
  e.role = j.at("role").get<std::string>();
  if (e.role != "meta-train" && e.role != "target") {
    throw ConfigError("scenes.custom[].role must be 'meta-train' or 'target', got '" + e.role +
                      "'");
  }
  if (j.contains("anomalies")) {
    for (const auto& a : j.at("anomalies")) {
      check_keys(a,
                 {"kind", "start_frame", "end_frame", "object_index", "multiplier", "shape",
                  "size_px", "speed"},
                 "scenes.custom[].anomalies[]");
      scenesynth::AnomalySpec an;
      an.kind = scenesynth::anomaly_from_string(a.at("kind").get<std::string>());
      an.start_frame = a.at("start_frame").get<int>();
      an.end_frame = a.at("end_frame").get<int>();
      get_to(a, "object_index", an.object_index);
      get_to(a, "multiplier", an.multiplier);
      if (a.contains("shape")) {
        an.shape = scenesynth::shape_from_string(a.at("shape").get<std::string>());
      }
      get_to(a, "size_px", an.size_px);
      get_to(a, "speed", an.speed);
      e.anomalies.push_back(an);
    }
  }
  get_to(j, "anomaly_seed", e.anomaly_seed);
  get_to(j, "lead_frames", e.lead_frames);
  e.clip_path = "clips/" + e.spec.scene_id + ".ndvf";
  e.labels_path = "clips/" + e.spec.scene_id + ".labels.csv";
  return e;
}

void parse_scenes(const json& j, SceneConfig& s) {
  check_keys(j,
             {"meta_scenes", "target_scenes", "frame_count", "target_shift", "lead_frames",
              "custom"},
             "scenes");
  get_to(j, "meta_scenes", s.meta_scenes);
  get_to(j, "target_scenes", s.target_scenes);
  get_to(j, "frame_count", s.frame_count);
  get_to(j, "target_shift", s.target_shift);
  if (j.contains("lead_frames") && !j.at("lead_frames").is_null()) {
    s.lead_frames = j.at("lead_frames").get<int>();
  }
  if (j.contains("custom")) {
    s.custom.clear();
    for (const auto& e : j.at("custom")) s.custom.push_back(parse_custom_scene(e));
  }
}

void parse_score(const json& j, ScoreConfig& s) {
  check_keys(j, {"normalize_per_video", "aggregate"}, "score");
  get_to(j, "normalize_per_video", s.normalize_per_video);
  get_to(j, "aggregate", s.aggregate);
  if (s.aggregate != "concat" && s.aggregate != "mean") {
    throw ConfigError("score.aggregate must be 'concat' or 'mean', got '" + s.aggregate + "'");
  }
}

void apply_json(const json& j, RunConfig& cfg) {
  check_keys(j,
             {"seed", "precision", "out_dir", "data_dir", "backbone", "dpu", "loss", "meta",
              "train", "scenes", "score"},
             "");
  get_to(j, "seed", cfg.seed);
  if (j.contains("precision")) {
    std::string p = j.at("precision").get<std::string>();
    if (p == "f32") cfg.precision = DType::F32;
    else if (p == "f64") cfg.precision = DType::F64;
    else throw ConfigError("precision must be 'f32' or 'f64', got '" + p + "'");
  }
  get_to(j, "out_dir", cfg.out_dir);
  get_to(j, "data_dir", cfg.data_dir);
  if (j.contains("backbone")) parse_backbone(j.at("backbone"), cfg.model.ae);
  if (j.contains("dpu")) parse_dpu(j.at("dpu"), cfg.model);
  if (j.contains("loss")) parse_loss(j.at("loss"), cfg.model.loss);
  if (j.contains("meta")) parse_meta(j.at("meta"), cfg.meta, cfg.k_list);
  if (j.contains("train")) parse_train(j.at("train"), cfg.train);
  if (j.contains("scenes")) parse_scenes(j.at("scenes"), cfg.scenes);
  if (j.contains("score")) parse_score(j.at("score"), cfg.score);
}

json scenes_to_json(const SceneConfig& s);

}  // namespace

int RunConfig::lead_frames() const {
  if (scenes.lead_frames) return *scenes.lead_frames;
  int max_k = 0;
  for (int k : k_list) max_k = std::max(max_k, k);
  return max_k * (model.ae.t_in + 1) + 2 * model.ae.t_in;
}

void RunConfig::validate() const {
  model.validate();
  meta.validate();
  if (k_list.empty()) throw ConfigError("meta.k_list must be non-empty");
  for (int k : k_list) {
    if (k < 0) throw ConfigError("meta.k_list entries must be >= 0");
  }
  if (train.pretrain_steps < 0 || train.dpu_steps < 0 || train.meta_steps < 0) {
    throw ConfigError("train step counts must be >= 0");
  }
  if (train.batch < 1) throw ConfigError("train.batch must be >= 1");
  if (scenes.custom.empty()) {
    if (scenes.meta_scenes < 1 || scenes.target_scenes < 1) {
      throw ConfigError("scenes.meta_scenes and scenes.target_scenes must be >= 1");
    }
    if (scenes.frame_count < 8) throw ConfigError("scenes.frame_count too small");
  }
  if (out_dir.empty() || data_dir.empty()) {
    throw ConfigError("out_dir and data_dir must be non-empty");
  }
}

RunConfig from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  apply_json(j, cfg);
  cfg.validate();
  return cfg;
}

RunConfig load(const std::string& config_path, const std::string& overrides_json) {
  json merged = json::object();
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("cannot open config file '" + config_path + "'");
    try {
      is >> merged;
    } catch (const json::exception& e) {
      throw ConfigError("config file '" + config_path + "' is not valid JSON: " + e.what());
    }
  }
  RunConfig cfg;
  apply_json(merged, cfg);  // validates file keys

  if (const char* env = std::getenv("NDVAD_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (...) {
      throw ConfigError(std::string("NDVAD_SEED is not an integer: '") + env + "'");
    }
  }

  if (!overrides_json.empty()) {
    json ov;
    try {
      ov = json::parse(overrides_json);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("overrides are not valid JSON: ") + e.what());
    }
    apply_json(ov, cfg);
  }
  cfg.validate();
  return cfg;
}

namespace {

json object_to_json_cfg(const scenesynth::ObjectSpec& o) {
  return json{{"shape", scenesynth::to_string(o.shape)},
              {"size_px", o.size_px},
              {"speed", o.speed},
              {"trajectory", scenesynth::to_string(o.trajectory)},
              {"intensity", o.intensity}};
}

json scenes_to_json(const SceneConfig& s) {
  json out{{"meta_scenes", s.meta_scenes},
           {"target_scenes", s.target_scenes},
           {"frame_count", s.frame_count},
           {"target_shift", s.target_shift}};
  if (s.lead_frames) out["lead_frames"] = *s.lead_frames;
  else out["lead_frames"] = nullptr;
  if (!s.custom.empty()) {
    json list = json::array();
    for (const auto& e : s.custom) {
      json objs = json::array();
      for (const auto& o : e.spec.objects) objs.push_back(object_to_json_cfg(o));
      json anomalies = json::array();
      for (const auto& a : e.anomalies) {
        anomalies.push_back(json{{"kind", scenesynth::to_string(a.kind)},
                                 {"start_frame", a.start_frame},
                                 {"end_frame", a.end_frame},
                                 {"object_index", a.object_index},
                                 {"multiplier", a.multiplier},
                                 {"shape", scenesynth::to_string(a.shape)},
                                 {"size_px", a.size_px},
                                 {"speed", a.speed}});
      }
      list.push_back(json{{"scene_id", e.spec.scene_id},
                          {"background", scenesynth::to_string(e.spec.background)},
                          {"objects", objs},
                          {"frame_count", e.spec.frame_count},
                          {"seed", e.seed},
                          {"role", e.role},
                          {"anomalies", anomalies},
                          {"anomaly_seed", e.anomaly_seed},
                          {"lead_frames", e.lead_frames}});
    }
    out["custom"] = list;
  }
  return out;
}

}  // namespace

std::string to_json_text(const RunConfig& cfg) {
  json j{
      {"seed", cfg.seed},
      {"precision", cfg.precision == DType::F32 ? "f32" : "f64"},
      {"out_dir", cfg.out_dir},
      {"data_dir", cfg.data_dir},
      {"backbone",
       {{"t_in", cfg.model.ae.t_in},
        {"frame_size", {cfg.model.ae.height, cfg.model.ae.width}},
        {"frame_channels", cfg.model.ae.frame_channels},
        {"stage_channels", cfg.model.ae.stage_channels},
        {"plug_stage", cfg.model.ae.plug_stage}}},
      {"dpu",
       {{"prototypes", cfg.model.prototypes},
        {"beta_mode", dpu::to_string(cfg.model.beta_mode)}}},
      {"loss",
       {{"lambda1", cfg.model.loss.lambda1},
        {"lambda2", cfg.model.loss.lambda2},
        {"gamma", cfg.model.loss.gamma},
        {"lambda_s", cfg.model.loss.lambda_s}}},
      {"meta",
       {{"train_k", cfg.meta.train_k},
        {"k_list", cfg.k_list},
        {"t_iter", cfg.meta.t_iter},
        {"mode", meta::to_string(cfg.meta.mode)},
        {"outer_lr_theta", cfg.meta.outer_lr_theta},
        {"outer_lr_alpha", cfg.meta.outer_lr_alpha},
        {"episodes_per_batch", cfg.meta.episodes_per_batch},
        {"alpha_init", cfg.meta.alpha_init},
        {"alpha_max", cfg.meta.alpha_max}}},
      {"train",
       {{"pretrain_steps", cfg.train.pretrain_steps},
        {"dpu_steps", cfg.train.dpu_steps},
        {"meta_steps", cfg.train.meta_steps},
        {"lr", cfg.train.lr},
        {"batch", cfg.train.batch},
        {"momentum", cfg.train.momentum},
        {"clip_norm", cfg.train.clip_norm}}},
      {"scenes", scenes_to_json(cfg.scenes)},
      {"score",
       {{"normalize_per_video", cfg.score.normalize_per_video},
        {"aggregate", cfg.score.aggregate}}},
  };
  return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  std::string text = to_json_text(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ndvad::config
