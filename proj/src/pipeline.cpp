#include "ndvad/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ndvad/checkpoint.hpp"
#include "ndvad/meta.hpp"
#include "ndvad/ops.hpp"
#include "ndvad/rng.hpp"
#include "ndvad/scoring.hpp"
#include "ndvad/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ndvad::pipeline {

namespace {

constexpr const char* kToolVersion = "0.1.0";

json provenance(const config::RunConfig& cfg, const std::string& stage) {
  return json{{"stage", stage},
              {"config_hash", config::config_hash(cfg)},
              {"seed", cfg.seed},
              {"tool", "ndvad"},
              {"version", kToolVersion}};
}

void write_text(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(path).parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  os << text;
}

void write_provenance(const std::string& path, const config::RunConfig& cfg,
                      const std::string& stage, json extra = json::object()) {
  json p = provenance(cfg, stage);
  for (auto& [k, v] : extra.items()) p[k] = v;
  write_text(path + ".provenance.json", p.dump(2) + "\n");
}

model::ModelConfig model_cfg(const config::RunConfig& cfg) {
  model::ModelConfig mc = cfg.model;
  mc.ae.dtype = cfg.precision;
  return mc;
}

ParamSet as_trainable(const ParamSet& params) {
  ParamSet out;
  for (const auto& [name, t] : params) out.emplace(name, t.detached(true));
  return out;
}

struct Dataset {
  scenesynth::DatasetManifest manifest;
  std::map<std::string, scenesynth::VideoClip> clips;

  std::vector<const scenesynth::SceneEntry*> by_role(const std::string& role) const {
    std::vector<const scenesynth::SceneEntry*> out;
    for (const auto& e : manifest.scenes) {
      if (e.role == role) out.push_back(&e);
    }
    return out;
  }
};

Dataset load_dataset(const config::RunConfig& cfg) {
  Dataset ds;
  ds.manifest = scenesynth::read_manifest(cfg.data_dir);
  if (ds.manifest.scenes.empty()) throw DataError("dataset in '" + cfg.data_dir + "' is empty");
  for (const auto& e : ds.manifest.scenes) {
    ds.clips.emplace(e.spec.scene_id, scenesynth::load_clip(cfg.data_dir, e));
  }
  return ds;
}

scenesynth::DatasetManifest build_manifest(const config::RunConfig& cfg) {
  if (!cfg.scenes.custom.empty()) {
    scenesynth::DatasetManifest m;
    for (auto entry : cfg.scenes.custom) {
      entry.spec.height = cfg.model.ae.height;
      entry.spec.width = cfg.model.ae.width;
      if (entry.role == "target") {
        if (entry.anomalies.empty()) {
          throw ConfigError("target scene '" + entry.spec.scene_id +
                            "' must declare at least one anomaly");
        }
        if (entry.lead_frames == 0) entry.lead_frames = cfg.lead_frames();
        for (const auto& a : entry.anomalies) {
          if (a.start_frame < entry.lead_frames) {
            throw ConfigError("anomaly in scene '" + entry.spec.scene_id +
                              "' intrudes into the normal-only lead");
          }
        }
      } else if (!entry.anomalies.empty()) {
        throw ConfigError("meta-train scene '" + entry.spec.scene_id +
                          "' must not declare anomalies");
      }
      m.scenes.push_back(std::move(entry));
    }
    return m;
  }
  scenesynth::BenchmarkParams p;
  p.meta_scenes = cfg.scenes.meta_scenes;
  p.target_scenes = cfg.scenes.target_scenes;
  p.frame_count = cfg.scenes.frame_count;
  p.target_shift = cfg.scenes.target_shift;
  p.height = cfg.model.ae.height;
  p.width = cfg.model.ae.width;
  p.lead_frames = cfg.lead_frames();
  p.seed = derive_seed(cfg.seed, "benchmark");
  return scenesynth::default_benchmark(p);
}

void write_step_log(const std::string& path, const std::vector<train::StepLog>& log,
                    const config::RunConfig& cfg, const std::string& stage) {
  json rows = json::array();
  for (const auto& e : log) {
    rows.push_back(json{{"step", e.step},
                        {"total", e.total},
                        {"frame", e.frame},
                        {"compact", e.compact},
                        {"diverse", e.diverse}});
  }
  write_text(path, rows.dump(2) + "\n");
  write_provenance(path, cfg, stage);
}

scenesynth::VideoClip head_clip(const scenesynth::VideoClip& clip, int frames) {
  scenesynth::VideoClip out;
  out.channels = clip.channels;
  out.height = clip.height;
  out.width = clip.width;
  out.dtype = clip.dtype;
  out.pixels.assign(clip.pixels.begin(), clip.pixels.begin() + clip.frame_size() * frames);
  out.labels.assign(clip.labels.begin(), clip.labels.begin() + frames);
  return out;
}

// ---- checkpoint split / eval helpers ----

struct LoadedMeta {
  meta::MetaState state;
  bool has_alpha = false;
};

LoadedMeta split_checkpoint(const ParamSet& raw) {
  LoadedMeta out;
  for (const auto& [name, t] : raw) {
    if (name.rfind("alpha.", 0) == 0) {
      out.state.alpha.emplace(name.substr(6), t.detached(true));
      out.has_alpha = true;
    } else if (name.rfind("enc.", 0) == 0) {
      out.state.encoder.emplace(name, t.detached(false));
    } else {
      out.state.theta0.emplace(name, t.detached(true));
    }
  }
  return out;
}

struct SceneEval {
  std::string scene_id;
  scoring::ScoreSeries series;  // normalized when configured
  double auc_fp, auc_fr, auc_combined;
};

struct EvalOutcome {
  std::vector<SceneEval> scenes;
  double auc_fp = 0.0, auc_fr = 0.0, auc_combined = 0.0;
};

// Scores every target scene with the given parameters; aggregation follows
// cfg.score (per-video normalization, concat or mean).
EvalOutcome evaluate_targets(const config::RunConfig& cfg, const Dataset& ds,
                             const model::ModelConfig& mc,
                             const std::function<ParamSet(const scenesynth::SceneEntry&)>&
                                 params_for_scene,
                             bool with_dpu) {
  EvalOutcome out;
  std::vector<double> all_fp, all_fr, all_s;
  std::vector<int> all_labels;
  std::vector<double> v_fp, v_fr, v_s;
  for (const auto* entry : ds.by_role("target")) {
    const auto& clip = ds.clips.at(entry->spec.scene_id);
    ParamSet params = params_for_scene(*entry);
    int first = std::max(entry->lead_frames, mc.ae.t_in);
    scoring::ScoreSeries series =
        scoring::score_frames(mc, params, with_dpu, clip, mc.loss.lambda_s, first);
    if (cfg.score.normalize_per_video) {
      series = scoring::normalize_per_video(series, mc.loss.lambda_s);
    }
    SceneEval se;
    se.scene_id = entry->spec.scene_id;
    se.auc_fp = scoring::auc(series.s_fra, series.labels);
    se.auc_fr = with_dpu ? scoring::auc(series.s_fea, series.labels) : 0.0;
    se.auc_combined = scoring::auc(series.s, series.labels);
    se.series = series;
    v_fp.push_back(se.auc_fp);
    v_fr.push_back(se.auc_fr);
    v_s.push_back(se.auc_combined);
    all_fp.insert(all_fp.end(), series.s_fra.begin(), series.s_fra.end());
    all_fr.insert(all_fr.end(), series.s_fea.begin(), series.s_fea.end());
    all_s.insert(all_s.end(), series.s.begin(), series.s.end());
    all_labels.insert(all_labels.end(), series.labels.begin(), series.labels.end());
    out.scenes.push_back(std::move(se));
  }
  if (out.scenes.empty()) throw DataError("no target scenes in the dataset");
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  if (cfg.score.aggregate == "mean") {
    out.auc_fp = mean_of(v_fp);
    out.auc_fr = with_dpu ? mean_of(v_fr) : 0.0;
    out.auc_combined = mean_of(v_s);
  } else {
    out.auc_fp = scoring::auc(all_fp, all_labels);
    out.auc_fr = with_dpu ? scoring::auc(all_fr, all_labels) : 0.0;
    out.auc_combined = scoring::auc(all_s, all_labels);
  }
  return out;
}

std::string fmt_auc(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_pgm(const std::string& path, const std::vector<double>& values, int h, int w) {
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  std::string bytes;
  bytes.reserve(values.size());
  for (double v : values) {
    double n = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    bytes.push_back(static_cast<char>(std::lround(n * 255.0)));
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  os << "P5\n" << w << " " << h << "\n255\n" << bytes;
}

}  // namespace

std::string pretrain_ckpt(const config::RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / "pretrain.ndck").string();
}
std::string dpu_ckpt(const config::RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / "dpu.ndck").string();
}
std::string meta_ckpt(const config::RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / "meta.ndck").string();
}

std::string checkpoint_stage(const std::string& ckpt_path) {
  std::ifstream is(ckpt_path + ".provenance.json");
  if (!is) {
    throw ConfigError("checkpoint '" + ckpt_path + "' has no provenance sidecar");
  }
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("provenance for '" + ckpt_path + "' is not valid JSON: " + e.what());
  }
  return j.value("stage", "");
}

void require_stage(const std::string& ckpt_path, const std::string& expected) {
  if (!fs::exists(ckpt_path)) {
    throw ConfigError("expected stage '" + expected + "' checkpoint at '" + ckpt_path +
                      "'; run the earlier stage first");
  }
  std::string got = checkpoint_stage(ckpt_path);
  if (got != expected) {
    throw ConfigError("expected stage '" + expected + "' checkpoint at '" + ckpt_path +
                      "', found stage '" + got + "'");
  }
}

std::string cmd_synth(const config::RunConfig& cfg, bool force) {
  cfg.validate();
  if (fs::exists(cfg.data_dir) && !fs::is_empty(cfg.data_dir) && !force) {
    throw ConfigError("data dir '" + cfg.data_dir + "' is not empty; pass --force to overwrite");
  }
  scenesynth::DatasetManifest manifest = build_manifest(cfg);
  scenesynth::write_dataset(manifest, cfg.data_dir);
  write_provenance((fs::path(cfg.data_dir) / "manifest.json").string(), cfg, "synth");

  int n_meta = 0, n_target = 0;
  for (const auto& e : manifest.scenes) (e.role == "meta-train" ? n_meta : n_target)++;
  json summary{{"dir", cfg.data_dir},
               {"scenes", manifest.scenes.size()},
               {"meta_train", n_meta},
               {"target", n_target},
               {"frame_count", manifest.scenes.front().spec.frame_count}};
  return summary.dump(2);
}

std::string cmd_pretrain(const config::RunConfig& cfg) {
  cfg.validate();
  Dataset ds = load_dataset(cfg);
  auto entries = ds.by_role("meta-train");
  if (entries.empty()) throw DataError("dataset has no meta-train scenes");
  std::vector<const scenesynth::VideoClip*> clips;
  for (const auto* e : entries) clips.push_back(&ds.clips.at(e->spec.scene_id));

  model::ModelConfig mc = model_cfg(cfg);
  ParamSet params = model::build_params(mc, derive_seed(cfg.seed, "init"), false);
  train::SgdOpts opts{cfg.train.lr, cfg.train.momentum, cfg.train.batch,
                      cfg.train.clip_norm};
  auto result = train::run(mc, std::move(params), clips, false, cfg.train.pretrain_steps, opts,
                           derive_seed(cfg.seed, "pretrain"));

  fs::create_directories(cfg.out_dir);
  save_ndck(pretrain_ckpt(cfg), result.params);
  write_provenance(pretrain_ckpt(cfg), cfg, "pretrain");
  write_step_log((fs::path(cfg.out_dir) / "pretrain_log.json").string(), result.log, cfg,
                 "pretrain");
  json summary{{"checkpoint", pretrain_ckpt(cfg)},
               {"steps", cfg.train.pretrain_steps},
               {"final_loss", result.log.empty() ? 0.0 : result.log.back().total}};
  return summary.dump(2);
}

std::string cmd_train(const config::RunConfig& cfg) {
  cfg.validate();
  require_stage(pretrain_ckpt(cfg), "pretrain");
  Dataset ds = load_dataset(cfg);
  auto entries = ds.by_role("meta-train");
  std::vector<const scenesynth::VideoClip*> clips;
  for (const auto* e : entries) clips.push_back(&ds.clips.at(e->spec.scene_id));

  model::ModelConfig mc = model_cfg(cfg);
  ParamSet params = as_trainable(load_ndck(pretrain_ckpt(cfg)));
  auto plug = mc.ae.plug_shape();
  ParamSet psi = dpu::init_attention(mc.prototypes, static_cast<int>(plug.channels),
                                     derive_seed(cfg.seed, "dpu"), mc.ae.dtype);
  params.merge(psi);

  train::SgdOpts opts{cfg.train.lr, cfg.train.momentum, cfg.train.batch,
                      cfg.train.clip_norm};
  auto result = train::run(mc, std::move(params), clips, true, cfg.train.dpu_steps, opts,
                           derive_seed(cfg.seed, "dpu-train"));

  save_ndck(dpu_ckpt(cfg), result.params);
  write_provenance(dpu_ckpt(cfg), cfg, "dpu");
  write_step_log((fs::path(cfg.out_dir) / "dpu_log.json").string(), result.log, cfg, "dpu");
  json summary{{"checkpoint", dpu_ckpt(cfg)},
               {"steps", cfg.train.dpu_steps},
               {"final_loss", result.log.empty() ? 0.0 : result.log.back().total}};
  return summary.dump(2);
}

std::string cmd_meta_train(const config::RunConfig& cfg) {
  cfg.validate();
  require_stage(dpu_ckpt(cfg), "dpu");
  Dataset ds = load_dataset(cfg);
  auto entries = ds.by_role("meta-train");
  if (entries.empty()) throw DataError("dataset has no meta-train scenes");

  model::ModelConfig mc = model_cfg(cfg);
  meta::MetaState state = meta::make_state(as_trainable(load_ndck(dpu_ckpt(cfg))), cfg.meta);
  auto loss_fn = model::pair_loss_with_frozen_encoder(mc, state.encoder);

  json log = json::array();
  int total_clamps = 0;
  for (int step = 0; step < cfg.train.meta_steps; ++step) {
    // episodes from distinct scenes where possible, cycling otherwise
    std::vector<int> order(entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(derive_seed(cfg.seed, "meta-scenes", static_cast<std::uint64_t>(step)));
    rng.shuffle(order);
    std::vector<meta::Episode> episodes;
    for (int i = 0; i < cfg.meta.episodes_per_batch; ++i) {
      const auto* entry = entries[order[i % order.size()]];
      episodes.push_back(meta::sample_episode(
          ds.clips.at(entry->spec.scene_id), entry->spec.scene_id, cfg.meta.train_k,
          mc.ae.t_in,
          derive_seed(cfg.seed, "episode", static_cast<std::uint64_t>(step) * 1000 + i),
          mc.ae.dtype));
    }
    auto stats = meta::meta_step(state, loss_fn, episodes, cfg.meta);
    total_clamps += stats.clamp_events;
    log.push_back(json{{"step", step},
                       {"outer_loss", stats.outer_loss},
                       {"clamp_events", stats.clamp_events}});
  }

  ParamSet ckpt = state.encoder;
  for (const auto& [name, t] : state.theta0) ckpt.emplace(name, t);
  for (const auto& [name, t] : state.alpha) ckpt.emplace("alpha." + name, t);
  save_ndck(meta_ckpt(cfg), ckpt);
  json meta_extra{{"meta",
                   {{"train_k", cfg.meta.train_k},
                    {"t_iter", cfg.meta.t_iter},
                    {"mode", meta::to_string(cfg.meta.mode)},
                    {"outer_lr_theta", cfg.meta.outer_lr_theta},
                    {"outer_lr_alpha", cfg.meta.outer_lr_alpha},
                    {"episodes_per_batch", cfg.meta.episodes_per_batch},
                    {"alpha_init", cfg.meta.alpha_init},
                    {"alpha_max", cfg.meta.alpha_max},
                    {"clamp_events", total_clamps}}}};
  write_provenance(meta_ckpt(cfg), cfg, "meta", meta_extra);
  std::string log_path = (fs::path(cfg.out_dir) / "meta_log.json").string();
  write_text(log_path, log.dump(2) + "\n");
  write_provenance(log_path, cfg, "meta");
  json summary{{"checkpoint", meta_ckpt(cfg)},
               {"meta_steps", cfg.train.meta_steps},
               {"clamp_events", total_clamps}};
  return summary.dump(2);
}

std::string cmd_adapt_eval(const config::RunConfig& cfg) {
  cfg.validate();
  Dataset ds = load_dataset(cfg);
  model::ModelConfig mc = model_cfg(cfg);

  int max_k = *std::max_element(cfg.k_list.begin(), cfg.k_list.end());
  std::string ckpt;
  bool with_dpu = true;
  if (fs::exists(meta_ckpt(cfg))) {
    require_stage(meta_ckpt(cfg), "meta");
    ckpt = meta_ckpt(cfg);
  } else if (max_k == 0 && fs::exists(dpu_ckpt(cfg))) {
    require_stage(dpu_ckpt(cfg), "dpu");
    ckpt = dpu_ckpt(cfg);
  } else if (max_k == 0 && fs::exists(pretrain_ckpt(cfg))) {
    require_stage(pretrain_ckpt(cfg), "pretrain");
    ckpt = pretrain_ckpt(cfg);
    with_dpu = false;
  } else {
    throw ConfigError("expected stage 'meta' checkpoint at '" + meta_ckpt(cfg) +
                      "'; run meta-train first (k > 0 requires learned step sizes)");
  }

  LoadedMeta loaded = split_checkpoint(load_ndck(ckpt));
  auto loss_fn = model::pair_loss_with_frozen_encoder(mc, loaded.state.encoder);

  fs::path eval_dir = fs::path(cfg.out_dir) / "eval";
  fs::create_directories(eval_dir);

  json all_summaries = json::object();
  for (int k : cfg.k_list) {
    if (k > 0 && !loaded.has_alpha) {
      throw ConfigError("k = " + std::to_string(k) + " requires a meta checkpoint with alpha");
    }
    auto params_for_scene = [&](const scenesynth::SceneEntry& entry) {
      const auto& clip = ds.clips.at(entry.spec.scene_id);
      if (entry.lead_frames <= 0 && k > 0) {
        throw DataError("scene '" + entry.spec.scene_id + "' has no adaptation lead");
      }
      ParamSet theta = loaded.state.theta0;
      if (k > 0) {
        int need = k * (mc.ae.t_in + 1);
        if (need > entry.lead_frames) {
          throw DataError("k*(t_in+1) = " + std::to_string(need) +
                          " exceeds the adaptation clip of " +
                          std::to_string(entry.lead_frames) + " frames for scene '" +
                          entry.spec.scene_id + "'");
        }
        theta = meta::adapt(loaded.state, loss_fn, head_clip(clip, entry.lead_frames), k,
                            mc.ae.t_in, cfg.meta, mc.ae.dtype);
      }
      ParamSet full = loaded.state.encoder;
      for (const auto& [name, t] : theta) full.emplace(name, t);
      return full;
    };

    EvalOutcome outcome = evaluate_targets(cfg, ds, mc, params_for_scene, with_dpu);

    json per_video = json::object();
    std::vector<double> agg_scores;
    std::vector<int> agg_labels;
    for (const auto& se : outcome.scenes) {
      per_video[se.scene_id] = se.auc_combined;
      std::string csv =
          (eval_dir / ("scores_k" + std::to_string(k) + "_" + se.scene_id + ".csv")).string();
      scoring::write_score_csv(csv, se.series);
      write_provenance(csv, cfg, "adapt-eval");
      agg_scores.insert(agg_scores.end(), se.series.s.begin(), se.series.s.end());
      agg_labels.insert(agg_labels.end(), se.series.labels.begin(), se.series.labels.end());
    }
    scoring::RocCurve curve = scoring::roc_curve(agg_scores, agg_labels);
    std::string roc_path = (eval_dir / ("roc_k" + std::to_string(k) + ".csv")).string();
    scoring::write_roc_csv(roc_path, curve);
    write_provenance(roc_path, cfg, "adapt-eval");

    json ks{{"k", k},
            {"auc", outcome.auc_combined},
            {"auc_fp", outcome.auc_fp},
            {"auc_fr", outcome.auc_fr},
            {"per_video", per_video},
            {"normalized", cfg.score.normalize_per_video},
            {"aggregate", cfg.score.aggregate}};
    std::string sum_path = (eval_dir / ("summary_k" + std::to_string(k) + ".json")).string();
    write_text(sum_path, ks.dump(2) + "\n");
    write_provenance(sum_path, cfg, "adapt-eval");
    all_summaries[std::to_string(k)] = ks;
  }

  json overall{{"checkpoint", ckpt}, {"k", all_summaries}};
  std::string sum_path = (eval_dir / "summary.json").string();
  write_text(sum_path, overall.dump(2) + "\n");
  write_provenance(sum_path, cfg, "adapt-eval");
  return overall.dump(2);
}

std::string cmd_ablate(const config::RunConfig& cfg, const std::string& study) {
  cfg.validate();
  if (study != "component" && study != "resolution" && study != "prototypes") {
    throw ConfigError("unknown ablation study '" + study +
                      "' (expected component, resolution or prototypes)");
  }
  Dataset ds = load_dataset(cfg);
  model::ModelConfig mc = model_cfg(cfg);

  std::string csv = "setting,auc_fp,auc_fr,auc_combined\n";
  auto row = [&](const std::string& setting, double fp, double fr, double comb) {
    csv += setting + "," + (std::isnan(fp) ? "nan" : fmt_auc(fp)) + "," +
           (std::isnan(fr) ? "nan" : fmt_auc(fr)) + "," +
           (std::isnan(comb) ? "nan" : fmt_auc(comb)) + "\n";
  };
  const double NaN = std::nan("");

  auto eval_params = [&](const model::ModelConfig& m, const ParamSet& params, bool with_dpu) {
    return evaluate_targets(cfg, ds, m, [&](const scenesynth::SceneEntry&) { return params; },
                            with_dpu);
  };

  if (study == "component") {
    require_stage(pretrain_ckpt(cfg), "pretrain");
    require_stage(dpu_ckpt(cfg), "dpu");
    ParamSet base = load_ndck(pretrain_ckpt(cfg));
    EvalOutcome b = eval_params(mc, base, false);
    row("baseline_fp", b.auc_fp, NaN, NaN);
    ParamSet full = load_ndck(dpu_ckpt(cfg));
    EvalOutcome d = eval_params(mc, full, true);
    row("dpu_fp", d.auc_fp, NaN, NaN);
    row("dpu_fr", NaN, d.auc_fr, NaN);
    row("dpu_both", NaN, NaN, d.auc_combined);
  } else if (study == "resolution") {
    auto meta_entries = ds.by_role("meta-train");
    std::vector<const scenesynth::VideoClip*> clips;
    for (const auto* e : meta_entries) clips.push_back(&ds.clips.at(e->spec.scene_id));
    train::SgdOpts opts{cfg.train.lr, cfg.train.momentum, cfg.train.batch,
                      cfg.train.clip_norm};
    for (int plug = 1; plug <= mc.ae.n_stages() + 1; ++plug) {
      model::ModelConfig m2 = mc;
      m2.ae.plug_stage = plug;
      ParamSet p = model::build_params(m2, derive_seed(cfg.seed, "init"), false);
      auto pre = train::run(m2, std::move(p), clips, false, cfg.train.pretrain_steps, opts,
                            derive_seed(cfg.seed, "pretrain"));
      auto plug_shape = m2.ae.plug_shape();
      ParamSet psi = dpu::init_attention(m2.prototypes, static_cast<int>(plug_shape.channels),
                                         derive_seed(cfg.seed, "dpu"), m2.ae.dtype);
      ParamSet withpsi = std::move(pre.params);
      withpsi.merge(psi);
      auto trained = train::run(m2, std::move(withpsi), clips, true, cfg.train.dpu_steps, opts,
                                derive_seed(cfg.seed, "dpu-train"));
      EvalOutcome e = eval_params(m2, trained.params, true);
      char setting[64];
      std::snprintf(setting, sizeof(setting), "plug%d_%lldx%lldx%lld", plug,
                    static_cast<long long>(plug_shape.height),
                    static_cast<long long>(plug_shape.width),
                    static_cast<long long>(plug_shape.channels));
      row(setting, e.auc_fp, e.auc_fr, e.auc_combined);
    }
  } else {  // prototypes
    require_stage(pretrain_ckpt(cfg), "pretrain");
    auto meta_entries = ds.by_role("meta-train");
    std::vector<const scenesynth::VideoClip*> clips;
    for (const auto* e : meta_entries) clips.push_back(&ds.clips.at(e->spec.scene_id));
    train::SgdOpts opts{cfg.train.lr, cfg.train.momentum, cfg.train.batch,
                      cfg.train.clip_norm};
    ParamSet base = load_ndck(pretrain_ckpt(cfg));
    for (int m_count : {1, 5, 10, 20, 40}) {
      model::ModelConfig m2 = mc;
      m2.prototypes = m_count;
      auto plug_shape = m2.ae.plug_shape();
      ParamSet p = as_trainable(base);
      ParamSet psi = dpu::init_attention(m_count, static_cast<int>(plug_shape.channels),
                                         derive_seed(cfg.seed, "dpu"), m2.ae.dtype);
      p.merge(psi);
      auto trained = train::run(m2, std::move(p), clips, true, cfg.train.dpu_steps, opts,
                                derive_seed(cfg.seed, "dpu-train"));
      EvalOutcome e = eval_params(m2, trained.params, true);
      row("m" + std::to_string(m_count), e.auc_fp, e.auc_fr, e.auc_combined);
    }
  }

  std::string path = (fs::path(cfg.out_dir) / ("ablate_" + study + ".csv")).string();
  fs::create_directories(cfg.out_dir);
  write_text(path, csv);
  write_provenance(path, cfg, "ablate-" + study);
  json summary{{"study", study}, {"csv", path}};
  return summary.dump(2);
}

std::string cmd_dump_maps(const config::RunConfig& cfg, const std::string& scene_id,
                          int frame_begin, int frame_end) {
  cfg.validate();
  Dataset ds = load_dataset(cfg);
  model::ModelConfig mc = model_cfg(cfg);

  std::string ckpt;
  if (fs::exists(meta_ckpt(cfg))) {
    require_stage(meta_ckpt(cfg), "meta");
    ckpt = meta_ckpt(cfg);
  } else {
    require_stage(dpu_ckpt(cfg), "dpu");
    ckpt = dpu_ckpt(cfg);
  }
  LoadedMeta loaded = split_checkpoint(load_ndck(ckpt));
  ParamSet params = loaded.state.encoder;
  for (const auto& [name, t] : loaded.state.theta0) params.emplace(name, t);

  auto it = ds.clips.find(scene_id);
  if (it == ds.clips.end()) throw DataError("scene '" + scene_id + "' not in the dataset");
  const auto& clip = it->second;
  if (frame_begin < mc.ae.t_in) frame_begin = mc.ae.t_in;
  if (frame_end < 0 || frame_end > clip.frame_count()) frame_end = clip.frame_count();
  if (frame_begin >= frame_end) throw ConfigError("empty frame range for dump-maps");

  fs::path dir = fs::path(cfg.out_dir) / "maps" / scene_id;
  fs::create_directories(dir);
  auto plug = mc.ae.plug_shape();
  int files = 0;
  NoGradGuard no_grad;
  for (int t = frame_begin; t < frame_end; ++t) {
    scenesynth::PairIndex pi{t - mc.ae.t_in, t};
    Tensor x = scenesynth::pair_input(clip, pi, mc.ae.t_in, mc.ae.dtype);
    Shape batched = x.shape();
    batched.insert(batched.begin(), 1);
    Tensor enc = backbone::forward_to_plug(reshape(x, batched), mc.ae, params);
    Tensor map = reshape(enc, {plug.channels, plug.height, plug.width});
    dpu::ForwardOut f = dpu::forward(map, params, mc.beta_mode);
    // weights: [N, M]; one PGM per attention map plus the summed map
    std::int64_t n = f.weights.dim(0), m_count = f.weights.dim(1);
    std::vector<double> summed(static_cast<std::size_t>(n), 0.0);
    char frame_tag[16];
    std::snprintf(frame_tag, sizeof(frame_tag), "%06d", t);
    for (std::int64_t m = 0; m < m_count; ++m) {
      std::vector<double> plane(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) {
        plane[i] = f.weights.at(i * m_count + m);
        summed[i] += plane[i];
      }
      write_pgm((dir / (std::string(frame_tag) + "_map" + std::to_string(m + 1) + ".pgm"))
                    .string(),
                plane, static_cast<int>(plug.height), static_cast<int>(plug.width));
      ++files;
    }
    write_pgm((dir / (std::string(frame_tag) + "_mapsum.pgm")).string(), summed,
              static_cast<int>(plug.height), static_cast<int>(plug.width));
    ++files;
  }
  write_provenance((dir / "maps").string(), cfg, "dump-maps");
  json summary{{"scene", scene_id},
               {"frames", frame_end - frame_begin},
               {"files", files},
               {"dir", dir.string()}};
  return summary.dump(2);
}

}  // namespace ndvad::pipeline
