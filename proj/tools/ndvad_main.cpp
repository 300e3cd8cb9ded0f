// ndvad command-line front end. Parses arguments, assembles config overrides
// and drives the pipeline through the C API; exit codes equal the API codes
// (0 ok, 2 config error, 3 data error, 4 numeric error).

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ndvad/ndvad.h"

using nlohmann::json;

namespace {

// "a.b.c=value" -> nested JSON; the value is parsed as JSON when possible so
// numbers, booleans and arrays come through typed.
bool apply_set(json& overrides, const std::string& kv, std::string& err) {
  auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) {
    err = "--set expects key.path=value, got '" + kv + "'";
    return false;
  }
  std::string path = kv.substr(0, eq);
  std::string raw = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (...) {
    value = raw;  // plain string
  }
  json* node = &overrides;
  std::size_t start = 0;
  while (true) {
    auto dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) {
      err = "--set has an empty key segment in '" + path + "'";
      return false;
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
  return true;
}

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed, out_dir, data_dir, precision;

  json overrides(std::string& err) const {
    json ov = json::object();
    if (!seed.empty()) ov["seed"] = std::stoull(seed);
    if (!out_dir.empty()) ov["out_dir"] = out_dir;
    if (!data_dir.empty()) ov["data_dir"] = data_dir;
    if (!precision.empty()) ov["precision"] = precision;
    for (const auto& kv : sets) {
      if (!apply_set(ov, kv, err)) return json();
    }
    return ov;
  }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "JSON config file");
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--out-dir", args.out_dir, "output directory");
  cmd->add_option("--data-dir", args.data_dir, "dataset directory");
  cmd->add_option("--precision", args.precision, "f32 or f64");
  cmd->add_option("--set", args.sets, "override any config key, e.g. --set train.lr=0.001")
      ->take_all();
}

int finish(int code, char* summary) {
  if (summary) {
    std::printf("%s\n", summary);
    ndvad_string_free(summary);
  }
  if (code != NDVAD_OK) {
    std::fprintf(stderr, "ndvad: error: %s\n", ndvad_last_error());
  }
  return code;
}

int open_pipeline(const CommonArgs& args, ndvad_pipeline** p) {
  std::string err;
  json ov = args.overrides(err);
  if (!err.empty()) {
    std::fprintf(stderr, "ndvad: error: %s\n", err.c_str());
    return NDVAD_ERR_CONFIG;
  }
  std::string ov_text = ov.empty() ? "" : ov.dump();
  int code = ndvad_pipeline_open(args.config_path.empty() ? nullptr : args.config_path.c_str(),
                                 ov_text.empty() ? nullptr : ov_text.c_str(), p);
  if (code != NDVAD_OK) {
    std::fprintf(stderr, "ndvad: error: %s\n", ndvad_last_error());
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prototype-based video anomaly detection on a synthetic benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ndvad_version());

  struct {
    CommonArgs common;
    bool force = false;
  } synth;
  struct {
    CommonArgs common;
  } pretrain, train, meta_train, adapt_eval, show_config;
  struct {
    CommonArgs common;
    std::string study;
  } ablate;
  struct {
    CommonArgs common;
    std::string scene;
    int begin = 0;
    int end = -1;
  } dump;

  CLI::App* c_synth = app.add_subcommand("synth", "generate the synthetic benchmark");
  add_common(c_synth, synth.common);
  c_synth->add_flag("--force", synth.force, "overwrite a non-empty data dir");

  add_common(app.add_subcommand("pretrain", "pretrain the autoencoder (frame loss only)"),
             pretrain.common);
  add_common(app.add_subcommand("train", "train the prototype unit with the full objective"),
             train.common);
  add_common(app.add_subcommand("meta-train", "meta-train initialization and step sizes"),
             meta_train.common);
  add_common(app.add_subcommand("adapt-eval", "k-shot adaptation, scoring and AUC evaluation"),
             adapt_eval.common);

  CLI::App* c_ablate = app.add_subcommand("ablate", "run an ablation study");
  add_common(c_ablate, ablate.common);
  c_ablate->add_option("study", ablate.study, "component | resolution | prototypes")
      ->required();

  CLI::App* c_dump = app.add_subcommand("dump-maps", "write normalcy maps as PGM images");
  add_common(c_dump, dump.common);
  c_dump->add_option("--scene", dump.scene, "scene id to dump")->required();
  c_dump->add_option("--begin", dump.begin, "first frame (default t_in)");
  c_dump->add_option("--end", dump.end, "one past the last frame (default clip end)");

  CLI::App* c_cfg = app.add_subcommand("show-config", "print the effective config");
  add_common(c_cfg, show_config.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : NDVAD_ERR_CONFIG;
  }

  auto with_pipeline = [&](const CommonArgs& common, auto&& fn) {
    ndvad_pipeline* p = nullptr;
    int code = open_pipeline(common, &p);
    if (code != NDVAD_OK) return code;
    char* summary = nullptr;
    code = fn(p, &summary);
    ndvad_pipeline_close(p);
    return finish(code, summary);
  };

  if (app.got_subcommand("synth")) {
    return with_pipeline(synth.common, [&](ndvad_pipeline* p, char** s) {
      return ndvad_synth(p, synth.force ? 1 : 0, s);
    });
  }
  if (app.got_subcommand("pretrain")) {
    return with_pipeline(pretrain.common,
                         [](ndvad_pipeline* p, char** s) { return ndvad_pretrain(p, s); });
  }
  if (app.got_subcommand("train")) {
    return with_pipeline(train.common,
                         [](ndvad_pipeline* p, char** s) { return ndvad_train(p, s); });
  }
  if (app.got_subcommand("meta-train")) {
    return with_pipeline(meta_train.common,
                         [](ndvad_pipeline* p, char** s) { return ndvad_meta_train(p, s); });
  }
  if (app.got_subcommand("adapt-eval")) {
    return with_pipeline(adapt_eval.common,
                         [](ndvad_pipeline* p, char** s) { return ndvad_adapt_eval(p, s); });
  }
  if (app.got_subcommand("ablate")) {
    return with_pipeline(ablate.common, [&](ndvad_pipeline* p, char** s) {
      return ndvad_ablate(p, ablate.study.c_str(), s);
    });
  }
  if (app.got_subcommand("dump-maps")) {
    return with_pipeline(dump.common, [&](ndvad_pipeline* p, char** s) {
      return ndvad_dump_maps(p, dump.scene.c_str(), dump.begin, dump.end, s);
    });
  }
  if (app.got_subcommand("show-config")) {
    return with_pipeline(show_config.common, [](ndvad_pipeline* p, char** s) {
      return ndvad_pipeline_config(p, s);
    });
  }
  return NDVAD_ERR_CONFIG;
}
