#include "ndvad/ndvad.h"

#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>

#include "ndvad/config.hpp"
#include "ndvad/pipeline.hpp"

using ndvad::Error;
using ndvad::ErrorKind;

struct ndvad_pipeline {
  ndvad::config::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

int code_of(const Error& e) { return static_cast<int>(e.kind()); }

template <class Fn>
int guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const Error& e) {
    g_last_error = e.what();
    return code_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NDVAD_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return NDVAD_ERR_INTERNAL;
  }
}

int run_command(ndvad_pipeline* p, char** out_summary,
                const std::function<std::string(const ndvad::config::RunConfig&)>& cmd) {
  if (!p) {
    g_last_error = "null pipeline handle";
    return NDVAD_ERR_INTERNAL;
  }
  return guarded([&] {
    std::string summary = cmd(p->cfg);
    if (out_summary) *out_summary = dup_string(summary);
    return NDVAD_OK;
  });
}

}  // namespace

extern "C" {

const char* ndvad_version(void) { return "0.1.0"; }

const char* ndvad_last_error(void) { return g_last_error.c_str(); }

int ndvad_pipeline_open(const char* config_path, const char* overrides_json,
                        ndvad_pipeline** out) {
  if (!out) {
    g_last_error = "null out pointer";
    return NDVAD_ERR_INTERNAL;
  }
  *out = nullptr;
  return guarded([&] {
    auto cfg = ndvad::config::load(config_path ? config_path : "",
                                   overrides_json ? overrides_json : "");
    *out = new ndvad_pipeline{std::move(cfg)};
    return NDVAD_OK;
  });
}

void ndvad_pipeline_close(ndvad_pipeline* p) { delete p; }

int ndvad_pipeline_config(ndvad_pipeline* p, char** out_json) {
  if (!p || !out_json) {
    g_last_error = "null argument";
    return NDVAD_ERR_INTERNAL;
  }
  return guarded([&] {
    *out_json = dup_string(ndvad::config::to_json_text(p->cfg));
    return NDVAD_OK;
  });
}

void ndvad_string_free(char* s) { std::free(s); }

int ndvad_synth(ndvad_pipeline* p, int force, char** out_summary) {
  return run_command(p, out_summary, [force](const ndvad::config::RunConfig& cfg) {
    return ndvad::pipeline::cmd_synth(cfg, force != 0);
  });
}

int ndvad_pretrain(ndvad_pipeline* p, char** out_summary) {
  return run_command(p, out_summary, ndvad::pipeline::cmd_pretrain);
}

int ndvad_train(ndvad_pipeline* p, char** out_summary) {
  return run_command(p, out_summary, ndvad::pipeline::cmd_train);
}

int ndvad_meta_train(ndvad_pipeline* p, char** out_summary) {
  return run_command(p, out_summary, ndvad::pipeline::cmd_meta_train);
}

int ndvad_adapt_eval(ndvad_pipeline* p, char** out_summary) {
  return run_command(p, out_summary, ndvad::pipeline::cmd_adapt_eval);
}

int ndvad_ablate(ndvad_pipeline* p, const char* study, char** out_summary) {
  std::string s = study ? study : "";
  return run_command(p, out_summary, [s](const ndvad::config::RunConfig& cfg) {
    return ndvad::pipeline::cmd_ablate(cfg, s);
  });
}

int ndvad_dump_maps(ndvad_pipeline* p, const char* scene_id, int frame_begin, int frame_end,
                    char** out_summary) {
  std::string scene = scene_id ? scene_id : "";
  return run_command(p, out_summary,
                     [scene, frame_begin, frame_end](const ndvad::config::RunConfig& cfg) {
                       return ndvad::pipeline::cmd_dump_maps(cfg, scene, frame_begin, frame_end);
                     });
}

}  // extern "C"
