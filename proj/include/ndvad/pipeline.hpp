#pragma once

#include <map>
#include <string>

#include "ndvad/config.hpp"

namespace ndvad::pipeline {

// Each command returns a small JSON summary (also printed by the CLI).
// Outputs land under cfg.out_dir; every output file gets a
// "<file>.provenance.json" sidecar recording stage, config hash and seed.
std::string cmd_synth(const config::RunConfig& cfg, bool force);
std::string cmd_pretrain(const config::RunConfig& cfg);
std::string cmd_train(const config::RunConfig& cfg);
std::string cmd_meta_train(const config::RunConfig& cfg);
std::string cmd_adapt_eval(const config::RunConfig& cfg);
std::string cmd_ablate(const config::RunConfig& cfg, const std::string& study);
std::string cmd_dump_maps(const config::RunConfig& cfg, const std::string& scene_id,
                          int frame_begin, int frame_end);

// Checkpoint paths inside out_dir.
std::string pretrain_ckpt(const config::RunConfig& cfg);
std::string dpu_ckpt(const config::RunConfig& cfg);
std::string meta_ckpt(const config::RunConfig& cfg);

// Stage tag stored in a checkpoint's provenance sidecar ("pretrain", "dpu",
// "meta"); throws a ConfigError when the expected stage does not match.
std::string checkpoint_stage(const std::string& ckpt_path);
void require_stage(const std::string& ckpt_path, const std::string& expected);

}  // namespace ndvad::pipeline
