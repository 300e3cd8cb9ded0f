#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "ndvad/ndvad.h"

namespace fs = std::filesystem;

namespace {
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ndvad_capi_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string micro_overrides(const fs::path& root) {
  return std::string(R"({"out_dir": ")") + (root / "out").string() + R"(", "data_dir": ")" +
         (root / "data").string() + R"(",
    "backbone": {"t_in": 2, "frame_size": [32, 32], "stage_channels": [6, 8], "plug_stage": 2},
    "dpu": {"prototypes": 2},
    "meta": {"train_k": 1, "k_list": [0], "episodes_per_batch": 2},
    "train": {"pretrain_steps": 4, "dpu_steps": 4, "meta_steps": 1, "lr": 0.01, "batch": 2},
    "scenes": {"meta_scenes": 2, "target_scenes": 1, "frame_count": 40, "lead_frames": 8}})";
}
}  // namespace

TEST_CASE("version and error text are always available") {
  CHECK(std::strlen(ndvad_version()) > 0);
  CHECK(ndvad_last_error() != nullptr);
}

TEST_CASE("open validates the config and reports code 2 on bad input") {
  ndvad_pipeline* p = nullptr;
  CHECK(ndvad_pipeline_open("/nonexistent/cfg.json", nullptr, &p) == NDVAD_ERR_CONFIG);
  CHECK(p == nullptr);
  CHECK(std::strlen(ndvad_last_error()) > 0);

  CHECK(ndvad_pipeline_open(nullptr, R"({"bogus_key": 1})", &p) == NDVAD_ERR_CONFIG);
  CHECK(std::string(ndvad_last_error()).find("bogus_key") != std::string::npos);

  CHECK(ndvad_pipeline_open(nullptr, nullptr, &p) == NDVAD_OK);
  REQUIRE(p != nullptr);
  char* cfg_text = nullptr;
  CHECK(ndvad_pipeline_config(p, &cfg_text) == NDVAD_OK);
  REQUIRE(cfg_text != nullptr);
  CHECK(std::string(cfg_text).find("\"prototypes\": 10") != std::string::npos);
  ndvad_string_free(cfg_text);
  ndvad_pipeline_close(p);
}

TEST_CASE("pipeline commands run through the C surface with matching exit codes") {
  TempDir tmp;
  ndvad_pipeline* p = nullptr;
  REQUIRE(ndvad_pipeline_open(nullptr, micro_overrides(tmp.path).c_str(), &p) == NDVAD_OK);

  // data errors before synth
  CHECK(ndvad_pretrain(p, nullptr) == NDVAD_ERR_DATA);

  char* summary = nullptr;
  CHECK(ndvad_synth(p, 0, &summary) == NDVAD_OK);
  REQUIRE(summary != nullptr);
  CHECK(std::string(summary).find("\"scenes\": 3") != std::string::npos);
  ndvad_string_free(summary);

  // refused without force, allowed with it
  CHECK(ndvad_synth(p, 0, nullptr) == NDVAD_ERR_CONFIG);
  CHECK(ndvad_synth(p, 1, nullptr) == NDVAD_OK);

  // stage gating through the API
  CHECK(ndvad_train(p, nullptr) == NDVAD_ERR_CONFIG);
  CHECK(ndvad_pretrain(p, nullptr) == NDVAD_OK);
  CHECK(ndvad_train(p, nullptr) == NDVAD_OK);
  CHECK(ndvad_meta_train(p, nullptr) == NDVAD_OK);
  CHECK(ndvad_adapt_eval(p, &summary) == NDVAD_OK);
  CHECK(std::string(summary).find("\"auc\"") != std::string::npos);
  ndvad_string_free(summary);

  CHECK(ndvad_ablate(p, "colors", nullptr) == NDVAD_ERR_CONFIG);
  CHECK(ndvad_dump_maps(p, "nosuch", 0, -1, nullptr) == NDVAD_ERR_DATA);
  CHECK(ndvad_dump_maps(p, "target00", 2, 4, nullptr) == NDVAD_OK);

  ndvad_pipeline_close(p);
  ndvad_pipeline_close(nullptr);  // harmless
}
