// Copyright 2026 The hgt-normals Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Exercises the shared library through its C header only.
#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hgt_normals.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("HGT_TEST_TMP");
  const fs::path dir = (env && *env ? fs::path(env) : fs::temp_directory_path() / "hgt_tests") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

hgt_synth_options small_options(size_t frames, long test) {
  hgt_synth_options o;
  hgt_synth_options_init(&o);
  o.frames = frames;
  o.test_frames = test;
  o.width = 32;
  o.height = 32;
  o.stride_u = 2;
  o.stride_v = 2;
  o.seed = 17;
  return o;
}

const char* kTinyModel =
    R"({"unet_channels":[2,3],"d_img":3,"point_mlp":[4,5],"pos_mlp":[3],"d_token":6,)"
    R"("neighbor_count":4,"radius":1.5,"attention_blocks":2,"head_hidden":5})";

struct ProgressLog {
  int calls = 0;
  std::string last_split;
};

void on_progress(int, const char* split, double, double, double, void* user) {
  auto* log = static_cast<ProgressLog*>(user);
  ++log->calls;
  log->last_split = split;
}

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(hgt_status_name(HGT_OK)) == "ok");
  CHECK(std::string(hgt_status_name(HGT_ERR_PARSE)) == "parse error");
  CHECK(std::string(hgt_status_name(static_cast<hgt_status>(42))) == "unknown status");
  CHECK(std::strlen(hgt_version()) > 0);
  int r = 0, c = 0;
  CHECK(hgt_parse_pane_grid("4x3", &r, &c) == HGT_OK);
  CHECK(r == 4);
  CHECK(c == 3);
  CHECK(hgt_parse_pane_grid("4by3", &r, &c) == HGT_ERR_INVALID_ARGUMENT);
  CHECK(std::string(hgt_last_error()).find("4by3") != std::string::npos);
  CHECK(hgt_parse_pane_grid(nullptr, &r, &c) == HGT_ERR_INVALID_ARGUMENT);
}

TEST_CASE("dataset handles") {
  const fs::path root = scratch("capi_dataset");
  hgt_synth_options o = small_options(4, -1);
  REQUIRE(hgt_synth_generate(&o, root.c_str()) == HGT_OK);

  hgt_dataset* ds = nullptr;
  REQUIRE(hgt_dataset_open(root.c_str(), &ds) == HGT_OK);
  hgt_dataset_info info;
  REQUIRE(hgt_dataset_info_get(ds, &info) == HGT_OK);
  CHECK(info.frames == 4);
  CHECK(info.test_frames == 1);
  CHECK(info.train_frames == 3);
  CHECK(info.width == 32);
  CHECK(info.total_points > 0);
  const char* id = nullptr;
  CHECK(hgt_dataset_frame_id(ds, 2, &id) == HGT_OK);
  CHECK(std::string(id) == "000002");
  CHECK(hgt_dataset_frame_id(ds, 9, &id) == HGT_ERR_INVALID_ARGUMENT);
  hgt_dataset_close(ds);

  hgt_dataset* missing = nullptr;
  CHECK(hgt_dataset_open((root / "nope").c_str(), &missing) == HGT_ERR_IO);
  CHECK(missing == nullptr);

  o.width = 0;
  CHECK(hgt_synth_generate(&o, (root / "bad").c_str()) == HGT_ERR_CONFIGURATION);
  CHECK(hgt_synth_generate(nullptr, root.c_str()) == HGT_ERR_INVALID_ARGUMENT);
}

TEST_CASE("model, training, evaluation and outputs") {
  const fs::path root = scratch("capi_flow");
  hgt_synth_options o = small_options(3, 1);
  REQUIRE(hgt_synth_generate(&o, (root / "data").c_str()) == HGT_OK);
  hgt_dataset* ds = nullptr;
  REQUIRE(hgt_dataset_open((root / "data").c_str(), &ds) == HGT_OK);

  hgt_model* init = nullptr;
  REQUIRE(hgt_model_init(kTinyModel, 3, &init) == HGT_OK);
  hgt_model_info mi;
  REQUIRE(hgt_model_info_get(init, &mi) == HGT_OK);
  CHECK(std::string(mi.variant) == "hgt");
  CHECK(mi.attention_blocks == 2);
  CHECK(mi.has_seed == 1);  // the initialization seed
  CHECK(mi.seed == 3);
  CHECK(hgt_model_save(init, (root / "init.hgt").c_str()) == HGT_OK);
  hgt_model_free(init);
  hgt_model* bad = nullptr;
  CHECK(hgt_model_init("{\"d_token\": \"wide\"}", 3, &bad) == HGT_ERR_CONFIGURATION);
  CHECK(hgt_model_init("{oops", 3, &bad) == HGT_ERR_PARSE);

  {
    std::ofstream cfg(root / "train.json");
    cfg << R"({"epochs": 1, "batch_size": 4, "pane_grid": "2x2", "lr": 0.01, "model": )"
        << kTinyModel << "}";
  }
  hgt_train_overrides ov;
  hgt_train_overrides_init(&ov);
  const std::string data = (root / "data").string(), out = (root / "run").string();
  ov.data = data.c_str();
  ov.out = out.c_str();
  ov.has_seed = 1;
  ov.seed = 9;
  ov.epochs = 2;
  ProgressLog log;
  hgt_model* model = nullptr;
  REQUIRE(hgt_train((root / "train.json").c_str(), &ov, on_progress, &log, &model) == HGT_OK);
  CHECK(log.calls == 4);
  CHECK(log.last_split == "test");
  REQUIRE(hgt_model_info_get(model, &mi) == HGT_OK);
  CHECK(mi.has_seed == 1);
  CHECK(mi.seed == 9);
  CHECK(fs::exists(root / "run" / "loss.csv"));

  hgt_eval_options eo;
  hgt_eval_options_init(&eo);
  eo.method = "hgt";
  eo.model = model;
  eo.pane_rows = 2;
  eo.pane_cols = 2;
  hgt_report* rep = nullptr;
  REQUIRE(hgt_evaluate(ds, &eo, &rep) == HGT_OK);
  const double mean = hgt_report_mean_angle_deg(rep);
  CHECK(mean > 0.0);
  CHECK(mean < 90.0);
  const size_t n = hgt_report_point_count(rep);
  CHECK(n > 0);
  const char* fid = nullptr;
  size_t pid = 0;
  double angle = 0.0;
  CHECK(hgt_report_point(rep, 0, &fid, &pid, &angle) == HGT_OK);
  CHECK(std::string(fid) == "000002");
  CHECK(hgt_report_point(rep, n, &fid, &pid, &angle) == HGT_ERR_INVALID_ARGUMENT);
  double q0 = 0.0, q1 = 0.0;
  CHECK(hgt_report_quantile(rep, 0.0, &q0) == HGT_OK);
  CHECK(hgt_report_quantile(rep, 1.0, &q1) == HGT_OK);
  CHECK(q0 <= mean);
  CHECK(mean <= q1);
  CHECK(hgt_report_write(rep, (root / "eval").c_str(), 32) == HGT_OK);
  CHECK(fs::exists(root / "eval" / "summary.csv"));
  hgt_report_free(rep);

  // Predictions written and read back score the same as direct evaluation.
  REQUIRE(hgt_predict(ds, model, "test", 2, 2, 0, 0, (root / "pred").c_str()) == HGT_OK);
  eo.method = "predictions";
  const std::string pred_dir = (root / "pred").string();
  eo.predictions_dir = pred_dir.c_str();
  eo.model = nullptr;
  REQUIRE(hgt_evaluate(ds, &eo, &rep) == HGT_OK);
  CHECK(hgt_report_mean_angle_deg(rep) == doctest::Approx(mean).epsilon(1e-12));
  hgt_report_free(rep);

  eo.method = "pca";
  REQUIRE(hgt_evaluate(ds, &eo, &rep) == HGT_OK);
  CHECK(hgt_report_mean_angle_deg(rep) > 0.0);
  CHECK(hgt_report_write(rep, (root / "pca").c_str(), 16) == HGT_OK);
  hgt_report_free(rep);

  eo.method = "hgt";
  CHECK(hgt_evaluate(ds, &eo, &rep) == HGT_ERR_INVALID_ARGUMENT);  // no model
  eo.method = "svm";
  CHECK(hgt_evaluate(ds, &eo, &rep) == HGT_ERR_INVALID_ARGUMENT);

  CHECK(hgt_attention_dump(ds, model, "000002", 3, 2, 2, 0, 0, 1, (root / "attn").c_str()) == HGT_OK);
  CHECK(fs::exists(root / "attn" / "attention.csv"));
  CHECK(hgt_attention_dump(ds, model, "000002", 1u << 30, 2, 2, 0, 0, 0, (root / "attn2").c_str()) ==
        HGT_ERR_INVALID_ARGUMENT);

  const std::string a = (root / "eval" / "summary.csv").string(), b = (root / "pca" / "summary.csv").string();
  const char* paths[] = {a.c_str(), b.c_str()};
  CHECK(hgt_summarize(paths, 2, (root / "summary").c_str()) == HGT_OK);
  CHECK(fs::exists(root / "summary" / "summary.txt"));

  hgt_model* loaded = nullptr;
  CHECK(hgt_model_load((root / "run" / "checkpoint.hgt").c_str(), &loaded) == HGT_OK);
  hgt_model_free(loaded);
  CHECK(hgt_model_load((root / "missing.hgt").c_str(), &loaded) == HGT_ERR_IO);

  hgt_model_free(model);
  hgt_dataset_close(ds);
}

TEST_CASE("free functions accept null") {
  hgt_model_free(nullptr);
  hgt_dataset_close(nullptr);
  hgt_report_free(nullptr);
}
