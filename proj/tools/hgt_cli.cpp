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

// hgt: command-line front end over the C API.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hgt_normals.h"

namespace {

struct Failure {
  hgt_status status;
};

void check(hgt_status s) {
  if (s != HGT_OK) throw Failure{s};
}

struct Dataset {
  hgt_dataset* handle = nullptr;
  explicit Dataset(const std::string& root) { check(hgt_dataset_open(root.c_str(), &handle)); }
  ~Dataset() { hgt_dataset_close(handle); }
};

struct Model {
  hgt_model* handle = nullptr;
  explicit Model(const std::string& path) { check(hgt_model_load(path.c_str(), &handle)); }
  ~Model() { hgt_model_free(handle); }
};

struct Report {
  hgt_report* handle = nullptr;
  ~Report() { hgt_report_free(handle); }
};

void parse_grid(const std::string& text, int& rows, int& cols) {
  check(hgt_parse_pane_grid(text.c_str(), &rows, &cols));
}

void print_progress(int epoch, const char* split, double mse, double angle, double seconds, void*) {
  std::printf("epoch %4d  %-5s  mse %.6f  mean angle %7.3f deg  (%.1f s)\n", epoch, split, mse,
              angle, seconds);
  std::fflush(stdout);
}

void write_eval(hgt_report* report, const std::string& out, std::size_t resolution,
                const std::string& label) {
  check(hgt_report_write(report, out.c_str(), resolution));
  std::printf("%s: mean angle error %.4f deg over %zu points -> %s\n", label.c_str(),
              hgt_report_mean_angle_deg(report), hgt_report_point_count(report), out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surface normals from an image and a sparse projected point cloud"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hgt_version()));

  // synth-gen
  hgt_synth_options synth;
  hgt_synth_options_init(&synth);
  int size = 400;
  std::string stride, synth_out;
  auto* gen = app.add_subcommand("synth-gen", "Generate a procedural dataset");
  gen->add_option("--frames", synth.frames, "Number of frames")->capture_default_str();
  gen->add_option("--size", size, "Square image size in pixels")->capture_default_str();
  gen->add_option("--noise", synth.noise_level, "Relative z drift level")->capture_default_str();
  gen->add_option("--out", synth_out, "Output directory")->required();
  gen->add_option("--seed", synth.seed, "Scene and noise seed")->capture_default_str();
  gen->add_option("--test-frames", synth.test_frames, "Test split size (default 30 of 151)");
  gen->add_option("--stride", stride, "Pixel stride UxV (default 4x3, or 2x2 below 128 px)");
  gen->add_option("--hfov", synth.hfov_deg, "Horizontal field of view, degrees")->capture_default_str();
  gen->add_option("--lower-fraction", synth.lower_fraction, "Sampled fraction of image rows, from the bottom")
      ->capture_default_str();
  gen->add_option("--min-objects", synth.min_objects, "Fewest scene objects per frame")->capture_default_str();
  gen->add_option("--max-objects", synth.max_objects, "Most scene objects per frame")->capture_default_str();

  // baseline-pca and eval
  std::string data, out, checkpoint, predictions, method = "pca", split = "test", grid = "4x4";
  std::uint64_t seed = 0;
  double radius = 0.75;
  int neighbors = 60;
  std::size_t resolution = 512;
  auto* pca = app.add_subcommand("baseline-pca", "Evaluate the PCA plane-fitting baseline");
  pca->add_option("--data", data, "Dataset root")->required();
  pca->add_option("--out", out, "Report directory")->required();
  pca->add_option("--seed", seed, "Neighbourhood sampling seed")->capture_default_str();
  pca->add_option("--split", split, "train or test")->capture_default_str();
  pca->add_option("--radius", radius, "Query radius")->capture_default_str();
  pca->add_option("--neighbors", neighbors, "Neighbours per query")->capture_default_str();
  pca->add_option("--resolution", resolution, "Quantile curve points")->capture_default_str();

  auto* ev = app.add_subcommand("eval", "Evaluate a method and write error reports");
  ev->add_option("--method", method, "pca, hgt, hgn or predictions")
      ->check(CLI::IsMember({"pca", "hgt", "hgn", "predictions"}))
      ->capture_default_str();
  ev->add_option("--data", data, "Dataset root")->required();
  ev->add_option("--out", out, "Report directory")->required();
  ev->add_option("--checkpoint", checkpoint, "Model checkpoint (hgt, hgn)");
  ev->add_option("--predictions", predictions, "Directory of <frame_id>.f64 normals");
  auto* ev_seed = ev->add_option("--seed", seed, "Neighbourhood seed (default: the training seed)");
  ev->add_option("--split", split, "train or test")->capture_default_str();
  ev->add_option("--pane-grid", grid, "Pane grid RxC")->capture_default_str();
  ev->add_option("--radius", radius, "PCA query radius")->capture_default_str();
  ev->add_option("--neighbors", neighbors, "PCA neighbours per query")->capture_default_str();
  ev->add_option("--resolution", resolution, "Quantile curve points")->capture_default_str();

  // train
  std::string config;
  int epochs = 0;
  auto* tr = app.add_subcommand("train", "Train a model from a JSON config");
  tr->add_option("--config", config, "Training config JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--data", data, "Override the dataset root");
  tr->add_option("--out", out, "Override the output directory");
  auto* tr_seed = tr->add_option("--seed", seed, "Override the seed");
  tr->add_option("--epochs", epochs, "Override the epoch count");

  // predict
  auto* pr = app.add_subcommand("predict", "Write predicted normals per frame");
  pr->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  pr->add_option("--data", data, "Dataset root")->required();
  pr->add_option("--out", out, "Output directory")->required();
  pr->add_option("--split", split, "train, test or all")->capture_default_str();
  pr->add_option("--pane-grid", grid, "Pane grid RxC")->capture_default_str();
  auto* pr_seed = pr->add_option("--seed", seed, "Neighbourhood seed (default: the training seed)");

  // attn-dump
  std::string frame, attn_grid = "1x1";
  std::size_t point = 0;
  bool trace = false;
  auto* at = app.add_subcommand("attn-dump", "Export the first-block attention row of a point");
  at->add_option("--checkpoint", checkpoint, "HGT checkpoint")->required();
  at->add_option("--data", data, "Dataset root")->required();
  at->add_option("--frame", frame, "Frame id")->required();
  at->add_option("--point", point, "Point index within the frame")->required();
  at->add_option("--out", out, "Output directory")->required();
  at->add_option("--pane-grid", attn_grid, "Pane grid RxC")->capture_default_str();
  auto* at_seed = at->add_option("--seed", seed, "Neighbourhood seed (default: the training seed)");
  at->add_flag("--trace", trace, "Also dump every block's full attention matrix");

  // summarize
  std::vector<std::string> inputs;
  auto* su = app.add_subcommand("summarize", "Merge summary.csv files into one table");
  su->add_option("--inputs", inputs, "summary.csv files")->required()->check(CLI::ExistingFile);
  su->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      synth.width = synth.height = size;
      if (stride.empty()) stride = size < 128 ? "2x2" : "4x3";
      int su_ = 0, sv_ = 0;
      parse_grid(stride, su_, sv_);
      synth.stride_u = su_;
      synth.stride_v = sv_;
      check(hgt_synth_generate(&synth, synth_out.c_str()));
      Dataset ds(synth_out);
      hgt_dataset_info info;
      check(hgt_dataset_info_get(ds.handle, &info));
      std::printf("wrote %zu frames (%zu train, %zu test, %zu points) to %s\n", info.frames,
                  info.train_frames, info.test_frames, info.total_points, synth_out.c_str());
    } else if (pca->parsed() || (ev->parsed() && method == "pca")) {
      Dataset ds(data);
      hgt_eval_options o;
      hgt_eval_options_init(&o);
      o.method = "pca";
      o.split = split.c_str();
      o.has_seed = 1;
      o.seed = seed;
      o.radius = radius;
      o.neighbor_count = neighbors;
      Report r;
      check(hgt_evaluate(ds.handle, &o, &r.handle));
      write_eval(r.handle, out, resolution, "pca");
    } else if (ev->parsed()) {
      Dataset ds(data);
      hgt_eval_options o;
      hgt_eval_options_init(&o);
      o.method = method.c_str();
      o.split = split.c_str();
      o.has_seed = ev_seed->count() > 0;
      o.seed = seed;
      parse_grid(grid, o.pane_rows, o.pane_cols);
      Report r;
      if (method == "predictions") {
        if (predictions.empty()) {
          std::fprintf(stderr, "hgt eval: --predictions is required for method 'predictions'\n");
          return 2;
        }
        o.predictions_dir = predictions.c_str();
        check(hgt_evaluate(ds.handle, &o, &r.handle));
      } else {
        if (checkpoint.empty()) {
          std::fprintf(stderr, "hgt eval: --checkpoint is required for method '%s'\n", method.c_str());
          return 2;
        }
        Model m(checkpoint);
        o.model = m.handle;
        check(hgt_evaluate(ds.handle, &o, &r.handle));
      }
      write_eval(r.handle, out, resolution, method);
    } else if (tr->parsed()) {
      hgt_train_overrides ov;
      hgt_train_overrides_init(&ov);
      if (!data.empty()) ov.data = data.c_str();
      if (!out.empty()) ov.out = out.c_str();
      ov.has_seed = tr_seed->count() > 0;
      ov.seed = seed;
      ov.epochs = epochs;
      check(hgt_train(config.c_str(), &ov, print_progress, nullptr, nullptr));
    } else if (pr->parsed()) {
      Dataset ds(data);
      Model m(checkpoint);
      int rows = 0, cols = 0;
      parse_grid(grid, rows, cols);
      check(hgt_predict(ds.handle, m.handle, split.c_str(), rows, cols, pr_seed->count() > 0, seed,
                        out.c_str()));
      std::printf("wrote predictions to %s\n", out.c_str());
    } else if (at->parsed()) {
      Dataset ds(data);
      Model m(checkpoint);
      int rows = 0, cols = 0;
      parse_grid(attn_grid, rows, cols);
      check(hgt_attention_dump(ds.handle, m.handle, frame.c_str(), point, rows, cols,
                               at_seed->count() > 0, seed, trace ? 1 : 0, out.c_str()));
      std::printf("wrote attention map of frame %s point %zu to %s\n", frame.c_str(), point,
                  out.c_str());
    } else if (su->parsed()) {
      std::vector<const char*> paths;
      for (const auto& p : inputs) paths.push_back(p.c_str());
      check(hgt_summarize(paths.data(), paths.size(), out.c_str()));
      std::printf("%s", "wrote summary.csv and summary.txt\n");
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "hgt: %s: %s\n", hgt_status_name(f.status), hgt_last_error());
    return f.status == HGT_ERR_INVALID_ARGUMENT ? 2 : 1;
  }
  return 0;
}
