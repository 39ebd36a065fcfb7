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

#include "hgt_normals.h"

#include <exception>
#include <filesystem>
#include <new>
#include <string>

#include "hgt/binary_io.hpp"
#include "hgt/dataset.hpp"
#include "hgt/error.hpp"
#include "hgt/eval.hpp"
#include "hgt/metrics.hpp"
#include "hgt/train.hpp"

struct hgt_dataset {
  hgt::Dataset dataset;
};

struct hgt_model {
  hgt::ModelParams params;
  std::string variant;
  bool has_seed = false;
  std::uint64_t seed = 0;
};

struct hgt_report {
  hgt::EvalReport report;
  hgt::ErrorDistribution distribution{{}};
};

namespace {

thread_local std::string g_last_error;

hgt_status status_of(hgt::ErrorCode code) {
  switch (code) {
    case hgt::ErrorCode::kInvalidArgument: return HGT_ERR_INVALID_ARGUMENT;
    case hgt::ErrorCode::kDimension: return HGT_ERR_DIMENSION;
    case hgt::ErrorCode::kConfiguration: return HGT_ERR_CONFIGURATION;
    case hgt::ErrorCode::kDegenerate: return HGT_ERR_DEGENERATE;
    case hgt::ErrorCode::kContract: return HGT_ERR_CONTRACT;
    case hgt::ErrorCode::kIo: return HGT_ERR_IO;
    case hgt::ErrorCode::kParse: return HGT_ERR_PARSE;
    case hgt::ErrorCode::kNumeric: return HGT_ERR_NUMERIC;
  }
  return HGT_ERR_INTERNAL;
}

hgt_status fail(hgt_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
hgt_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return HGT_OK;
  } catch (const hgt::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(HGT_ERR_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(HGT_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(HGT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(HGT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(HGT_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw hgt::InvalidArgumentError(std::string(what) + " must not be NULL");
}

hgt::PaneGrid grid_of(int rows, int cols) {
  if (rows < 1 || cols < 1) throw hgt::InvalidArgumentError("pane grid dimensions must be >= 1");
  return hgt::PaneGrid{rows, cols};
}

std::uint64_t seed_of(const hgt_model* model, int has_seed, std::uint64_t seed) {
  if (has_seed) return seed;
  return model && model->has_seed ? model->seed : 0;
}

hgt_model* wrap(hgt::ModelParams params, const nlohmann::json& meta) {
  auto* m = new hgt_model{std::move(params), {}, false, 0};
  m->variant = hgt::to_string(m->params.config().variant);
  if (meta.is_object() && meta.contains("seed")) {
    m->has_seed = true;
    m->seed = meta["seed"].get<std::uint64_t>();
  }
  return m;
}

}  // namespace

extern "C" {

const char* hgt_version(void) { return "1.0.0"; }

const char* hgt_last_error(void) { return g_last_error.c_str(); }

const char* hgt_status_name(hgt_status status) {
  switch (status) {
    case HGT_OK: return "ok";
    case HGT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case HGT_ERR_DIMENSION: return "dimension error";
    case HGT_ERR_CONFIGURATION: return "configuration error";
    case HGT_ERR_DEGENERATE: return "degenerate input";
    case HGT_ERR_CONTRACT: return "contract violation";
    case HGT_ERR_IO: return "i/o error";
    case HGT_ERR_PARSE: return "parse error";
    case HGT_ERR_NUMERIC: return "numeric error";
    case HGT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

hgt_status hgt_parse_pane_grid(const char* text, int* rows, int* cols) {
  return guarded([&] {
    require(text, "text");
    require(rows, "rows");
    require(cols, "cols");
    const hgt::PaneGrid g = hgt::parse_pane_grid(text);
    *rows = g.rows;
    *cols = g.cols;
  });
}

void hgt_synth_options_init(hgt_synth_options* o) {
  if (!o) return;
  const hgt::SynthConfig d;
  o->frames = 151;
  o->test_frames = -1;
  o->width = d.width;
  o->height = d.height;
  o->hfov_deg = d.hfov_deg;
  o->lower_fraction = d.lower_fraction;
  o->stride_u = d.stride_u;
  o->stride_v = d.stride_v;
  o->noise_level = d.noise_level;
  o->seed = d.seed;
  o->min_objects = d.min_objects;
  o->max_objects = d.max_objects;
}

hgt_status hgt_synth_generate(const hgt_synth_options* o, const char* out_dir) {
  return guarded([&] {
    require(o, "options");
    require(out_dir, "out_dir");
    hgt::SynthConfig c;
    c.width = o->width;
    c.height = o->height;
    c.hfov_deg = o->hfov_deg;
    c.lower_fraction = o->lower_fraction;
    c.stride_u = o->stride_u;
    c.stride_v = o->stride_v;
    c.noise_level = o->noise_level;
    c.seed = o->seed;
    c.min_objects = o->min_objects;
    c.max_objects = o->max_objects;
    if (c.width < 1 || c.height < 1) throw hgt::ConfigError("image size must be positive");
    if (!(c.hfov_deg > 0.0 && c.hfov_deg < 180.0)) throw hgt::ConfigError("hfov must lie in (0, 180)");
    if (c.noise_level < 0.0) throw hgt::ConfigError("noise level must be >= 0");
    const std::size_t test = o->test_frames < 0 ? hgt::default_test_count(o->frames)
                                                : static_cast<std::size_t>(o->test_frames);
    hgt::generate_dataset(c, o->frames, test, out_dir);
  });
}

hgt_status hgt_dataset_open(const char* root, hgt_dataset** out) {
  return guarded([&] {
    require(root, "root");
    require(out, "out");
    *out = nullptr;
    if (!std::filesystem::exists(std::filesystem::path(root) / "manifest.json")) {
      throw hgt::IoError(std::string("no dataset manifest under ") + root);
    }
    *out = new hgt_dataset{hgt::read_dataset(root)};
  });
}

void hgt_dataset_close(hgt_dataset* dataset) { delete dataset; }

hgt_status hgt_dataset_info_get(const hgt_dataset* d, hgt_dataset_info* info) {
  return guarded([&] {
    require(d, "dataset");
    require(info, "info");
    const auto& m = d->dataset.manifest;
    info->frames = m.frames.size();
    info->train_frames = m.train.size();
    info->test_frames = m.test.size();
    info->total_points = 0;
    for (const auto& e : m.frames) info->total_points += e.points;
    info->width = m.width;
    info->height = m.height;
    info->noise_level = m.noise_level;
  });
}

hgt_status hgt_dataset_frame_id(const hgt_dataset* d, size_t index, const char** id) {
  return guarded([&] {
    require(d, "dataset");
    require(id, "id");
    if (index >= d->dataset.frames.size()) {
      throw hgt::InvalidArgumentError("frame index " + std::to_string(index) + " is out of range");
    }
    *id = d->dataset.frames[index].id.c_str();
  });
}

hgt_status hgt_model_init(const char* config_json, uint64_t seed, hgt_model** out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out, "out");
    *out = nullptr;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::exception& e) {
      throw hgt::ParseError(std::string("model config: ") + e.what());
    }
    *out = wrap(hgt::ModelParams::init(hgt::model_config_from_json(j), seed),
                nlohmann::json{{"seed", seed}});
  });
}

hgt_status hgt_model_load(const char* path, hgt_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    nlohmann::json meta;
    hgt::ModelParams p = hgt::ModelParams::load(path, &meta);
    *out = wrap(std::move(p), meta);
  });
}

hgt_status hgt_model_save(const hgt_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    nlohmann::json meta = nlohmann::json::object();
    if (model->has_seed) meta["seed"] = model->seed;
    model->params.save(path, meta);
  });
}

hgt_status hgt_model_info_get(const hgt_model* model, hgt_model_info* info) {
  return guarded([&] {
    require(model, "model");
    require(info, "info");
    info->variant = model->variant.c_str();
    info->parameters = model->params.parameter_count();
    info->attention_blocks = model->params.config().variant == hgt::Variant::kHgt
                                 ? model->params.config().attention_blocks
                                 : 0;
    info->has_seed = model->has_seed ? 1 : 0;
    info->seed = model->seed;
  });
}

void hgt_model_free(hgt_model* model) { delete model; }

void hgt_train_overrides_init(hgt_train_overrides* o) {
  if (!o) return;
  o->data = nullptr;
  o->out = nullptr;
  o->has_seed = 0;
  o->seed = 0;
  o->epochs = 0;
}

hgt_status hgt_train(const char* config_path, const hgt_train_overrides* overrides,
                     hgt_progress_fn progress, void* user, hgt_model** out_model) {
  return guarded([&] {
    require(config_path, "config_path");
    if (out_model) *out_model = nullptr;
    hgt::TrainConfig config = hgt::load_train_config(config_path);
    if (overrides) {
      if (overrides->data) config.data = overrides->data;
      if (overrides->out) config.out = overrides->out;
      if (overrides->has_seed) config.seed = overrides->seed;
      if (overrides->epochs > 0) config.epochs = overrides->epochs;
    }
    hgt::ProgressFn fn;
    if (progress) {
      fn = [&](const hgt::EpochReport& r) {
        progress(r.epoch, r.split.c_str(), r.mse, r.mean_angle_deg, r.seconds, user);
      };
    }
    hgt::TrainResult result = hgt::train(config, fn);
    if (out_model) *out_model = wrap(std::move(result.params), nlohmann::json{{"seed", config.seed}});
  });
}

void hgt_eval_options_init(hgt_eval_options* o) {
  if (!o) return;
  o->method = "pca";
  o->split = "test";
  o->model = nullptr;
  o->predictions_dir = nullptr;
  o->pane_rows = 4;
  o->pane_cols = 4;
  o->has_seed = 0;
  o->seed = 0;
  o->radius = 0.75;
  o->neighbor_count = 60;
}

hgt_status hgt_evaluate(const hgt_dataset* d, const hgt_eval_options* o, hgt_report** out) {
  return guarded([&] {
    require(d, "dataset");
    require(o, "options");
    require(out, "out");
    require(o->method, "options.method");
    *out = nullptr;
    const std::string method = o->method;
    const std::string split = o->split ? o->split : "test";
    hgt::EvalReport report;
    if (method == "pca") {
      hgt::PcaOptions pca;
      pca.radius = o->radius;
      pca.neighbor_count = o->neighbor_count;
      pca.seed = o->has_seed ? o->seed : 0;
      report = hgt::evaluate_pca(d->dataset, split, pca);
    } else if (method == "hgt" || method == "hgn") {
      if (!o->model) throw hgt::InvalidArgumentError("method '" + method + "' needs a checkpoint");
      if (o->model->variant != method) {
        throw hgt::InvalidArgumentError("checkpoint holds a '" + o->model->variant +
                                        "' model, not '" + method + "'");
      }
      report = hgt::evaluate_model(d->dataset, split, o->model->params,
                                   grid_of(o->pane_rows, o->pane_cols),
                                   seed_of(o->model, o->has_seed, o->seed));
    } else if (method == "predictions") {
      require(o->predictions_dir, "options.predictions_dir");
      report = hgt::evaluate_prediction_dir(d->dataset, split, o->predictions_dir);
    } else {
      throw hgt::InvalidArgumentError("unknown method '" + method + "' (pca|hgt|hgn|predictions)");
    }
    auto* r = new hgt_report{std::move(report), hgt::ErrorDistribution({})};
    r->distribution = r->report.distribution();
    *out = r;
  });
}

double hgt_report_mean_angle_deg(const hgt_report* report) {
  return report ? report->report.mean_angle_deg : 0.0;
}

size_t hgt_report_point_count(const hgt_report* report) {
  return report ? report->report.points.size() : 0;
}

hgt_status hgt_report_point(const hgt_report* report, size_t index, const char** frame_id,
                            size_t* point_id, double* angle_deg) {
  return guarded([&] {
    require(report, "report");
    if (index >= report->report.points.size()) {
      throw hgt::InvalidArgumentError("report point index " + std::to_string(index) + " is out of range");
    }
    const hgt::PointError& p = report->report.points[index];
    if (frame_id) *frame_id = p.frame_id.c_str();
    if (point_id) *point_id = p.point_id;
    if (angle_deg) *angle_deg = hgt::rad_to_deg(p.angle);
  });
}

hgt_status hgt_report_quantile(const hgt_report* report, double q, double* angle_deg) {
  return guarded([&] {
    require(report, "report");
    require(angle_deg, "angle_deg");
    *angle_deg = hgt::rad_to_deg(report->distribution.quantile(q));
  });
}

hgt_status hgt_report_write(const hgt_report* report, const char* out_dir, size_t resolution) {
  return guarded([&] {
    require(report, "report");
    require(out_dir, "out_dir");
    hgt::write_report(report->report, out_dir, resolution == 0 ? 512 : resolution);
  });
}

void hgt_report_free(hgt_report* report) { delete report; }

hgt_status hgt_predict(const hgt_dataset* d, const hgt_model* model, const char* split,
                       int pane_rows, int pane_cols, int has_seed, uint64_t seed,
                       const char* out_dir) {
  return guarded([&] {
    require(d, "dataset");
    require(model, "model");
    require(out_dir, "out_dir");
    const std::string which = split ? split : "test";
    std::vector<const hgt::Frame*> frames;
    if (which == "all") {
      for (const auto& f : d->dataset.frames) frames.push_back(&f);
    } else {
      frames = d->dataset.split(which);
    }
    const hgt::PaneGrid grid = grid_of(pane_rows, pane_cols);
    const std::uint64_t s = seed_of(model, has_seed, seed);
    for (const hgt::Frame* f : frames) {
      const hgt::FrameInput input = hgt::prepare_frame(*f, model->params.config(), hgt::frame_seed(s, f->id));
      hgt::write_predictions(out_dir, f->id, hgt::predict_frame(input, model->params, grid).normals);
    }
  });
}

hgt_status hgt_attention_dump(const hgt_dataset* d, const hgt_model* model, const char* frame_id,
                              size_t point, int pane_rows, int pane_cols, int has_seed,
                              uint64_t seed, int trace, const char* out_dir) {
  return guarded([&] {
    require(d, "dataset");
    require(model, "model");
    require(frame_id, "frame_id");
    require(out_dir, "out_dir");
    const hgt::Frame& frame = d->dataset.frame(frame_id);
    const hgt::AttentionDump dump = hgt::attention_dump(
        frame, model->params, point, grid_of(pane_rows, pane_cols), seed_of(model, has_seed, seed));
    hgt::write_attention_dump(dump, frame, out_dir, trace != 0);
  });
}

hgt_status hgt_summarize(const char* const* summary_paths, size_t count, const char* out_dir) {
  return guarded([&] {
    require(summary_paths, "summary_paths");
    require(out_dir, "out_dir");
    if (count == 0) throw hgt::InvalidArgumentError("summarize needs at least one summary.csv");
    std::vector<hgt::SummaryRow> rows;
    for (size_t i = 0; i < count; ++i) {
      require(summary_paths[i], "summary path");
      for (auto& r : hgt::read_summary_csv(summary_paths[i])) rows.push_back(std::move(r));
    }
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path out(out_dir);
    hgt::io::write_file_atomic(out / "summary.csv", hgt::summary_csv(rows));
    hgt::io::write_file_atomic(out / "summary.txt", hgt::summary_table(rows));
  });
}

}  // extern "C"
