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

/* C interface of the hgt-normals library.
 *
 * Every fallible call returns an hgt_status; on failure hgt_last_error()
 * describes the problem (thread-local, valid until the next call on the
 * same thread). Handles are opaque and released with their *_free / *_close
 * function. Strings are UTF-8 paths or identifiers.
 */
#ifndef HGT_NORMALS_H
#define HGT_NORMALS_H

#include <stddef.h>
#include <stdint.h>

#if defined(HGT_BUILDING_LIBRARY)
#define HGT_API __attribute__((visibility("default")))
#else
#define HGT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hgt_status {
  HGT_OK = 0,
  HGT_ERR_INVALID_ARGUMENT = 1,
  HGT_ERR_DIMENSION = 2,
  HGT_ERR_CONFIGURATION = 3,
  HGT_ERR_DEGENERATE = 4,
  HGT_ERR_CONTRACT = 5,
  HGT_ERR_IO = 6,
  HGT_ERR_PARSE = 7,
  HGT_ERR_NUMERIC = 8,
  HGT_ERR_INTERNAL = 9
} hgt_status;

HGT_API const char* hgt_version(void);
HGT_API const char* hgt_last_error(void);
HGT_API const char* hgt_status_name(hgt_status status);

/* Parses "RxC" (e.g. "4x4"). */
HGT_API hgt_status hgt_parse_pane_grid(const char* text, int* rows, int* cols);

/* ------------------------------------------------------------ synthesis */

typedef struct hgt_synth_options {
  size_t frames;
  long test_frames; /* < 0: round(frames * 30 / 151) */
  int width;
  int height;
  double hfov_deg;
  double lower_fraction;
  int stride_u;
  int stride_v;
  double noise_level;
  uint64_t seed;
  int min_objects;
  int max_objects;
} hgt_synth_options;

HGT_API void hgt_synth_options_init(hgt_synth_options* options);
HGT_API hgt_status hgt_synth_generate(const hgt_synth_options* options, const char* out_dir);

/* -------------------------------------------------------------- dataset */

typedef struct hgt_dataset hgt_dataset;

typedef struct hgt_dataset_info {
  size_t frames;
  size_t train_frames;
  size_t test_frames;
  size_t total_points;
  int width;
  int height;
  double noise_level;
} hgt_dataset_info;

HGT_API hgt_status hgt_dataset_open(const char* root, hgt_dataset** out);
HGT_API void hgt_dataset_close(hgt_dataset* dataset);
HGT_API hgt_status hgt_dataset_info_get(const hgt_dataset* dataset, hgt_dataset_info* info);
/* Id of the index-th frame in manifest order; owned by the dataset. */
HGT_API hgt_status hgt_dataset_frame_id(const hgt_dataset* dataset, size_t index, const char** id);

/* ---------------------------------------------------------------- model */

typedef struct hgt_model hgt_model;

typedef struct hgt_model_info {
  const char* variant; /* "hgt" or "hgn"; owned by the model */
  size_t parameters;
  int attention_blocks;
  int has_seed; /* checkpoint records its training seed */
  uint64_t seed;
} hgt_model_info;

/* `config_json` is a model config object, e.g. {"preset":"desk"}. */
HGT_API hgt_status hgt_model_init(const char* config_json, uint64_t seed, hgt_model** out);
HGT_API hgt_status hgt_model_load(const char* path, hgt_model** out);
HGT_API hgt_status hgt_model_save(const hgt_model* model, const char* path);
HGT_API hgt_status hgt_model_info_get(const hgt_model* model, hgt_model_info* info);
HGT_API void hgt_model_free(hgt_model* model);

/* ------------------------------------------------------------- training */

typedef void (*hgt_progress_fn)(int epoch, const char* split, double mse, double mean_angle_deg,
                                double seconds, void* user);

typedef struct hgt_train_overrides {
  const char* data; /* NULL keeps the config value */
  const char* out;
  int has_seed;
  uint64_t seed;
  int epochs; /* <= 0 keeps the config value */
} hgt_train_overrides;

HGT_API void hgt_train_overrides_init(hgt_train_overrides* overrides);
/* Trains from a JSON config file. `overrides`, `progress` and `out_model`
 * may be NULL. */
HGT_API hgt_status hgt_train(const char* config_path, const hgt_train_overrides* overrides,
                             hgt_progress_fn progress, void* user, hgt_model** out_model);

/* ----------------------------------------------------------- evaluation */

typedef struct hgt_report hgt_report;

typedef struct hgt_eval_options {
  const char* method; /* "pca", "hgt", "hgn" or "predictions" */
  const char* split;  /* "test" (default) or "train" */
  const hgt_model* model;
  const char* predictions_dir;
  int pane_rows;
  int pane_cols;
  int has_seed; /* otherwise the model's training seed, else 0 */
  uint64_t seed;
  double radius;      /* PCA neighbourhood */
  int neighbor_count; /* PCA neighbourhood */
} hgt_eval_options;

HGT_API void hgt_eval_options_init(hgt_eval_options* options);
HGT_API hgt_status hgt_evaluate(const hgt_dataset* dataset, const hgt_eval_options* options,
                                hgt_report** out);
HGT_API double hgt_report_mean_angle_deg(const hgt_report* report);
HGT_API size_t hgt_report_point_count(const hgt_report* report);
HGT_API hgt_status hgt_report_point(const hgt_report* report, size_t index, const char** frame_id,
                                    size_t* point_id, double* angle_deg);
HGT_API hgt_status hgt_report_quantile(const hgt_report* report, double q, double* angle_deg);
HGT_API hgt_status hgt_report_write(const hgt_report* report, const char* out_dir,
                                    size_t resolution);
HGT_API void hgt_report_free(hgt_report* report);

/* Writes <out_dir>/<frame_id>.f64 (N x 3 unit normals) for every frame of
 * `split` ("train", "test" or "all"). */
HGT_API hgt_status hgt_predict(const hgt_dataset* dataset, const hgt_model* model,
                               const char* split, int pane_rows, int pane_cols, int has_seed,
                               uint64_t seed, const char* out_dir);

/* First-block attention row of one point: attention.csv, attention.ppm,
 * and with `trace` the full per-block matrices. */
HGT_API hgt_status hgt_attention_dump(const hgt_dataset* dataset, const hgt_model* model,
                                      const char* frame_id, size_t point, int pane_rows,
                                      int pane_cols, int has_seed, uint64_t seed, int trace,
                                      const char* out_dir);

/* Merges summary.csv files into <out_dir>/summary.csv and summary.txt. */
HGT_API hgt_status hgt_summarize(const char* const* summary_paths, size_t count,
                                 const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* HGT_NORMALS_H */
