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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgt/dataset.hpp"
#include "hgt/model.hpp"
#include "hgt/network.hpp"
#include "hgt/optim.hpp"

namespace hgt {

// ------------------------------------------------------------------- panes

struct PaneGrid {
  int rows = 4;
  int cols = 4;
};

/// "RxC", e.g. "4x4".
PaneGrid parse_pane_grid(const std::string& text);

struct PanePartition {
  PaneGrid grid;
  // Pane of each point: row * cols + col with row = floor(v / (H / rows)),
  // col = floor(u / (W / cols)).
  std::vector<std::size_t> assignment;
};

PanePartition partition_panes(const Frame& frame, PaneGrid grid);

struct PaneSample {
  std::size_t frame = 0;  // caller's frame slot
  std::size_t pane = 0;
  std::vector<std::size_t> points;  // ascending point indices
};

/// One sample per non-empty pane, in pane order. Each sample is evaluated
/// against the full frame image and cloud.
std::vector<PaneSample> make_panes(const Frame& frame, std::size_t frame_slot, PaneGrid grid);

// ---------------------------------------------------------------- training

struct TrainConfig {
  std::filesystem::path data;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int epochs = 200;
  int batch_size = 8;
  PaneGrid grid;
  AdamConfig adam;
  double clip_norm = 10.0;  // <= 0 disables clipping
  // When set, must equal the dataset's noise level.
  std::optional<double> noise_level;
  ModelConfig model;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);

struct EpochReport {
  int epoch = 0;
  std::string split;
  double mse = 0.0;
  double mean_angle_deg = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochReport> reports;
  std::vector<double> step_losses;
  // Largest attention matrix (elements) built while training, and the size
  // a single whole-frame sample of the largest training frame would need.
  std::size_t peak_attention_elements = 0;
  std::size_t full_frame_attention_elements = 0;
};

using ProgressFn = std::function<void(const EpochReport&)>;

/// Reads the dataset named by config.data and trains. Writes under
/// config.out: config.json, loss.csv, steps.csv, checkpoint.hgt (after every
/// epoch). Deterministic in config.seed and independent of HGT_THREADS.
TrainResult train(const TrainConfig& config, const ProgressFn& progress = {});
TrainResult train(const TrainConfig& config, const Dataset& dataset,
                  const ProgressFn& progress = {});

/// Neighbourhood seed used for a frame during training and evaluation.
std::uint64_t frame_seed(std::uint64_t seed, const std::string& frame_id);

struct BatchResult {
  double loss = 0.0;                          // sum of per-sample MSE / batch size
  std::vector<const PaneSample*> order;       // samples sorted by (frame, pane)
  std::vector<double> sample_mse;             // in `order`
  std::vector<std::vector<double>> grads;     // parameter order
  std::vector<ops::BatchMoments> moments;     // per block, over the whole batch
  std::vector<std::vector<Vec3>> predictions;           // per sample
  std::size_t peak_attention_elements = 0;
};

/// Forward and backward of one batch in train mode. Samples are sorted by
/// (frame, pane), so the result does not depend on their order in `batch`,
/// and each frame's image features are computed once. Batch norm statistics
/// span the tokens of every sample in the batch. Gradients are taken on a
/// private copy of the parameters.
class BatchRunner {
 public:
  BatchRunner();
  ~BatchRunner();

  BatchResult run(const ModelParams& params, std::span<const FrameInput> frames,
                  std::span<const PaneSample* const> batch);

 private:
  struct Pool;
  std::unique_ptr<Pool> pool_;
};

/// Updates the running statistics of every block from a batch.
void apply_batch_moments(ModelParams& params, const BatchResult& result);

// --------------------------------------------------------------- inference

struct FramePrediction {
  std::vector<Vec3> normals;
  std::vector<std::uint8_t> guarded;
  std::size_t peak_attention_elements = 0;
};

/// Eval-mode prediction of every point of the frame, pane by pane.
FramePrediction predict_frame(const FrameInput& input, const ModelParams& params, PaneGrid grid);

}  // namespace hgt
