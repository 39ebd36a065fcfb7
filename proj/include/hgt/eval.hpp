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
#include <string>
#include <utility>
#include <vector>

#include "hgt/dataset.hpp"
#include "hgt/model.hpp"
#include "hgt/train.hpp"

namespace hgt {

// ------------------------------------------------------------ distribution

/// Per-point angle errors in radians, sorted ascending.
class ErrorDistribution {
 public:
  explicit ErrorDistribution(std::vector<double> errors);

  const std::vector<double>& sorted() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }
  double mean() const { return mean_; }

  /// Linear interpolation between order statistics: position q * (n - 1).
  double quantile(double q) const;

 private:
  std::vector<double> sorted_;
  double mean_ = 0.0;
};

/// `resolution` evenly spaced q in [0, 1] (both ends included) with their
/// quantiles. Throws ContractError on an empty distribution.
std::vector<std::pair<double, double>> quantile_curve(const ErrorDistribution& dist,
                                                      std::size_t resolution = 512);

// ----------------------------------------------------------------- reports

struct PointError {
  std::string frame_id;
  std::size_t point_id = 0;
  double angle = 0.0;  // radians
};

struct EvalReport {
  std::string method;
  double noise_level = 0.0;
  double mean_angle_deg = 0.0;
  std::vector<PointError> points;
  std::vector<std::pair<std::string, double>> per_frame_deg;
  std::vector<std::pair<double, double>> deciles_deg;  // q = 0.1 ... 0.9
  std::size_t fallback_count = 0;  // degenerate neighbourhoods or guarded outputs
  std::size_t tie_count = 0;       // PCA eigenvalue ties

  ErrorDistribution distribution() const;
};

/// Builds a report from per-frame predictions (same order as `frames`).
/// Ground truth is compared sign-blind.
EvalReport make_report(const std::string& method, double noise_level,
                       const std::vector<const Frame*>& frames,
                       const std::vector<std::vector<Vec3>>& predictions);

struct PcaOptions {
  double radius = 0.75;
  int neighbor_count = 60;
  std::uint64_t seed = 0;
};

/// PCA normals of every point of a frame. Degenerate neighbourhoods fall
/// back to the direction from the point to the sensor.
std::vector<Vec3> pca_frame(const Frame& frame, const PcaOptions& options,
                            std::size_t* fallbacks = nullptr, std::size_t* ties = nullptr);

EvalReport evaluate_pca(const Dataset& dataset, const std::string& split, const PcaOptions& options);

EvalReport evaluate_model(const Dataset& dataset, const std::string& split,
                          const ModelParams& params, PaneGrid grid, std::uint64_t seed);

/// Predictions stored as <dir>/<frame_id>.f64 blobs of N x 3 doubles.
EvalReport evaluate_prediction_dir(const Dataset& dataset, const std::string& split,
                                   const std::filesystem::path& dir);
void write_predictions(const std::filesystem::path& dir, const std::string& frame_id,
                       const std::vector<Vec3>& normals);

/// errors.csv (frame_id,point_id,angle_deg), quantiles.csv (q,angle_deg),
/// summary.csv (method,noise,mean_angle_deg) and report.json.
void write_report(const EvalReport& report, const std::filesystem::path& out,
                  std::size_t resolution = 512);

// ----------------------------------------------------------------- summary

struct SummaryRow {
  std::string method;
  double noise_level = 0.0;
  double mean_angle_deg = 0.0;
};

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);
std::string summary_csv(const std::vector<SummaryRow>& rows);
/// Method x noise table of mean errors, followed by published reference
/// values for context.
std::string summary_table(const std::vector<SummaryRow>& rows);

// --------------------------------------------------------------- attention

struct AttentionDump {
  std::string frame_id;
  std::size_t query = 0;             // frame point index
  std::size_t row = 0;               // its row within the sample
  std::vector<std::size_t> members;  // frame point index of every row
  std::vector<Tensor> blocks;        // traced [N x N] weights per block
  std::vector<double> weights;       // row `row` of the first block
};

AttentionDump attention_dump(const Frame& frame, const ModelParams& params, std::size_t point,
                             PaneGrid grid, std::uint64_t seed);

/// attention.csv (point_id,u,v,weight) and attention.ppm; with `trace`,
/// also attention_block<b>.f64 per block and attention_index.json.
void write_attention_dump(const AttentionDump& dump, const Frame& frame,
                          const std::filesystem::path& out, bool trace);

}  // namespace hgt
