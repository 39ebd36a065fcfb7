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
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hgt/checkpoint.hpp"
#include "hgt/ops.hpp"
#include "hgt/tensor.hpp"

namespace hgt {

enum class Variant { kHgt, kHgn };
enum class Reduction { kMax, kMean };
// kSoftmax: row softmax of QK^T / sqrt(D). kOffset: row softmax followed by
// column normalization (the double-normalized style of point transformers).
enum class AttentionNorm { kSoftmax, kOffset };
// Which projection the attention weights mix: V (default) or Q.
enum class Combine { kValue, kQuery };

struct ModelConfig {
  Variant variant = Variant::kHgt;
  std::vector<int> unet_channels{16, 32, 64};
  int d_img = 32;
  std::vector<int> point_mlp{32, 64};  // last width is D_geo
  std::vector<int> pos_mlp{32};        // last width is D_pos
  int d_token = 128;
  int neighbor_count = 60;
  double radius = 0.75;
  int attention_blocks = 3;
  int head_hidden = 64;
  Reduction reduction = Reduction::kMax;
  AttentionNorm attention_norm = AttentionNorm::kSoftmax;
  Combine combine = Combine::kValue;

  int d_geo() const { return point_mlp.back(); }
  int d_pos() const { return pos_mlp.back(); }
  int fused_width() const { return d_img + d_geo() + d_pos(); }
  int levels() const { return static_cast<int>(unet_channels.size()); }

  // Throws ConfigError naming the offending field.
  void validate() const;

  // Reduced widths that train in minutes on one core: U-Net (4, 8, 16),
  // D_img 8, point MLP (16, 32), positional MLP (16), D 32, 16 neighbours.
  static ModelConfig desk();
};

nlohmann::json to_json(const ModelConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

/// Learnable weights plus the batch-norm running statistics of every
/// attention block. Names are stable across variants, so HGT and HGN
/// initialized from the same seed share every frontend weight.
class ModelParams {
 public:
  ModelParams() = default;

  /// Fan-in scaled uniform initialization. Each tensor draws from its own
  /// stream derived from (seed, name).
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<NamedTensor>& tensors() { return tensors_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  std::size_t parameter_count() const;

  std::vector<ops::RunningStats>& running() { return running_; }
  const std::vector<ops::RunningStats>& running() const { return running_; }

  /// Deep copy; the clone shares no storage with the original.
  ModelParams clone() const;
  /// Copies values (not gradients) from `other`, which must have the same
  /// layout.
  void assign_values(const ModelParams& other);
  void zero_grad();

  void save(const std::filesystem::path& path, nlohmann::json meta = {}) const;
  static ModelParams load(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

 private:
  void add(const std::string& name, Shape shape);
  void reindex();

  ModelConfig config_;
  std::vector<NamedTensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<ops::RunningStats> running_;
};

}  // namespace hgt
