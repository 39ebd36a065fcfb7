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
#include <span>
#include <vector>

#include "hgt/model.hpp"
#include "hgt/neighbors.hpp"
#include "hgt/synth.hpp"

namespace hgt {

// ---------------------------------------------------------------- frontend

/// Everything about a frame the network reads besides the weights:
/// the image as a [3 x H x W] tensor, one neighbourhood per point over the
/// full frame cloud, and each point's flat pixel index.
struct FrameInput {
  const Frame* frame = nullptr;
  Tensor image;
  std::vector<Neighborhood> neighborhoods;
  std::vector<std::size_t> pixels;
};

/// Neighbourhoods are drawn with derive_seed(seed, point) streams.
FrameInput prepare_frame(const Frame& frame, const ModelConfig& config, std::uint64_t seed);

/// [3 x H x W] -> [D_img x H x W]. H and W must be divisible by
/// 2^(levels - 1).
Tensor unet_features(const Tensor& image, const ModelParams& params);

/// Shared MLP over rows of centred neighbour coordinates: [R x 3] -> [R x D_geo].
Tensor point_mlp(const Tensor& centered, const ModelParams& params);

/// MLP over raw camera-frame coordinates: [R x 3] -> [R x D_pos].
Tensor positional_embedding(const Tensor& xyz, const ModelParams& params);

/// Rows are grouped by centre, `count` consecutive rows per centre:
/// G(f_img | f_geo | f_pos) per row, reduced over each group. Returns
/// [R / count x D].
Tensor fuse_and_reduce(const Tensor& f_img, const Tensor& f_geo, const Tensor& f_pos,
                       std::size_t count, const ModelParams& params);

/// Tokens of the points in `subset`. `features` is unet_features of the
/// frame image, computed once and shared by every subset of the frame.
Tensor build_tokens(const FrameInput& input, std::span<const std::size_t> subset,
                    const Tensor& features, const ModelParams& params);

// ----------------------------------------------------------------- encoder

struct ForwardContext {
  ops::BatchNormMode mode = ops::BatchNormMode::kEval;
  bool trace = false;
  // Filled by the forward pass.
  std::vector<Tensor> attention;            // one [N x N] per block when tracing
  std::vector<ops::BatchMoments> moments;   // one per block in train mode
  std::size_t peak_attention_elements = 0;  // largest A materialized
};

Tensor attention_block(const Tensor& tokens, const ModelParams& params, std::size_t block,
                       ForwardContext& ctx);

/// One block over several samples. Attention stays within each sample; the
/// batch norm statistics span the rows of every sample.
std::vector<Tensor> attention_block(std::span<const Tensor> tokens, const ModelParams& params,
                                    std::size_t block, ForwardContext& ctx);

/// All attention blocks in sequence.
Tensor encode(const Tensor& tokens, const ModelParams& params, ForwardContext& ctx);
std::vector<Tensor> encode(std::span<const Tensor> tokens, const ModelParams& params,
                           ForwardContext& ctx);

/// Ablation encoder: each token concatenated with max over tokens of
/// ReLU(linear(token)). [N x D] -> [N x 2D].
Tensor hgn_forward(const Tensor& tokens, const ModelParams& params);

struct NormalPrediction {
  Tensor normals;                     // [N x 3], unit rows
  std::vector<std::uint8_t> guarded;  // 1 where the raw output was ~zero
};

inline constexpr double kHeadMinNorm = 1e-8;

/// Per-token MLP to 3D, normalized to unit length. Rows with norm below
/// kHeadMinNorm become (0, 0, -1) and are flagged.
NormalPrediction predict_head(const Tensor& encoded, const ModelParams& params);

/// Tokens -> encoder of the configured variant -> head.
NormalPrediction forward_sample(const FrameInput& input, std::span<const std::size_t> subset,
                                const Tensor& features, const ModelParams& params,
                                ForwardContext& ctx);

/// Oriented ground truth of the subset as an [N x 3] constant tensor.
Tensor target_normals(const Frame& frame, std::span<const std::size_t> subset);

/// Mean over rows of the squared distance between prediction and target.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace hgt
