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

#include "hgt/tensor.hpp"

// Differentiable operations. Every op records a backward rule on the active
// tape when at least one input requires a gradient; otherwise it is a plain
// computation.
namespace hgt::ops {

// [M x K] . [K x P] -> [M x P]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// [N x D] + [D] broadcast over rows.
Tensor add_rowwise(const Tensor& a, const Tensor& bias);
// [D] -> [N x D]
Tensor broadcast_rows(const Tensor& row, std::size_t count);

Tensor relu(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Reductions over one axis; the axis is removed from the shape. Ties in
// reduce_max send the gradient to the lowest index.
Tensor reduce_max(const Tensor& x, std::size_t axis);
Tensor reduce_mean(const Tensor& x, std::size_t axis);

// All inputs agree on every dimension except `axis`.
Tensor concat(std::span<const Tensor> parts, std::size_t axis);

// Softmax along each row of an [N x M] matrix, stabilized by the row max.
Tensor row_softmax(const Tensor& x);
// Divides every column of a non-negative [N x M] matrix by its sum (plus
// 1e-9). Used for the double-normalized attention variant.
Tensor column_normalize(const Tensor& x);

// [N x D] -> [N x D], each row divided by its Euclidean norm. Rows whose
// norm is below `min_norm` are replaced by `fallback` (gradient zero) and
// flagged in `guarded` when supplied.
Tensor normalize_rows(const Tensor& x, double min_norm,
                      std::span<const double> fallback,
                      std::vector<std::uint8_t>* guarded = nullptr);

// Rows of an [R x D] matrix, in the order of `rows` (repeats allowed).
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
// Feature vectors of a [C x H x W] map at flat pixel indices (row * W + col),
// returned as [len x C].
Tensor gather_pixels(const Tensor& fmap, std::span<const std::size_t> pixels);

// Cross-correlation (the kernel is not flipped).
// input [C x H x W], kernel [F x C x k x k] -> [F x H' x W'] with
// H' = (H + 2 padding - k) / stride + 1, which must be integral.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride,
              std::size_t padding);
// [C x H x W] + [C]
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);
// 2x2 window, stride 2. H and W must be even.
Tensor max_pool2x(const Tensor& x);
// Nearest-neighbour 2x upsampling.
Tensor upsample2x(const Tensor& x);

// x [R x in] . W [in x out] + b [out]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Squared Euclidean distance between matching rows, averaged over rows.
Tensor mean_squared_row_distance(const Tensor& a, const Tensor& b);

enum class BatchNormMode { kTrain, kEval };

struct RunningStats {
  std::vector<double> mean;
  std::vector<double> var;

  static RunningStats identity(std::size_t features);
};

struct BatchMoments {
  std::vector<double> mean;
  std::vector<double> var;  // biased (divided by N)
  std::size_t count = 0;
};

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// Per-feature standardization of [N x D] followed by gamma * x + beta.
// Train mode uses the batch moments (N >= 2 required) and reports them
// through `observed`; eval mode uses `running`.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 const RunningStats& running, BatchNormMode mode,
                 BatchMoments* observed = nullptr);

// running <- (1 - momentum) running + momentum batch, with the unbiased batch
// variance.
void update_running_stats(RunningStats& running, const BatchMoments& batch,
                          double momentum = kBatchNormMomentum);

}  // namespace hgt::ops
