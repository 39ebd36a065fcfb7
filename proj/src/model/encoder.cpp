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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hgt/error.hpp"
#include "hgt/network.hpp"

namespace hgt {

namespace {

// Everything before the batch norm: attention-weighted mix, projected by Wo.
Tensor attend(const Tensor& tokens, const ModelParams& params, const std::string& pre,
              ForwardContext& ctx) {
  const ModelConfig& cfg = params.config();
  if (tokens.rank() != 2 || tokens.dim(0) == 0) {
    throw DimensionError("attention_block: expected non-empty [N x D] tokens, got " +
                         shape_string(tokens.shape()));
  }
  const std::size_t n = tokens.dim(0);
  const double d = static_cast<double>(tokens.dim(1));

  Tensor q = ops::matmul(tokens, params.at(pre + ".wq"));
  Tensor k = ops::matmul(tokens, params.at(pre + ".wk"));
  Tensor logits = ops::scale(ops::matmul(q, ops::transpose(k)), 1.0 / std::sqrt(d));
  Tensor a = ops::row_softmax(logits);
  if (cfg.attention_norm == AttentionNorm::kOffset) a = ops::column_normalize(a);
  ctx.peak_attention_elements = std::max(ctx.peak_attention_elements, n * n);
  if (ctx.trace) ctx.attention.push_back(a);

  Tensor mixed = cfg.combine == Combine::kValue
                     ? ops::matmul(a, ops::matmul(tokens, params.at(pre + ".wv")))
                     : ops::matmul(a, q);
  return ops::matmul(mixed, params.at(pre + ".wo"));
}

}  // namespace

std::vector<Tensor> attention_block(std::span<const Tensor> tokens, const ModelParams& params,
                                    std::size_t block, ForwardContext& ctx) {
  if (tokens.empty()) throw DimensionError("attention_block: no samples");
  const std::string pre = "attn" + std::to_string(block);
  std::vector<Tensor> projected;
  std::vector<std::size_t> offsets{0};
  for (const Tensor& t : tokens) {
    projected.push_back(attend(t, params, pre, ctx));
    offsets.push_back(offsets.back() + t.dim(0));
  }
  const Tensor stacked = projected.size() == 1 ? projected.front() : ops::concat(projected, 0);

  ops::BatchMoments moments;
  const bool train = ctx.mode == ops::BatchNormMode::kTrain;
  Tensor normed = ops::batchnorm(stacked, params.at(pre + ".gamma"), params.at(pre + ".beta"),
                                 params.running().at(block), ctx.mode,
                                 train ? &moments : nullptr);
  if (train) ctx.moments.push_back(std::move(moments));

  std::vector<Tensor> out;
  for (std::size_t s = 0; s < tokens.size(); ++s) {
    Tensor part = normed;
    if (tokens.size() > 1) {
      std::vector<std::size_t> rows(offsets[s + 1] - offsets[s]);
      std::iota(rows.begin(), rows.end(), offsets[s]);
      part = ops::gather_rows(normed, rows);
    }
    out.push_back(ops::add(part, tokens[s]));
  }
  return out;
}

Tensor attention_block(const Tensor& tokens, const ModelParams& params, std::size_t block,
                       ForwardContext& ctx) {
  return attention_block(std::span<const Tensor>(&tokens, 1), params, block, ctx).front();
}

std::vector<Tensor> encode(std::span<const Tensor> tokens, const ModelParams& params,
                           ForwardContext& ctx) {
  const int blocks = params.config().attention_blocks;
  if (blocks < 1) throw ConfigError("encode: at least one attention block is required");
  std::vector<Tensor> x(tokens.begin(), tokens.end());
  for (int b = 0; b < blocks; ++b) x = attention_block(x, params, static_cast<std::size_t>(b), ctx);
  return x;
}

Tensor encode(const Tensor& tokens, const ModelParams& params, ForwardContext& ctx) {
  return encode(std::span<const Tensor>(&tokens, 1), params, ctx).front();
}

Tensor hgn_forward(const Tensor& tokens, const ModelParams& params) {
  Tensor h = ops::relu(ops::linear(tokens, params.at("hgn.weight"), params.at("hgn.bias")));
  Tensor global = ops::reduce_max(h, 0);
  const Tensor parts[] = {tokens, ops::broadcast_rows(global, tokens.dim(0))};
  return ops::concat(parts, 1);
}

NormalPrediction predict_head(const Tensor& encoded, const ModelParams& params) {
  static const double kFallback[3] = {0.0, 0.0, -1.0};
  Tensor h = ops::relu(ops::linear(encoded, params.at("head.0.weight"), params.at("head.0.bias")));
  Tensor raw = ops::linear(h, params.at("head.1.weight"), params.at("head.1.bias"));
  NormalPrediction out;
  out.normals = ops::normalize_rows(raw, kHeadMinNorm, kFallback, &out.guarded);
  return out;
}

NormalPrediction forward_sample(const FrameInput& input, std::span<const std::size_t> subset,
                                const Tensor& features, const ModelParams& params,
                                ForwardContext& ctx) {
  Tensor tokens = build_tokens(input, subset, features, params);
  Tensor encoded = params.config().variant == Variant::kHgt ? encode(tokens, params, ctx)
                                                            : hgn_forward(tokens, params);
  return predict_head(encoded, params);
}

Tensor target_normals(const Frame& frame, std::span<const std::size_t> subset) {
  if (!frame.cloud.has_normals()) {
    throw ContractError("frame " + frame.id + " has no ground-truth normals");
  }
  std::vector<double> v(subset.size() * 3);
  for (std::size_t r = 0; r < subset.size(); ++r) {
    const std::size_t i = subset[r];
    const Vec3 n = orient_toward(frame.cloud.normals[i], frame.cloud.points[i], Vec3::Zero());
    for (int k = 0; k < 3; ++k) v[3 * r + k] = n[k];
  }
  return Tensor::from({subset.size(), 3}, std::move(v));
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.rank() != 2 || target.rank() != 2 || pred.dim(0) != target.dim(0)) {
    throw ContractError("mse_loss: " + shape_string(pred.shape()) + " predictions vs " +
                        shape_string(target.shape()) + " targets");
  }
  return ops::mean_squared_row_distance(pred, target);
}

}  // namespace hgt
