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
#include <string>

#include "hgt/error.hpp"
#include "hgt/network.hpp"

namespace hgt {

namespace {

Tensor conv_relu(const Tensor& x, const ModelParams& p, const std::string& prefix) {
  Tensor y = ops::conv2d(x, p.at(prefix + ".weight"), 1, 1);
  return ops::relu(ops::add_channel_bias(y, p.at(prefix + ".bias")));
}

Tensor mlp(const Tensor& x, const ModelParams& p, const std::string& prefix, std::size_t layers) {
  Tensor h = x;
  for (std::size_t k = 0; k < layers; ++k) {
    const std::string pre = prefix + "." + std::to_string(k);
    h = ops::relu(ops::linear(h, p.at(pre + ".weight"), p.at(pre + ".bias")));
  }
  return h;
}

}  // namespace

FrameInput prepare_frame(const Frame& frame, const ModelConfig& config, std::uint64_t seed) {
  FrameInput in;
  in.frame = &frame;
  const int w = frame.image.width, h = frame.image.height;
  std::vector<double> chw(static_cast<std::size_t>(3) * w * h);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        chw[(static_cast<std::size_t>(c) * h + y) * w + x] = frame.image.at(x, y, c);
  in.image = Tensor::from({3, static_cast<std::size_t>(h), static_cast<std::size_t>(w)},
                          std::move(chw));
  in.neighborhoods = all_neighborhoods(frame.cloud.points, config.radius,
                                       static_cast<std::size_t>(config.neighbor_count), seed);
  in.pixels.reserve(frame.size());
  for (const Pixel& px : frame.proj) in.pixels.push_back(pixel_index(px, frame.intrinsics));
  return in;
}

Tensor unet_features(const Tensor& image, const ModelParams& params) {
  const ModelConfig& cfg = params.config();
  const std::size_t levels = cfg.unet_channels.size();
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DimensionError("unet_features: expected [3 x H x W], got " + shape_string(image.shape()));
  }
  const std::size_t div = std::size_t{1} << (levels - 1);
  if (image.dim(1) % div != 0 || image.dim(2) % div != 0) {
    throw ConfigError("unet_features: image " + std::to_string(image.dim(2)) + "x" +
                      std::to_string(image.dim(1)) + " is not divisible by " +
                      std::to_string(div) + "; pad the image");
  }
  std::vector<Tensor> skips;
  Tensor x = conv_relu(image, params, "unet.enc0");
  skips.push_back(x);
  for (std::size_t l = 1; l < levels; ++l) {
    x = conv_relu(ops::max_pool2x(x), params, "unet.enc" + std::to_string(l));
    skips.push_back(x);
  }
  for (std::size_t l = levels - 1; l-- > 0;) {
    const Tensor parts[] = {ops::upsample2x(x), skips[l]};
    x = conv_relu(ops::concat(parts, 0), params, "unet.dec" + std::to_string(l));
  }
  Tensor out = ops::conv2d(x, params.at("unet.out.weight"), 1, 0);
  return ops::add_channel_bias(out, params.at("unet.out.bias"));
}

Tensor point_mlp(const Tensor& centered, const ModelParams& params) {
  return mlp(centered, params, "point", params.config().point_mlp.size());
}

Tensor positional_embedding(const Tensor& xyz, const ModelParams& params) {
  return mlp(xyz, params, "pos", params.config().pos_mlp.size());
}

Tensor fuse_and_reduce(const Tensor& f_img, const Tensor& f_geo, const Tensor& f_pos,
                       std::size_t count, const ModelParams& params) {
  const std::size_t rows = f_img.dim(0);
  if (count == 0 || rows % count != 0 || f_geo.dim(0) != rows || f_pos.dim(0) != rows) {
    throw DimensionError("fuse_and_reduce: " + std::to_string(rows) +
                         " rows do not form groups of " + std::to_string(count));
  }
  const Tensor parts[] = {f_img, f_geo, f_pos};
  Tensor fused = ops::relu(
      ops::linear(ops::concat(parts, 1), params.at("fuse.weight"), params.at("fuse.bias")));
  Tensor grouped = ops::reshape(fused, {rows / count, count, fused.dim(1)});
  return params.config().reduction == Reduction::kMax ? ops::reduce_max(grouped, 1)
                                                      : ops::reduce_mean(grouped, 1);
}

Tensor build_tokens(const FrameInput& input, std::span<const std::size_t> subset,
                    const Tensor& features, const ModelParams& params) {
  const Frame& frame = *input.frame;
  const std::size_t count = static_cast<std::size_t>(params.config().neighbor_count);
  if (subset.empty()) throw ContractError("build_tokens: empty point subset");
  std::vector<std::size_t> members;
  members.reserve(subset.size() * count);
  for (std::size_t i : subset) {
    if (i >= frame.size()) {
      throw ContractError("build_tokens: point " + std::to_string(i) + " outside frame " + frame.id);
    }
    const Neighborhood& nb = input.neighborhoods[i];
    if (nb.indices.size() != count) {
      throw ContractError("build_tokens: neighbourhood size differs from the model's neighbor_count");
    }
    members.insert(members.end(), nb.indices.begin(), nb.indices.end());
  }

  std::vector<std::size_t> pixels(members.size());
  std::vector<double> centered(members.size() * 3);
  for (std::size_t r = 0; r < members.size(); ++r) {
    const std::size_t j = members[r];
    const std::size_t i = subset[r / count];
    pixels[r] = input.pixels[j];
    const Vec3 d = frame.cloud.points[j] - frame.cloud.points[i];
    for (int k = 0; k < 3; ++k) centered[3 * r + k] = d[k];
  }

  // The embedding of a point depends only on the point, so it is evaluated
  // once per distinct neighbour and gathered.
  std::vector<std::size_t> unique = members;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<double> xyz(unique.size() * 3);
  for (std::size_t u = 0; u < unique.size(); ++u) {
    for (int k = 0; k < 3; ++k) xyz[3 * u + k] = frame.cloud.points[unique[u]][k];
  }
  std::vector<std::size_t> slot(members.size());
  for (std::size_t r = 0; r < members.size(); ++r) {
    slot[r] = static_cast<std::size_t>(
        std::lower_bound(unique.begin(), unique.end(), members[r]) - unique.begin());
  }

  Tensor f_img = ops::gather_pixels(features, pixels);
  Tensor f_geo = point_mlp(Tensor::from({members.size(), 3}, std::move(centered)), params);
  Tensor f_pos = ops::gather_rows(
      positional_embedding(Tensor::from({unique.size(), 3}, std::move(xyz)), params), slot);
  return fuse_and_reduce(f_img, f_geo, f_pos, count, params);
}

}  // namespace hgt
