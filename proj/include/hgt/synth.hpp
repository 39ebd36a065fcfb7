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
#include <string>
#include <vector>

#include "hgt/geometry.hpp"
#include "hgt/scene.hpp"

namespace hgt {

/// H x W x 3, row-major, interleaved RGB in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;

  double at(int x, int y, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

inline constexpr double kAmbient = 0.2;

/// albedo * (max(0, n.l) * intensity + ambient), clamped to [0, 1].
Vec3 lambert(const Vec3& albedo, const Vec3& normal, const DirectionalLight& light);

/// Horizon gradient for rays that miss; `elevation` is the ray's z component.
Vec3 sky_color(double elevation);

/// One ray per pixel center. Values are quantized to multiples of 1/255 so
/// that the 8-bit image file stores them exactly.
Image render_image(const Scene& scene, const CameraIntrinsics& intr);

/// Half-open pixel rectangle [u0, u1) x [v0, v1).
struct PixelRect {
  int u0 = 0;
  int v0 = 0;
  int u1 = 0;
  int v1 = 0;
};

/// Lower part of the image: rows from (1 - fraction) * height to the bottom.
PixelRect lower_region(const CameraIntrinsics& intr, double fraction);

struct LidarScan {
  PointCloud cloud;          // camera frame, with ground-truth normals
  std::vector<Pixel> proj;   // pixel center each point was sampled through
};

/// Casts one ray through the center of every (stride_u, stride_v)-th pixel
/// of `mask`. Misses are dropped, so points are even on the image, not in
/// space. Normals face the camera. Throws DegenerateError on zero hits.
LidarScan sample_lidar(const Scene& scene, const CameraIntrinsics& intr,
                       const PixelRect& mask, int stride_u, int stride_v);

/// Median camera-frame depth (z) of the cloud.
double depth_scale(const PointCloud& cloud);

/// z <- z + e, e ~ N(0, (level * depth_scale(cloud))^2); x and y untouched.
PointCloud add_noise(const PointCloud& cloud, double level, Rng& rng);

struct Frame {
  std::string id;
  Image image;
  PointCloud cloud;  // camera frame; normals are the ground truth
  std::vector<Pixel> proj;
  CameraIntrinsics intrinsics;
  double noise_level = 0.0;

  std::size_t size() const { return cloud.size(); }
  void validate() const;
};

struct SynthConfig {
  int width = 400;
  int height = 400;
  double hfov_deg = 70.0;
  double lower_fraction = 0.75;
  int stride_u = 4;
  int stride_v = 3;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  int min_objects = 5;
  int max_objects = 20;

  CameraIntrinsics intrinsics() const;
};

/// Street-like layout for one frame along a forward drive path: ground
/// plane, buildings, vehicles, poles and round shrubs.
Scene make_scene(const SynthConfig& config, std::size_t frame_index);

/// Deterministic in (config.seed, frame_index).
Frame generate_frame(const SynthConfig& config, std::size_t frame_index);

std::string frame_id(std::size_t frame_index);

}  // namespace hgt
