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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace hgt {

using Vec3 = Eigen::Vector3d;
using Rng = std::mt19937_64;

/// SplitMix64 finalizer over (base, a, b). Gives every frame and every point
/// its own RNG stream so results do not depend on processing order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                          std::uint64_t b = 0);

/// 64-bit FNV-1a of a string; stable across platforms and runs.
std::uint64_t stable_hash(std::string_view text);

/// Points in meters plus optional unit normals (same length when present).
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty(); }

  // Throws ContractError on non-finite coordinates, a normals/points length
  // mismatch, or a normal whose length differs from 1 by more than 1e-9.
  void validate() const;
};

/// Pinhole camera. Camera frame: x right, y down, z forward.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// (fx x/z + cx, fy y/z + cy) when z > 0 and the result lies inside the
/// image, nullopt otherwise.
std::optional<Pixel> project(const Vec3& point, const CameraIntrinsics& intr);

/// Point at depth z (camera frame) whose projection is `px`.
Vec3 unproject(const Pixel& px, double depth, const CameraIntrinsics& intr);

/// Row-major index of the pixel containing `px`.
std::size_t pixel_index(const Pixel& px, const CameraIntrinsics& intr);

/// Flips `normal` if needed so that it points toward `sensor` as seen from
/// `point` (dot(normal, sensor - point) >= 0).
Vec3 orient_toward(const Vec3& normal, const Vec3& point, const Vec3& sensor);

}  // namespace hgt
