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

#include "hgt/geometry.hpp"

#include <cmath>
#include <string>

#include "hgt/error.hpp"

namespace hgt {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0xD6E8FEB86659FD93ull));
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw ContractError("point " + std::to_string(i) + " is not finite");
    }
  }
  if (normals.empty()) return;
  if (normals.size() != points.size()) {
    throw ContractError("point cloud has " + std::to_string(points.size()) +
                        " points but " + std::to_string(normals.size()) +
                        " normals");
  }
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (std::abs(normals[i].norm() - 1.0) > 1e-9) {
      throw ContractError("normal " + std::to_string(i) + " is not unit length");
    }
  }
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw ConfigError("camera focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw ConfigError("camera image size must be positive");
  }
}

std::optional<Pixel> project(const Vec3& point, const CameraIntrinsics& intr) {
  if (!(point.z() > 0.0)) return std::nullopt;
  const Pixel px{intr.fx * point.x() / point.z() + intr.cx,
                 intr.fy * point.y() / point.z() + intr.cy};
  if (px.u < 0.0 || px.v < 0.0 || px.u >= intr.width || px.v >= intr.height) {
    return std::nullopt;
  }
  return px;
}

Vec3 unproject(const Pixel& px, double depth, const CameraIntrinsics& intr) {
  return {(px.u - intr.cx) / intr.fx * depth, (px.v - intr.cy) / intr.fy * depth,
          depth};
}

std::size_t pixel_index(const Pixel& px, const CameraIntrinsics& intr) {
  const auto col = static_cast<std::size_t>(std::floor(px.u));
  const auto row = static_cast<std::size_t>(std::floor(px.v));
  if (px.u < 0.0 || px.v < 0.0 || col >= static_cast<std::size_t>(intr.width) ||
      row >= static_cast<std::size_t>(intr.height)) {
    throw ContractError("pixel (" + std::to_string(px.u) + ", " +
                        std::to_string(px.v) + ") lies outside the image");
  }
  return row * static_cast<std::size_t>(intr.width) + col;
}

Vec3 orient_toward(const Vec3& normal, const Vec3& point, const Vec3& sensor) {
  return normal.dot(sensor - point) < 0.0 ? Vec3(-normal) : normal;
}

}  // namespace hgt
