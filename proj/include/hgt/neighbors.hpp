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
#include <unordered_map>
#include <vector>

#include "hgt/geometry.hpp"

namespace hgt {

struct Neighborhood {
  std::size_t center = 0;
  // Exactly the configured count. Every entry lies within the query radius
  // of the center or is the center itself (padding).
  std::vector<std::size_t> indices;
};

/// Uniform hash grid over a fixed point set.
class GridIndex {
 public:
  GridIndex(std::span<const Vec3> points, double cell_size);

  /// Indices of all points within `radius` (inclusive) of `query`, ascending.
  std::vector<std::size_t> within(const Vec3& query, double radius) const;

  double cell_size() const { return cell_size_; }

 private:
  using Key = std::uint64_t;
  Key key_of(long ix, long iy, long iz) const;
  long cell_coord(double v) const;

  std::span<const Vec3> points_;
  double cell_size_;
  std::unordered_map<Key, std::vector<std::uint32_t>> cells_;
};

/// Spherical neighbourhood queries with a fixed radius. The grid cell size
/// equals the radius.
class NeighborSearch {
 public:
  NeighborSearch(std::span<const Vec3> points, double radius);

  /// `count` in-radius indices for point `center`: a uniform sample without
  /// replacement when more qualify, otherwise all of them padded with
  /// `center`.
  Neighborhood radius_knn(std::size_t center, std::size_t count, Rng& rng) const;

  std::vector<std::size_t> in_radius(std::size_t center) const;

  double radius() const { return radius_; }
  std::size_t size() const { return points_.size(); }

 private:
  std::span<const Vec3> points_;
  double radius_;
  GridIndex grid_;
};

/// Neighbourhood of every point, each drawn from its own RNG stream
/// derive_seed(seed, point index), so the result is independent of the
/// order (and thread) in which points are processed.
std::vector<Neighborhood> all_neighborhoods(std::span<const Vec3> points,
                                            double radius, std::size_t count,
                                            std::uint64_t seed);

}  // namespace hgt
