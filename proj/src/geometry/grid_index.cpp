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

#include "hgt/error.hpp"
#include "hgt/neighbors.hpp"

namespace hgt {

GridIndex::GridIndex(std::span<const Vec3> points, double cell_size)
    : points_(points), cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw InvalidArgumentError("grid cell size must be > 0");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    cells_[key_of(cell_coord(p.x()), cell_coord(p.y()), cell_coord(p.z()))]
        .push_back(static_cast<std::uint32_t>(i));
  }
}

long GridIndex::cell_coord(double v) const {
  return static_cast<long>(std::floor(v / cell_size_));
}

GridIndex::Key GridIndex::key_of(long ix, long iy, long iz) const {
  // 21 bits per axis, two's complement wrapped. Collisions only merge
  // buckets; the distance test below keeps results exact.
  constexpr Key kMask = (Key{1} << 21) - 1;
  return (static_cast<Key>(ix) & kMask) | ((static_cast<Key>(iy) & kMask) << 21) |
         ((static_cast<Key>(iz) & kMask) << 42);
}

std::vector<std::size_t> GridIndex::within(const Vec3& query, double radius) const {
  std::vector<std::size_t> out;
  const long reach = static_cast<long>(std::ceil(radius / cell_size_));
  const long cx = cell_coord(query.x()), cy = cell_coord(query.y()),
             cz = cell_coord(query.z());
  const double r2 = radius * radius;
  std::vector<Key> seen;
  for (long dx = -reach; dx <= reach; ++dx) {
    for (long dy = -reach; dy <= reach; ++dy) {
      for (long dz = -reach; dz <= reach; ++dz) {
        const Key key = key_of(cx + dx, cy + dy, cz + dz);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        auto it = cells_.find(key);
        if (it == cells_.end()) continue;
        for (std::uint32_t idx : it->second) {
          if ((points_[idx] - query).squaredNorm() <= r2) out.push_back(idx);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

NeighborSearch::NeighborSearch(std::span<const Vec3> points, double radius)
    : points_(points), radius_(radius), grid_(points, radius) {}

std::vector<std::size_t> NeighborSearch::in_radius(std::size_t center) const {
  return grid_.within(points_[center], radius_);
}

Neighborhood NeighborSearch::radius_knn(std::size_t center, std::size_t count,
                                        Rng& rng) const {
  if (count == 0) throw InvalidArgumentError("neighbor count must be >= 1");
  if (center >= points_.size()) {
    throw InvalidArgumentError("center index " + std::to_string(center) +
                               " out of range");
  }
  std::vector<std::size_t> candidates = in_radius(center);
  Neighborhood nbr;
  nbr.center = center;
  if (candidates.size() > count) {
    // Partial Fisher-Yates: the first `count` slots become a uniform sample.
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
      std::swap(candidates[i], candidates[pick(rng)]);
    }
    candidates.resize(count);
  } else {
    candidates.resize(count, center);
  }
  nbr.indices = std::move(candidates);
  return nbr;
}

std::vector<Neighborhood> all_neighborhoods(std::span<const Vec3> points,
                                            double radius, std::size_t count,
                                            std::uint64_t seed) {
  NeighborSearch search(points, radius);
  std::vector<Neighborhood> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    out.push_back(search.radius_knn(i, count, rng));
  }
  return out;
}

}  // namespace hgt
