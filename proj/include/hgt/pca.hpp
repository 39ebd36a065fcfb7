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

#include <span>

#include <Eigen/Core>

#include "hgt/geometry.hpp"
#include "hgt/neighbors.hpp"

namespace hgt {

/// Eigen-decomposition of a symmetric 3x3 matrix by the closed-form
/// trigonometric method. Eigenvalues ascend; columns of `vectors` are the
/// matching unit eigenvectors.
struct SymmetricEigen3 {
  Eigen::Vector3d values;
  Eigen::Matrix3d vectors;
  // Two smallest eigenvalues coincide (relative gap below 1e-10). The
  // smallest eigenvector is then the lowest-index axis projected into the
  // degenerate eigenspace.
  bool low_tie = false;
};

SymmetricEigen3 eigen_symmetric3(const Eigen::Matrix3d& m);

struct PcaNormal {
  Vec3 normal;
  bool tie = false;
};

/// Least-squares plane normal of the neighbourhood: the smallest-eigenvalue
/// eigenvector of the covariance, oriented toward `sensor`. Repeated indices
/// and repeated coordinates count once. Throws DegenerateError with fewer
/// than three distinct points.
PcaNormal pca_normal(std::span<const Vec3> points, const Neighborhood& nbr,
                     const Vec3& sensor = Vec3::Zero());

}  // namespace hgt
