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

#include "hgt/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hgt/error.hpp"

namespace hgt {

namespace {

constexpr double kTieGap = 1e-10;

// Null vector of the rank-2 matrix m via the best-conditioned row cross
// product. Returns a zero vector when m has rank < 2.
Vec3 null_vector(const Eigen::Matrix3d& m, double scale) {
  const Vec3 r0 = m.row(0), r1 = m.row(1), r2 = m.row(2);
  const Vec3 c[3] = {r0.cross(r1), r0.cross(r2), r1.cross(r2)};
  int best = 0;
  double best_norm = c[0].squaredNorm();
  for (int i = 1; i < 3; ++i) {
    if (c[i].squaredNorm() > best_norm) {
      best = i;
      best_norm = c[i].squaredNorm();
    }
  }
  if (best_norm <= (1e-24 * scale * scale) * (scale * scale)) return Vec3::Zero();
  return c[best] / std::sqrt(best_norm);
}

// Lowest-index axis projected onto the plane orthogonal to `axis`.
Vec3 first_axis_orthogonal_to(const Vec3& axis) {
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Unit(k);
    Vec3 v = e - axis * axis.dot(e);
    if (v.norm() > 1e-6) return v.normalized();
  }
  return Vec3::UnitX();
}

}  // namespace

SymmetricEigen3 eigen_symmetric3(const Eigen::Matrix3d& input) {
  SymmetricEigen3 out;
  const double scale = input.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    out.values.setZero();
    out.vectors.setIdentity();
    out.low_tie = true;
    return out;
  }
  const Eigen::Matrix3d a = input / scale;

  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  Eigen::Vector3d lambda;
  if (p1 == 0.0) {
    lambda = a.diagonal();
    std::sort(lambda.data(), lambda.data() + 3);
  } else {
    const double q = a.trace() / 3.0;
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                      (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const Eigen::Matrix3d b = (a - q * Eigen::Matrix3d::Identity()) / p;
    const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double hi = q + 2.0 * p * std::cos(phi);
    const double lo = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    lambda << lo, 3.0 * q - hi - lo, hi;
  }

  const double spread = std::max(std::abs(lambda(2)), std::abs(lambda(0)));
  out.low_tie = (lambda(1) - lambda(0)) <= kTieGap * std::max(spread, 1e-300);
  const bool high_tie = (lambda(2) - lambda(1)) <= kTieGap * std::max(spread, 1e-300);

  const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
  Vec3 v_hi = null_vector(a - lambda(2) * id, 1.0);
  Vec3 v_lo = null_vector(a - lambda(0) * id, 1.0);
  if (high_tie && out.low_tie) {
    out.vectors.setIdentity();
  } else if (out.low_tie || v_lo.isZero()) {
    out.low_tie = true;
    if (v_hi.isZero()) v_hi = Vec3::UnitZ();
    v_lo = first_axis_orthogonal_to(v_hi);
    out.vectors.col(0) = v_lo;
    out.vectors.col(1) = v_hi.cross(v_lo).normalized();
    out.vectors.col(2) = v_hi;
  } else {
    if (high_tie || v_hi.isZero()) {
      v_hi = first_axis_orthogonal_to(v_lo);
    }
    // Re-orthogonalize against the better determined smallest vector.
    v_hi = (v_hi - v_lo * v_lo.dot(v_hi)).normalized();
    out.vectors.col(0) = v_lo;
    out.vectors.col(1) = v_hi.cross(v_lo).normalized();
    out.vectors.col(2) = v_hi;
  }
  out.values = lambda * scale;
  return out;
}

PcaNormal pca_normal(std::span<const Vec3> points, const Neighborhood& nbr,
                     const Vec3& sensor) {
  std::vector<std::size_t> idx = nbr.indices;
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());

  std::vector<Vec3> distinct;
  distinct.reserve(idx.size());
  for (std::size_t i : idx) {
    if (i >= points.size()) {
      throw InvalidArgumentError("neighbor index " + std::to_string(i) +
                                 " out of range");
    }
    const Vec3& p = points[i];
    const bool dup = std::any_of(distinct.begin(), distinct.end(),
                                 [&](const Vec3& q) { return q == p; });
    if (!dup) distinct.push_back(p);
  }
  if (distinct.size() < 3) {
    throw DegenerateError("neighborhood of point " + std::to_string(nbr.center) +
                          " has " + std::to_string(distinct.size()) +
                          " distinct points, need 3");
  }

  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : distinct) centroid += p;
  centroid /= static_cast<double>(distinct.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const Vec3& p : distinct) {
    const Vec3 d = p - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(distinct.size());

  const SymmetricEigen3 eig = eigen_symmetric3(cov);
  PcaNormal result;
  result.tie = eig.low_tie;
  result.normal = orient_toward(eig.vectors.col(0), points[nbr.center], sensor);
  return result;
}

}  // namespace hgt
