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

// Independent reference implementations used to check the library. None of
// these call into the code they check.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hgt/geometry.hpp"
#include "hgt/model.hpp"
#include "hgt/scene.hpp"
#include "hgt/tensor.hpp"

namespace hgt::test {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                     bool requires_grad = true);

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;  // "<leaf>[<index>] analytic a numeric n"
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, floor): entries whose gradients are both tiny are
// compared in absolute terms.
inline constexpr double kGradRelFloor = 1e-3;

// Central differences of the scalar `f` with respect to every entry of every
// leaf (at most `max_entries` per leaf, spread evenly), against the tape's
// gradients.
GradCheck check_gradients(const std::function<Tensor()>& f, const std::vector<Tensor>& leaves,
                          double step = 1e-6, std::size_t max_entries = 0);

// Every index within `radius` of `query` by exhaustive scan.
std::vector<std::size_t> brute_force_within(std::span<const Vec3> points, const Vec3& query,
                                            double radius);

// Least-squares plane normal: right singular vector of the centred points
// with the smallest singular value (Eigen::JacobiSVD).
Vec3 svd_plane_normal(std::span<const Vec3> points);

// Angle in radians between two lines (sign-blind), from atan2 of the cross
// and dot products so that it stays accurate near zero.
double line_angle(const Vec3& a, const Vec3& b);

// Outward unit normal of `surface` at a point on it, from the primitive's
// implicit surface (nearest face for boxes and cylinder caps).
Vec3 analytic_normal(const Surface& surface, const Vec3& p);

// Row-major dense helpers on plain vectors.
using Mat = std::vector<std::vector<double>>;
Mat to_mat(const Tensor& t);
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);

// One attention block in eval mode, written as plain loops over the named
// parameters of `params`.
Mat reference_attention_block(const Mat& tokens, const ModelParams& params, std::size_t block,
                              Mat* attention = nullptr);

// Fusion MLP followed by the configured reduction over groups of `count`
// consecutive rows.
Mat reference_fuse(const Mat& f_img, const Mat& f_geo, const Mat& f_pos, std::size_t count,
                   const ModelParams& params);

double max_abs_diff(const Mat& a, const Mat& b);

}  // namespace hgt::test
