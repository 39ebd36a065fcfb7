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

#include <numbers>
#include <span>

#include "hgt/geometry.hpp"

namespace hgt {

/// arccos(|a.b| / (|a||b|)) in radians, in [0, pi/2]. Sign-blind.
double angle_error(const Vec3& pred, const Vec3& gt);

/// Arithmetic mean of angle_error over matching entries.
double mean_angle_error(std::span<const Vec3> preds, std::span<const Vec3> gts);

inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace hgt
