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

#include "hgt/metrics.hpp"

#include <cmath>
#include <string>

#include "hgt/error.hpp"

namespace hgt {

double angle_error(const Vec3& pred, const Vec3& gt) {
  const double np = pred.norm();
  const double ng = gt.norm();
  if (np == 0.0 || ng == 0.0) {
    throw ContractError("angle_error of a zero vector");
  }
  // Same value as arccos(|p.g| / (|p||g|)), without its loss of precision
  // near zero.
  return std::atan2(pred.cross(gt).norm(), std::abs(pred.dot(gt)));
}

double mean_angle_error(std::span<const Vec3> preds, std::span<const Vec3> gts) {
  if (preds.size() != gts.size()) {
    throw ContractError("mean_angle_error: " + std::to_string(preds.size()) +
                        " predictions vs " + std::to_string(gts.size()) +
                        " ground-truth normals");
  }
  if (preds.empty()) throw ContractError("mean_angle_error of an empty set");
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) acc += angle_error(preds[i], gts[i]);
  return acc / static_cast<double>(preds.size());
}

}  // namespace hgt
