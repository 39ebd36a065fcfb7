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
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "hgt/geometry.hpp"

// Analytic scenes. World frame: X east, Y north, Z up; the ground is z = 0.
namespace hgt {

struct Plane {
  Vec3 point;
  Vec3 normal;  // unit
};

struct Box {  // axis-aligned
  Vec3 min;
  Vec3 max;
};

struct Sphere {
  Vec3 center;
  double radius = 1.0;
};

struct Cylinder {  // axis along +Z, capped at both ends
  Vec3 base;
  double radius = 1.0;
  double height = 1.0;
};

using Surface = std::variant<Plane, Box, Sphere, Cylinder>;

struct Primitive {
  Surface surface;
  Vec3 albedo{0.5, 0.5, 0.5};
};

struct DirectionalLight {
  Vec3 direction{0.0, 0.0, 1.0};  // unit, pointing toward the light
  double intensity = 1.0;
};

/// Camera pose as world_from_camera. Camera frame: x right, y down,
/// z forward.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 to_world(const Vec3& p_cam) const { return rotation * p_cam + translation; }
  Vec3 to_camera(const Vec3& p_world) const {
    return rotation.transpose() * (p_world - translation);
  }
  Vec3 direction_to_world(const Vec3& d) const { return rotation * d; }
  Vec3 direction_to_camera(const Vec3& d) const { return rotation.transpose() * d; }

  /// Camera at `position` heading `yaw` radians east of north, tilted down
  /// by `pitch` radians.
  static RigidTransform looking(const Vec3& position, double yaw, double pitch);
};

struct Scene {
  std::vector<Primitive> primitives;
  DirectionalLight light;
  RigidTransform camera;

  // At least one primitive, unit light direction.
  void validate() const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit
};

struct Hit {
  double t = 0.0;
  Vec3 position;
  Vec3 normal;  // unit, facing the ray origin
  std::size_t primitive = 0;
};

/// Nearest intersection along the ray (t > 1e-9), or nullopt on a miss.
std::optional<Hit> raycast(const Scene& scene, const Ray& ray);
std::optional<Hit> intersect(const Surface& surface, const Ray& ray);

/// Ray from the camera center through pixel coordinate `px`, in world frame.
Ray camera_ray(const Scene& scene, const CameraIntrinsics& intr, const Pixel& px);

}  // namespace hgt
