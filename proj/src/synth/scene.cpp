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

#include "hgt/scene.hpp"

#include <cmath>
#include <limits>

#include "hgt/error.hpp"

namespace hgt {

namespace {

constexpr double kMinT = 1e-9;

std::optional<Hit> hit_plane(const Plane& pl, const Ray& ray) {
  const double denom = pl.normal.dot(ray.direction);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = pl.normal.dot(pl.point - ray.origin) / denom;
  if (t <= kMinT) return std::nullopt;
  return Hit{t, ray.origin + t * ray.direction, pl.normal, 0};
}

std::optional<Hit> hit_box(const Box& box, const Ray& ray) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_axis = -1, far_axis = -1;
  for (int k = 0; k < 3; ++k) {
    const double o = ray.origin[k], d = ray.direction[k];
    if (std::abs(d) < 1e-15) {
      if (o < box.min[k] || o > box.max[k]) return std::nullopt;
      continue;
    }
    double t0 = (box.min[k] - o) / d;
    double t1 = (box.max[k] - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      near_axis = k;
    }
    if (t1 < t_far) {
      t_far = t1;
      far_axis = k;
    }
    if (t_near > t_far) return std::nullopt;
  }
  double t;
  int axis;
  if (t_near > kMinT) {
    t = t_near;
    axis = near_axis;
  } else if (t_far > kMinT) {
    t = t_far;  // origin inside the box
    axis = far_axis;
  } else {
    return std::nullopt;
  }
  if (axis < 0) return std::nullopt;
  Vec3 n = Vec3::Zero();
  n[axis] = 1.0;
  return Hit{t, ray.origin + t * ray.direction, n, 0};
}

std::optional<Hit> hit_sphere(const Sphere& s, const Ray& ray) {
  const Vec3 oc = ray.origin - s.center;
  const double b = oc.dot(ray.direction);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  double t = -b - root;
  if (t <= kMinT) t = -b + root;
  if (t <= kMinT) return std::nullopt;
  const Vec3 p = ray.origin + t * ray.direction;
  return Hit{t, p, (p - s.center).normalized(), 0};
}

std::optional<Hit> hit_cylinder(const Cylinder& cyl, const Ray& ray) {
  std::optional<Hit> best;
  auto consider = [&](double t, const Vec3& n) {
    if (t > kMinT && (!best || t < best->t)) {
      best = Hit{t, ray.origin + t * ray.direction, n, 0};
    }
  };
  const double z0 = cyl.base.z(), z1 = cyl.base.z() + cyl.height;
  // Side: (x - cx)^2 + (y - cy)^2 = r^2.
  const double ox = ray.origin.x() - cyl.base.x();
  const double oy = ray.origin.y() - cyl.base.y();
  const double dx = ray.direction.x(), dy = ray.direction.y();
  const double a = dx * dx + dy * dy;
  if (a > 1e-15) {
    const double b = ox * dx + oy * dy;
    const double c = ox * ox + oy * oy - cyl.radius * cyl.radius;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      for (double t : {(-b - root) / a, (-b + root) / a}) {
        const double z = ray.origin.z() + t * ray.direction.z();
        if (z >= z0 && z <= z1) {
          const Vec3 p = ray.origin + t * ray.direction;
          Vec3 n(p.x() - cyl.base.x(), p.y() - cyl.base.y(), 0.0);
          consider(t, n.normalized());
        }
      }
    }
  }
  // Caps.
  if (std::abs(ray.direction.z()) > 1e-15) {
    for (double zc : {z0, z1}) {
      const double t = (zc - ray.origin.z()) / ray.direction.z();
      const Vec3 p = ray.origin + t * ray.direction;
      const double rx = p.x() - cyl.base.x(), ry = p.y() - cyl.base.y();
      if (rx * rx + ry * ry <= cyl.radius * cyl.radius) {
        consider(t, Vec3::UnitZ());
      }
    }
  }
  return best;
}

}  // namespace

RigidTransform RigidTransform::looking(const Vec3& position, double yaw,
                                       double pitch) {
  const Vec3 heading(std::sin(yaw), std::cos(yaw), 0.0);
  const Vec3 right(std::cos(yaw), -std::sin(yaw), 0.0);
  const Vec3 forward = std::cos(pitch) * heading - std::sin(pitch) * Vec3::UnitZ();
  const Vec3 down = forward.cross(right);
  RigidTransform pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  pose.translation = position;
  return pose;
}

void Scene::validate() const {
  if (primitives.empty()) throw ConfigError("scene has no primitives");
  if (std::abs(light.direction.norm() - 1.0) > 1e-9) {
    throw ConfigError("light direction is not unit length");
  }
}

std::optional<Hit> intersect(const Surface& surface, const Ray& ray) {
  return std::visit(
      [&](const auto& s) -> std::optional<Hit> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Plane>) return hit_plane(s, ray);
        if constexpr (std::is_same_v<T, Box>) return hit_box(s, ray);
        if constexpr (std::is_same_v<T, Sphere>) return hit_sphere(s, ray);
        if constexpr (std::is_same_v<T, Cylinder>) return hit_cylinder(s, ray);
      },
      surface);
}

std::optional<Hit> raycast(const Scene& scene, const Ray& ray) {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    auto h = intersect(scene.primitives[i].surface, ray);
    if (h && (!best || h->t < best->t)) {
      best = *h;
      best->primitive = i;
    }
  }
  if (best && best->normal.dot(ray.direction) > 0.0) best->normal = -best->normal;
  return best;
}

Ray camera_ray(const Scene& scene, const CameraIntrinsics& intr, const Pixel& px) {
  const Vec3 d_cam((px.u - intr.cx) / intr.fx, (px.v - intr.cy) / intr.fy, 1.0);
  return Ray{scene.camera.translation,
             scene.camera.direction_to_world(d_cam.normalized())};
}

}  // namespace hgt
