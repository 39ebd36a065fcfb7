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
#include <cstdio>
#include <numbers>

#include "hgt/error.hpp"
#include "hgt/synth.hpp"

namespace hgt {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kSceneStream = 0x5CE7E;
constexpr std::uint64_t kNoiseStream = 0x7015E;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Vec3 jitter_color(Rng& rng, const Vec3& base, double amount) {
  Vec3 c = base;
  for (int k = 0; k < 3; ++k) c[k] = std::clamp(c[k] + uniform(rng, -amount, amount), 0.05, 0.95);
  return c;
}

Box box_at(double cx, double cy, double sx, double sy, double height) {
  return Box{Vec3(cx - sx / 2, cy - sy / 2, 0.0), Vec3(cx + sx / 2, cy + sy / 2, height)};
}

}  // namespace

CameraIntrinsics SynthConfig::intrinsics() const {
  CameraIntrinsics intr;
  intr.width = width;
  intr.height = height;
  intr.fx = 0.5 * width / std::tan(0.5 * hfov_deg * std::numbers::pi / 180.0);
  intr.fy = intr.fx;
  intr.cx = 0.5 * width;
  intr.cy = 0.5 * height;
  return intr;
}

std::string frame_id(std::size_t frame_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", frame_index);
  return buf;
}

Scene make_scene(const SynthConfig& config, std::size_t frame_index) {
  if (config.min_objects < 1 || config.max_objects < config.min_objects) {
    throw ConfigError("object count range must satisfy 1 <= min <= max");
  }
  Rng rng(derive_seed(config.seed, frame_index, kSceneStream));
  Scene scene;
  scene.light.direction = Vec3(0.45, -0.35, 0.82).normalized();
  scene.light.intensity = 0.9;

  const double cam_x = uniform(rng, -1.0, 1.0);
  const double cam_y = 3.0 * static_cast<double>(frame_index);
  scene.camera = RigidTransform::looking(Vec3(cam_x, cam_y, 1.6),
                                         uniform(rng, -0.1, 0.1),
                                         uniform(rng, 0.17, 0.23));

  scene.primitives.push_back(
      {Plane{Vec3::Zero(), Vec3::UnitZ()}, jitter_color(rng, Vec3(0.42, 0.42, 0.45), 0.05)});

  const int objects = uniform_int(rng, config.min_objects, config.max_objects);
  // Far buildings close off the horizon.
  const int back = std::min(objects, 2);
  for (int i = 0; i < back; ++i) {
    const double cx = cam_x + (i == 0 ? uniform(rng, -22.0, -4.0) : uniform(rng, 4.0, 22.0));
    scene.primitives.push_back(
        {box_at(cx, cam_y + uniform(rng, 38.0, 50.0), uniform(rng, 24.0, 36.0),
                uniform(rng, 6.0, 10.0), uniform(rng, 8.0, 18.0)),
         jitter_color(rng, Vec3(0.6, 0.55, 0.5), 0.2)});
  }
  for (int i = back; i < objects; ++i) {
    const double kind = uniform(rng, 0.0, 1.0);
    const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    if (kind < 0.35) {  // building
      scene.primitives.push_back(
          {box_at(cam_x + side * uniform(rng, 8.0, 12.0), cam_y + uniform(rng, 3.0, 40.0),
                  uniform(rng, 4.0, 8.0), uniform(rng, 5.0, 15.0), uniform(rng, 4.0, 14.0)),
           jitter_color(rng, Vec3(0.65, 0.5, 0.4), 0.25)});
    } else if (kind < 0.6) {  // vehicle
      scene.primitives.push_back(
          {box_at(cam_x + uniform(rng, -4.0, 4.0), cam_y + uniform(rng, 7.0, 25.0), 1.8,
                  4.2, 1.5),
           jitter_color(rng, Vec3(0.5, 0.3, 0.3), 0.3)});
    } else if (kind < 0.8) {  // pole
      scene.primitives.push_back(
          {Cylinder{Vec3(cam_x + side * uniform(rng, 4.5, 6.0), cam_y + uniform(rng, 4.0, 30.0), 0.0),
                    uniform(rng, 0.12, 0.3), uniform(rng, 3.0, 7.0)},
           jitter_color(rng, Vec3(0.55, 0.55, 0.55), 0.1)});
    } else {  // shrub
      const double r = uniform(rng, 0.6, 1.5);
      scene.primitives.push_back(
          {Sphere{Vec3(cam_x + side * uniform(rng, 5.0, 9.0), cam_y + uniform(rng, 5.0, 30.0),
                       0.7 * r),
                  r},
           jitter_color(rng, Vec3(0.25, 0.55, 0.25), 0.1)});
    }
  }
  scene.validate();
  return scene;
}

PixelRect lower_region(const CameraIntrinsics& intr, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw ConfigError("lower region fraction must be in (0, 1]");
  }
  const int top = static_cast<int>(std::lround((1.0 - fraction) * intr.height));
  return PixelRect{0, top, intr.width, intr.height};
}

LidarScan sample_lidar(const Scene& scene, const CameraIntrinsics& intr,
                       const PixelRect& mask, int stride_u, int stride_v) {
  intr.validate();
  if (stride_u < 1 || stride_v < 1) throw ConfigError("lidar strides must be >= 1");
  if (mask.u0 < 0 || mask.v0 < 0 || mask.u1 > intr.width || mask.v1 > intr.height ||
      mask.u0 >= mask.u1 || mask.v0 >= mask.v1) {
    throw ConfigError("lidar mask region is empty or outside the image");
  }
  LidarScan scan;
  for (int v = mask.v0; v < mask.v1; v += stride_v) {
    for (int u = mask.u0; u < mask.u1; u += stride_u) {
      const Pixel px{u + 0.5, v + 0.5};
      const Ray ray = camera_ray(scene, intr, px);
      auto hit = raycast(scene, ray);
      if (!hit || std::abs(hit->normal.dot(ray.direction)) < 1e-9) continue;
      scan.cloud.points.push_back(scene.camera.to_camera(hit->position));
      scan.cloud.normals.push_back(scene.camera.direction_to_camera(hit->normal).normalized());
      scan.proj.push_back(px);
    }
  }
  if (scan.cloud.points.empty()) {
    throw DegenerateError("lidar sampling produced no points; check the scene and mask");
  }
  return scan;
}

double depth_scale(const PointCloud& cloud) {
  if (cloud.points.empty()) throw ContractError("depth_scale of an empty cloud");
  std::vector<double> z;
  z.reserve(cloud.size());
  for (const Vec3& p : cloud.points) z.push_back(p.z());
  const std::size_t mid = z.size() / 2;
  std::nth_element(z.begin(), z.begin() + mid, z.end());
  if (z.size() % 2 == 1) return z[mid];
  const double upper = z[mid];
  const double lower = *std::max_element(z.begin(), z.begin() + mid);
  return 0.5 * (lower + upper);
}

PointCloud add_noise(const PointCloud& cloud, double level, Rng& rng) {
  if (level < 0.0) throw ContractError("noise level must be >= 0");
  PointCloud out = cloud;
  if (level == 0.0) return out;
  const double sigma = level * depth_scale(cloud);
  std::normal_distribution<double> drift(0.0, sigma);
  for (Vec3& p : out.points) p.z() += drift(rng);
  return out;
}

void Frame::validate() const {
  cloud.validate();
  if (proj.size() != cloud.size() || cloud.normals.size() != cloud.size()) {
    throw ContractError("frame " + id + ": " + std::to_string(cloud.size()) + " points, " +
                        std::to_string(cloud.normals.size()) + " normals, " +
                        std::to_string(proj.size()) + " projections");
  }
  const std::size_t pixels =
      static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height);
  if (image.width != intrinsics.width || image.height != intrinsics.height ||
      image.rgb.size() != pixels * 3) {
    throw ContractError("frame " + id + ": image size disagrees with intrinsics");
  }
  for (std::size_t i = 0; i < proj.size(); ++i) {
    pixel_index(proj[i], intrinsics);  // throws when outside
    if (noise_level == 0.0) {
      auto px = project(cloud.points[i], intrinsics);
      if (!px || std::abs(px->u - proj[i].u) > 0.5 || std::abs(px->v - proj[i].v) > 0.5) {
        throw ContractError("frame " + id + ": point " + std::to_string(i) +
                            " does not project onto its recorded pixel");
      }
    }
  }
}

Frame generate_frame(const SynthConfig& config, std::size_t frame_index) {
  const CameraIntrinsics intr = config.intrinsics();
  const Scene scene = make_scene(config, frame_index);
  Frame frame;
  frame.id = frame_id(frame_index);
  frame.intrinsics = intr;
  frame.noise_level = config.noise_level;
  frame.image = render_image(scene, intr);
  LidarScan scan = sample_lidar(scene, intr, lower_region(intr, config.lower_fraction),
                                config.stride_u, config.stride_v);
  Rng noise_rng(derive_seed(config.seed, frame_index, kNoiseStream));
  frame.cloud = add_noise(scan.cloud, config.noise_level, noise_rng);
  frame.proj = std::move(scan.proj);
  return frame;
}

}  // namespace hgt
