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

#include "hgt/synth.hpp"

namespace hgt {

Vec3 lambert(const Vec3& albedo, const Vec3& normal, const DirectionalLight& light) {
  const double diffuse = std::max(0.0, normal.dot(light.direction)) * light.intensity;
  Vec3 c = albedo * (diffuse + kAmbient);
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

Vec3 sky_color(double elevation) {
  const double t = std::clamp(elevation, 0.0, 1.0);
  const Vec3 horizon(0.86, 0.90, 0.97);
  const Vec3 zenith(0.38, 0.56, 0.90);
  return (1.0 - t) * horizon + t * zenith;
}

Image render_image(const Scene& scene, const CameraIntrinsics& intr) {
  intr.validate();
  Image img;
  img.width = intr.width;
  img.height = intr.height;
  img.rgb.resize(static_cast<std::size_t>(intr.width) * intr.height * 3);
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      const Ray ray = camera_ray(scene, intr, Pixel{x + 0.5, y + 0.5});
      Vec3 c;
      if (auto hit = raycast(scene, ray)) {
        c = lambert(scene.primitives[hit->primitive].albedo, hit->normal, scene.light);
      } else {
        c = sky_color(ray.direction.z());
      }
      double* dst = img.rgb.data() + (static_cast<std::size_t>(y) * intr.width + x) * 3;
      for (int k = 0; k < 3; ++k) {
        dst[k] = std::round(std::clamp(c[k], 0.0, 1.0) * 255.0) / 255.0;
      }
    }
  }
  return img;
}

}  // namespace hgt
