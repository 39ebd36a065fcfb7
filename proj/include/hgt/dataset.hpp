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

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgt/synth.hpp"

namespace hgt {

inline constexpr int kDatasetFormatVersion = 1;

struct FrameEntry {
  std::string id;
  std::size_t points = 0;
  std::string path;  // relative to the dataset root
};

struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  int width = 0;
  int height = 0;
  double noise_level = 0.0;
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::vector<FrameEntry> frames;
  nlohmann::json generator = nlohmann::json::object();

  const FrameEntry& entry(const std::string& id) const;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<Frame> frames;  // manifest order

  const Frame& frame(const std::string& id) const;
  std::vector<const Frame*> split(const std::string& name) const;
};

// Layout under `root`:
//   manifest.json
//   frames/<id>/{image.ppm, points.f64, normals.f64, projmap.f64, intrinsics.json}
void write_dataset(const std::filesystem::path& root, const std::vector<Frame>& frames,
                   const std::vector<std::string>& train, const std::vector<std::string>& test,
                   const nlohmann::json& generator = nlohmann::json::object());

DatasetManifest read_manifest(const std::filesystem::path& root);
Frame read_frame(const std::filesystem::path& root, const FrameEntry& entry);
Dataset read_dataset(const std::filesystem::path& root);

/// 30 of every 151 frames, rounded; at least one when frames > 1.
std::size_t default_test_count(std::size_t frames);

/// Generates frames 0..count-1; the last `test_count` form the test split.
void generate_dataset(const SynthConfig& config, std::size_t count, std::size_t test_count,
                      const std::filesystem::path& root);

// Binary 8-bit RGB pixmap (P6).
std::string encode_ppm(const Image& image);
Image decode_ppm(std::string_view bytes, std::string_view what);

}  // namespace hgt
