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
#include <filesystem>
#include <string>

#include "hgt/dataset.hpp"
#include "hgt/model.hpp"
#include "hgt/synth.hpp"

namespace hgt::test {

// Fresh, empty directory under $HGT_TEST_TMP (or the system temp dir).
std::filesystem::path temp_dir(const std::string& name);

// Small synthetic settings: 32x32 images, stride 2, fixed seed.
SynthConfig small_synth(std::uint64_t seed = 11, double noise = 0.0);

// 16x16 frame; only used for gradient checks.
Frame tiny_frame(std::uint64_t seed = 3);

// Very small widths, two attention blocks, 4 neighbours.
ModelConfig tiny_model(Variant variant = Variant::kHgt);

// Dataset written to `root` and read back.
Dataset small_dataset(const std::filesystem::path& root, std::size_t frames, std::size_t test,
                      std::uint64_t seed = 11, double noise = 0.0);

std::string read_text(const std::filesystem::path& path);

}  // namespace hgt::test
