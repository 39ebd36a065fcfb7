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
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgt/tensor.hpp"

namespace hgt {

inline constexpr int kCheckpointFormatVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct Checkpoint {
  nlohmann::json meta;
  std::vector<NamedTensor> tensors;

  const Tensor& get(const std::string& name) const;
};

// File layout:
//   8 bytes   magic "HGTCKPT\0"
//   u64       header length in bytes
//   header    JSON {format_version, tensors: [{name, shape}], meta}
//   payload   little-endian doubles of every tensor, in header order
void save_checkpoint(const std::filesystem::path& path,
                     std::span<const NamedTensor> tensors,
                     const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hgt
