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

#include "hgt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "hgt/binary_io.hpp"
#include "hgt/error.hpp"

namespace hgt {

namespace {
constexpr char kMagic[8] = {'H', 'G', 'T', 'C', 'K', 'P', 'T', '\0'};
}

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t.tensor;
  }
  throw ParseError("checkpoint has no tensor named '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& path,
                     std::span<const NamedTensor> tensors,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["tensors"] = nlohmann::json::array();
  for (const NamedTensor& t : tensors) {
    header["tensors"].push_back({{"name", t.name}, {"shape", t.tensor.shape()}});
  }
  header["meta"] = meta;
  const std::string header_text = header.dump();

  std::string bytes(kMagic, 8);
  io::append_u64(bytes, header_text.size());
  bytes += header_text;
  for (const NamedTensor& t : tensors) io::append_f64s(bytes, t.tensor.data());
  io::write_file_atomic(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const std::string what = "checkpoint " + path.string();
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw ParseError(what + ": not a checkpoint file");
  }
  std::size_t offset = 8;
  const std::uint64_t header_len = io::read_u64(bytes, offset, what);
  if (header_len > bytes.size() - offset) {
    throw ParseError(what + ": header length exceeds file size");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(offset, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(what + ": bad header: " + e.what());
  }
  offset += header_len;
  if (header.value("format_version", -1) != kCheckpointFormatVersion) {
    throw ParseError(what + ": unsupported format_version " +
                     header.value("format_version", nlohmann::json()).dump());
  }
  Checkpoint ckpt;
  ckpt.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    Shape shape = entry.at("shape").get<Shape>();
    std::string name = entry.at("name").get<std::string>();
    auto values = io::read_f64s(bytes, offset, shape_numel(shape), what + " / " + name);
    ckpt.tensors.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values))});
  }
  if (offset != bytes.size()) {
    throw ParseError(what + ": " + std::to_string(bytes.size() - offset) +
                     " trailing bytes after payload");
  }
  return ckpt;
}

}  // namespace hgt
