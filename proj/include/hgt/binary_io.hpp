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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hgt::io {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0x00000000000000FFull) << 56) | ((v & 0x000000000000FF00ull) << 40) |
        ((v & 0x0000000000FF0000ull) << 24) | ((v & 0x00000000FF000000ull) << 8) |
        ((v & 0x000000FF00000000ull) >> 8) | ((v & 0x0000FF0000000000ull) >> 24) |
        ((v & 0x00FF000000000000ull) >> 40) | ((v & 0xFF00000000000000ull) >> 56);
  }
  return v;
}

void append_u64(std::string& out, std::uint64_t v);
void append_f64s(std::string& out, std::span<const double> values);

// Reads a little-endian value from `bytes` at `offset`, advancing it. Throws
// ParseError naming `what` when the buffer is too short.
std::uint64_t read_u64(std::string_view bytes, std::size_t& offset,
                       std::string_view what);
std::vector<double> read_f64s(std::string_view bytes, std::size_t& offset,
                              std::size_t count, std::string_view what);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Blob layout: u64 value count, then the values as little-endian doubles.
std::string encode_f64_blob(std::span<const double> values);
std::vector<double> decode_f64_blob(std::string_view bytes, std::string_view what);

}  // namespace hgt::io
