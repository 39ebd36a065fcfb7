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

#include "hgt/binary_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hgt/error.hpp"

namespace hgt::io {


void append_u64(std::string& out, std::uint64_t v) {
  v = to_little(v);
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void append_f64s(std::string& out, std::span<const double> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(values[i]));
    std::memcpy(out.data() + start + i * 8, &bits, 8);
  }
}

std::uint64_t read_u64(std::string_view bytes, std::size_t& offset,
                       std::string_view what) {
  if (bytes.size() < offset + 8) {
    throw ParseError(std::string(what) + ": truncated (need 8 bytes at offset " +
                     std::to_string(offset) + ", have " +
                     std::to_string(bytes.size()) + ")");
  }
  std::uint64_t v;
  std::memcpy(&v, bytes.data() + offset, 8);
  offset += 8;
  return to_little(v);
}

std::vector<double> read_f64s(std::string_view bytes, std::size_t& offset,
                              std::size_t count, std::string_view what) {
  if (count > (bytes.size() - std::min(offset, bytes.size())) / 8) {
    throw ParseError(std::string(what) + ": truncated payload (expected " +
                     std::to_string(count) + " doubles, " +
                     std::to_string(bytes.size() - std::min(offset, bytes.size())) +
                     " bytes remain)");
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, bytes.data() + offset + i * 8, 8);
    values[i] = std::bit_cast<double>(to_little(bits));
  }
  offset += count * 8;
  return values;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string encode_f64_blob(std::span<const double> values) {
  std::string out;
  out.reserve(8 + values.size() * 8);
  append_u64(out, values.size());
  append_f64s(out, values);
  return out;
}

std::vector<double> decode_f64_blob(std::string_view bytes, std::string_view what) {
  std::size_t offset = 0;
  const std::uint64_t count = read_u64(bytes, offset, what);
  if (bytes.size() - 8 != count * 8) {
    throw ParseError(std::string(what) + ": header announces " +
                     std::to_string(count) + " doubles but payload holds " +
                     std::to_string(bytes.size() - 8) + " bytes");
  }
  return read_f64s(bytes, offset, count, what);
}

}  // namespace hgt::io
