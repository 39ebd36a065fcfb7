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
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "hgt/binary_io.hpp"
#include "hgt/dataset.hpp"
#include "hgt/error.hpp"
#include "hgt/parallel.hpp"

namespace hgt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> flatten(const std::vector<Vec3>& v) {
  std::vector<double> out;
  out.reserve(v.size() * 3);
  for (const Vec3& p : v) {
    out.push_back(p.x());
    out.push_back(p.y());
    out.push_back(p.z());
  }
  return out;
}

std::vector<Vec3> unflatten3(const std::vector<double>& flat, std::size_t n,
                             const std::string& what) {
  if (flat.size() != n * 3) {
    throw ParseError(what + ": expected " + std::to_string(n * 3) + " values, found " +
                     std::to_string(flat.size()));
  }
  std::vector<Vec3> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = Vec3(flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]);
  return out;
}

json intrinsics_json(const CameraIntrinsics& intr) {
  return json{{"fx", intr.fx}, {"fy", intr.fy},         {"cx", intr.cx},
              {"cy", intr.cy}, {"width", intr.width}, {"height", intr.height}};
}

json parse_json(const fs::path& path, const std::string& what) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(what + ": " + e.what());
  }
}

std::string frame_dir(const std::string& id) { return "frames/" + id; }

}  // namespace

std::string encode_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + image.rgb.size());
  for (std::size_t i = 0; i < image.rgb.size(); ++i) {
    const double q = std::round(std::clamp(image.rgb[i], 0.0, 1.0) * 255.0);
    out[header + i] = static_cast<char>(static_cast<unsigned char>(q));
  }
  return out;
}

Image decode_ppm(std::string_view bytes, std::string_view what) {
  const std::string name(what);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw ParseError(name + ": malformed pixmap header");
    return std::stol(std::string(bytes.substr(start, pos - start)));
  };
  if (bytes.substr(0, 2) != "P6") throw ParseError(name + ": not a binary P6 pixmap");
  pos = 2;
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (w <= 0 || h <= 0 || maxval != 255) {
    throw ParseError(name + ": unsupported pixmap geometry or depth");
  }
  ++pos;  // single whitespace before the raster
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (bytes.size() < pos + count) {
    throw ParseError(name + ": truncated raster (" + std::to_string(bytes.size() - pos) +
                     " of " + std::to_string(count) + " bytes)");
  }
  Image img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.rgb.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    img.rgb[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  }
  return img;
}

const FrameEntry& DatasetManifest::entry(const std::string& id) const {
  for (const FrameEntry& e : frames) {
    if (e.id == id) return e;
  }
  throw InvalidArgumentError("no frame with id '" + id + "' in the manifest");
}

const Frame& Dataset::frame(const std::string& id) const {
  for (const Frame& f : frames) {
    if (f.id == id) return f;
  }
  throw InvalidArgumentError("no frame with id '" + id + "' in the dataset");
}

std::vector<const Frame*> Dataset::split(const std::string& name) const {
  const std::vector<std::string>* ids = nullptr;
  if (name == "train") ids = &manifest.train;
  else if (name == "test") ids = &manifest.test;
  else throw InvalidArgumentError("unknown split '" + name + "'");
  std::vector<const Frame*> out;
  for (const std::string& id : *ids) out.push_back(&frame(id));
  return out;
}

void write_dataset(const fs::path& root, const std::vector<Frame>& frames,
                   const std::vector<std::string>& train, const std::vector<std::string>& test,
                   const json& generator) {
  if (frames.empty()) throw InvalidArgumentError("cannot write an empty dataset");
  json manifest;
  manifest["format_version"] = kDatasetFormatVersion;
  manifest["image"] = {{"w", frames.front().image.width}, {"h", frames.front().image.height}};
  manifest["noise_level"] = frames.front().noise_level;
  manifest["splits"] = {{"train", train}, {"test", test}};
  manifest["generator"] = generator;
  json entries = json::array();
  for (const Frame& f : frames) {
    f.validate();
    if (f.image.width != frames.front().image.width ||
        f.image.height != frames.front().image.height) {
      throw InvalidArgumentError("frame " + f.id + ": image size differs from the first frame");
    }
    const fs::path dir = root / frame_dir(f.id);
    fs::create_directories(dir);
    std::vector<double> proj;
    proj.reserve(f.proj.size() * 2);
    for (const Pixel& px : f.proj) {
      proj.push_back(px.u);
      proj.push_back(px.v);
    }
    io::write_file_atomic(dir / "image.ppm", encode_ppm(f.image));
    io::write_file_atomic(dir / "points.f64", io::encode_f64_blob(flatten(f.cloud.points)));
    io::write_file_atomic(dir / "normals.f64", io::encode_f64_blob(flatten(f.cloud.normals)));
    io::write_file_atomic(dir / "projmap.f64", io::encode_f64_blob(proj));
    io::write_file_atomic(dir / "intrinsics.json", intrinsics_json(f.intrinsics).dump(2) + "\n");
    entries.push_back({{"id", f.id}, {"points", f.size()}, {"path", frame_dir(f.id)}});
  }
  manifest["frames"] = entries;
  auto check_ids = [&](const std::vector<std::string>& ids) {
    for (const std::string& id : ids) {
      bool found = false;
      for (const Frame& f : frames) found = found || f.id == id;
      if (!found) throw InvalidArgumentError("split references unknown frame '" + id + "'");
    }
  };
  check_ids(train);
  check_ids(test);
  io::write_file_atomic(root / "manifest.json", manifest.dump(2) + "\n");
}

DatasetManifest read_manifest(const fs::path& root) {
  const json j = parse_json(root / "manifest.json", "manifest " + (root / "manifest.json").string());
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kDatasetFormatVersion) {
      throw ParseError("manifest format_version " + std::to_string(m.format_version) +
                       " is not supported (expected " +
                       std::to_string(kDatasetFormatVersion) + ")");
    }
    m.width = j.at("image").at("w").get<int>();
    m.height = j.at("image").at("h").get<int>();
    m.noise_level = j.at("noise_level").get<double>();
    m.train = j.at("splits").at("train").get<std::vector<std::string>>();
    m.test = j.at("splits").at("test").get<std::vector<std::string>>();
    if (j.contains("generator")) m.generator = j.at("generator");
    for (const json& e : j.at("frames")) {
      m.frames.push_back(FrameEntry{e.at("id").get<std::string>(),
                                    e.at("points").get<std::size_t>(),
                                    e.at("path").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return m;
}

Frame read_frame(const fs::path& root, const FrameEntry& entry) {
  const fs::path dir = root / entry.path;
  const std::string tag = "frame " + entry.id;
  Frame f;
  f.id = entry.id;
  const json ij = parse_json(dir / "intrinsics.json", tag + " intrinsics.json");
  try {
    f.intrinsics.fx = ij.at("fx").get<double>();
    f.intrinsics.fy = ij.at("fy").get<double>();
    f.intrinsics.cx = ij.at("cx").get<double>();
    f.intrinsics.cy = ij.at("cy").get<double>();
    f.intrinsics.width = ij.at("width").get<int>();
    f.intrinsics.height = ij.at("height").get<int>();
  } catch (const json::exception& e) {
    throw ParseError(tag + " intrinsics.json: " + e.what());
  }
  f.image = decode_ppm(io::read_file(dir / "image.ppm"), tag + " image.ppm");
  const std::size_t n = entry.points;
  f.cloud.points = unflatten3(
      io::decode_f64_blob(io::read_file(dir / "points.f64"), tag + " points.f64"), n,
      tag + " points.f64");
  f.cloud.normals = unflatten3(
      io::decode_f64_blob(io::read_file(dir / "normals.f64"), tag + " normals.f64"), n,
      tag + " normals.f64");
  const std::vector<double> proj =
      io::decode_f64_blob(io::read_file(dir / "projmap.f64"), tag + " projmap.f64");
  if (proj.size() != n * 2) {
    throw ParseError(tag + " projmap.f64: expected " + std::to_string(n * 2) +
                     " values, found " + std::to_string(proj.size()));
  }
  f.proj.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.proj[i] = Pixel{proj[2 * i], proj[2 * i + 1]};
  return f;
}

Dataset read_dataset(const fs::path& root) {
  Dataset ds;
  ds.manifest = read_manifest(root);
  ds.frames.resize(ds.manifest.frames.size());
  parallel_for(ds.frames.size(), [&](std::size_t i) {
    Frame f = read_frame(root, ds.manifest.frames[i]);
    f.noise_level = ds.manifest.noise_level;
    if (f.image.width != ds.manifest.width || f.image.height != ds.manifest.height) {
      throw ParseError("frame " + f.id + ": image size disagrees with the manifest");
    }
    f.validate();
    ds.frames[i] = std::move(f);
  });
  for (const auto* ids : {&ds.manifest.train, &ds.manifest.test}) {
    for (const std::string& id : *ids) ds.manifest.entry(id);
  }
  return ds;
}

std::size_t default_test_count(std::size_t frames) {
  if (frames <= 1) return 0;
  const auto t = static_cast<std::size_t>(std::llround(frames * 30.0 / 151.0));
  return std::clamp<std::size_t>(t, 1, frames - 1);
}

void generate_dataset(const SynthConfig& config, std::size_t count, std::size_t test_count,
                      const fs::path& root) {
  if (count == 0) throw InvalidArgumentError("frame count must be >= 1");
  if (test_count >= count && count > 1) {
    throw InvalidArgumentError("test split must leave at least one training frame");
  }
  std::vector<Frame> frames(count);
  parallel_for(count, [&](std::size_t i) { frames[i] = generate_frame(config, i); });
  std::vector<std::string> train, test;
  for (std::size_t i = 0; i < count; ++i) {
    (i + test_count >= count ? test : train).push_back(frames[i].id);
  }
  json gen = {{"width", config.width},
              {"height", config.height},
              {"hfov_deg", config.hfov_deg},
              {"lower_fraction", config.lower_fraction},
              {"stride_u", config.stride_u},
              {"stride_v", config.stride_v},
              {"noise_level", config.noise_level},
              {"seed", config.seed},
              {"min_objects", config.min_objects},
              {"max_objects", config.max_objects},
              {"frames", count}};
  write_dataset(root, frames, train, test, gen);
}

}  // namespace hgt
