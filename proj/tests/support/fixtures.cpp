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

#include "fixtures.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hgt::test {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const char* env = std::getenv("HGT_TEST_TMP");
  const fs::path base = env && *env ? fs::path(env) : fs::temp_directory_path() / "hgt_tests";
  const fs::path dir = base / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SynthConfig small_synth(std::uint64_t seed, double noise) {
  SynthConfig c;
  c.width = 32;
  c.height = 32;
  c.stride_u = 2;
  c.stride_v = 2;
  c.seed = seed;
  c.noise_level = noise;
  return c;
}

Frame tiny_frame(std::uint64_t seed) {
  SynthConfig c;
  c.width = 16;
  c.height = 16;
  c.stride_u = 1;
  c.stride_v = 1;
  c.seed = seed;
  return generate_frame(c, 0);
}

ModelConfig tiny_model(Variant variant) {
  ModelConfig c;
  c.variant = variant;
  c.unet_channels = {2, 3};
  c.d_img = 3;
  c.point_mlp = {4, 5};
  c.pos_mlp = {3};
  c.d_token = 6;
  c.neighbor_count = 4;
  c.radius = 1.5;
  c.attention_blocks = 2;
  c.head_hidden = 5;
  return c;
}

Dataset small_dataset(const fs::path& root, std::size_t frames, std::size_t test, std::uint64_t seed,
                      double noise) {
  generate_dataset(small_synth(seed, noise), frames, test, root);
  return read_dataset(root);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hgt::test
