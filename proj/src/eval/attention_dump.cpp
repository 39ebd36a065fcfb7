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

#include "hgt/binary_io.hpp"
#include "hgt/error.hpp"
#include "hgt/eval.hpp"

namespace hgt {

namespace fs = std::filesystem;
using nlohmann::json;

AttentionDump attention_dump(const Frame& frame, const ModelParams& params, std::size_t point,
                             PaneGrid grid, std::uint64_t seed) {
  if (params.config().variant != Variant::kHgt) {
    throw InvalidArgumentError("attention maps exist only for the hgt variant");
  }
  if (point >= frame.size()) {
    throw InvalidArgumentError("point " + std::to_string(point) + " is out of range; frame " +
                               frame.id + " has " + std::to_string(frame.size()) + " points");
  }
  const FrameInput input = prepare_frame(frame, params.config(), frame_seed(seed, frame.id));
  const auto panes = make_panes(frame, 0, grid);
  const PaneSample* sample = nullptr;
  for (const PaneSample& s : panes) {
    if (std::binary_search(s.points.begin(), s.points.end(), point)) sample = &s;
  }
  if (!sample) throw ContractError("point " + std::to_string(point) + " belongs to no pane");

  ForwardContext ctx;
  ctx.mode = ops::BatchNormMode::kEval;
  ctx.trace = true;
  const Tensor features = unet_features(input.image, params);
  forward_sample(input, sample->points, features, params, ctx);

  AttentionDump dump;
  dump.frame_id = frame.id;
  dump.query = point;
  dump.members = sample->points;
  dump.row = static_cast<std::size_t>(
      std::lower_bound(sample->points.begin(), sample->points.end(), point) - sample->points.begin());
  dump.blocks = ctx.attention;
  const std::size_t n = dump.members.size();
  auto a = dump.blocks.front().data();
  dump.weights.assign(a.begin() + dump.row * n, a.begin() + (dump.row + 1) * n);
  return dump;
}

void write_attention_dump(const AttentionDump& dump, const Frame& frame, const fs::path& out,
                          bool trace) {
  fs::create_directories(out);
  std::string csv = "point_id,u,v,weight\n";
  char buf[128];
  for (std::size_t r = 0; r < dump.members.size(); ++r) {
    const Pixel& px = frame.proj[dump.members[r]];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", dump.members[r], px.u, px.v,
                  dump.weights[r]);
    csv += buf;
  }
  io::write_file_atomic(out / "attention.csv", csv);

  // Dimmed grayscale frame with weights splatted at projected pixels,
  // scaled so the largest weight is white; the query pixel is marked black.
  Image overlay;
  overlay.width = frame.image.width;
  overlay.height = frame.image.height;
  overlay.rgb.resize(frame.image.rgb.size());
  for (std::size_t p = 0; p < overlay.rgb.size() / 3; ++p) {
    const double* c = &frame.image.rgb[3 * p];
    const double gray = 0.3 * (0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]);
    overlay.rgb[3 * p] = overlay.rgb[3 * p + 1] = overlay.rgb[3 * p + 2] = gray;
  }
  const double wmax = *std::max_element(dump.weights.begin(), dump.weights.end());
  auto splat = [&](const Pixel& px, double value) {
    const int cx = static_cast<int>(std::floor(px.u)), cy = static_cast<int>(std::floor(px.v));
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = cx + dx, y = cy + dy;
        if (x < 0 || y < 0 || x >= overlay.width || y >= overlay.height) continue;
        double* d = &overlay.rgb[(static_cast<std::size_t>(y) * overlay.width + x) * 3];
        const double v = std::max(d[0], value);
        d[0] = d[1] = d[2] = v;
      }
    }
  };
  for (std::size_t r = 0; r < dump.members.size(); ++r) {
    splat(frame.proj[dump.members[r]], wmax > 0.0 ? dump.weights[r] / wmax : 0.0);
  }
  {
    const Pixel& q = frame.proj[dump.query];
    const int x = static_cast<int>(std::floor(q.u)), y = static_cast<int>(std::floor(q.v));
    double* d = &overlay.rgb[(static_cast<std::size_t>(y) * overlay.width + x) * 3];
    d[0] = d[1] = d[2] = 0.0;
  }
  io::write_file_atomic(out / "attention.ppm", encode_ppm(overlay));

  if (!trace) return;
  json files = json::array();
  for (std::size_t b = 0; b < dump.blocks.size(); ++b) {
    const std::string name = "attention_block" + std::to_string(b) + ".f64";
    io::write_file_atomic(out / name, io::encode_f64_blob(dump.blocks[b].data()));
    files.push_back(name);
  }
  json rows = json::array();
  for (std::size_t r = 0; r < dump.members.size(); ++r) {
    const Pixel& px = frame.proj[dump.members[r]];
    rows.push_back({{"row", r}, {"point_id", dump.members[r]}, {"u", px.u}, {"v", px.v}});
  }
  json index = {{"frame_id", dump.frame_id},
                {"query_point", dump.query},
                {"query_row", dump.row},
                {"size", dump.members.size()},
                {"blocks", files},
                {"rows", rows}};
  io::write_file_atomic(out / "attention_index.json", index.dump(2) + "\n");
}

}  // namespace hgt
