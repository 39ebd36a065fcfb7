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
#include <regex>

#include "hgt/error.hpp"
#include "hgt/train.hpp"

namespace hgt {

PaneGrid parse_pane_grid(const std::string& text) {
  static const std::regex pattern(R"(\s*(\d+)\s*[xX]\s*(\d+)\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) {
    throw InvalidArgumentError("pane grid '" + text + "' is not of the form RxC");
  }
  PaneGrid g{std::stoi(m[1]), std::stoi(m[2])};
  if (g.rows < 1 || g.cols < 1) throw InvalidArgumentError("pane grid dimensions must be >= 1");
  return g;
}

PanePartition partition_panes(const Frame& frame, PaneGrid grid) {
  if (grid.rows < 1 || grid.cols < 1) throw InvalidArgumentError("pane grid dimensions must be >= 1");
  const CameraIntrinsics& intr = frame.intrinsics;
  const double pane_h = static_cast<double>(intr.height) / grid.rows;
  const double pane_w = static_cast<double>(intr.width) / grid.cols;
  PanePartition part;
  part.grid = grid;
  part.assignment.resize(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const Pixel& px = frame.proj[i];
    if (!(px.u >= 0.0 && px.u < intr.width && px.v >= 0.0 && px.v < intr.height)) {
      throw ContractError("frame " + frame.id + ": point " + std::to_string(i) +
                          " projects outside the image");
    }
    const int row = std::min(grid.rows - 1, static_cast<int>(std::floor(px.v / pane_h)));
    const int col = std::min(grid.cols - 1, static_cast<int>(std::floor(px.u / pane_w)));
    part.assignment[i] = static_cast<std::size_t>(row) * grid.cols + col;
  }
  return part;
}

std::vector<PaneSample> make_panes(const Frame& frame, std::size_t frame_slot, PaneGrid grid) {
  const PanePartition part = partition_panes(frame, grid);
  std::vector<PaneSample> panes(static_cast<std::size_t>(grid.rows) * grid.cols);
  for (std::size_t p = 0; p < panes.size(); ++p) {
    panes[p].frame = frame_slot;
    panes[p].pane = p;
  }
  for (std::size_t i = 0; i < part.assignment.size(); ++i) {
    panes[part.assignment[i]].points.push_back(i);
  }
  std::erase_if(panes, [](const PaneSample& s) { return s.points.empty(); });
  return panes;
}

}  // namespace hgt
