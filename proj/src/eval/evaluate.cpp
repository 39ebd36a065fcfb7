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

#include <atomic>

#include "hgt/binary_io.hpp"
#include "hgt/error.hpp"
#include "hgt/eval.hpp"
#include "hgt/parallel.hpp"
#include "hgt/pca.hpp"

namespace hgt {

namespace fs = std::filesystem;

std::vector<Vec3> pca_frame(const Frame& frame, const PcaOptions& options, std::size_t* fallbacks,
                            std::size_t* ties) {
  if (!(options.radius > 0.0) || options.neighbor_count < 1) {
    throw ConfigError("PCA needs radius > 0 and neighbor_count >= 1");
  }
  const auto neighborhoods =
      all_neighborhoods(frame.cloud.points, options.radius,
                        static_cast<std::size_t>(options.neighbor_count),
                        frame_seed(options.seed, frame.id));
  std::vector<Vec3> out(frame.size());
  std::size_t n_fallback = 0, n_tie = 0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    try {
      const PcaNormal pn = pca_normal(frame.cloud.points, neighborhoods[i]);
      out[i] = pn.normal;
      n_tie += pn.tie ? 1 : 0;
    } catch (const DegenerateError&) {
      const Vec3& p = frame.cloud.points[i];
      out[i] = p.norm() > 0.0 ? Vec3(-p.normalized()) : Vec3(0.0, 0.0, -1.0);
      ++n_fallback;
    }
  }
  if (fallbacks) *fallbacks = n_fallback;
  if (ties) *ties = n_tie;
  return out;
}

EvalReport evaluate_pca(const Dataset& dataset, const std::string& split, const PcaOptions& options) {
  const auto frames = dataset.split(split);
  if (frames.empty()) throw InvalidArgumentError("split '" + split + "' has no frames");
  std::vector<std::vector<Vec3>> preds(frames.size());
  std::vector<std::size_t> fallbacks(frames.size()), ties(frames.size());
  parallel_for(frames.size(), [&](std::size_t k) {
    preds[k] = pca_frame(*frames[k], options, &fallbacks[k], &ties[k]);
  });
  EvalReport r = make_report("pca", dataset.manifest.noise_level, frames, preds);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    r.fallback_count += fallbacks[k];
    r.tie_count += ties[k];
  }
  return r;
}

EvalReport evaluate_model(const Dataset& dataset, const std::string& split,
                          const ModelParams& params, PaneGrid grid, std::uint64_t seed) {
  const auto frames = dataset.split(split);
  if (frames.empty()) throw InvalidArgumentError("split '" + split + "' has no frames");
  std::vector<std::vector<Vec3>> preds(frames.size());
  std::vector<std::size_t> guarded(frames.size(), 0);
  parallel_for(frames.size(), [&](std::size_t k) {
    const FrameInput input = prepare_frame(*frames[k], params.config(), frame_seed(seed, frames[k]->id));
    FramePrediction fp = predict_frame(input, params, grid);
    for (auto g : fp.guarded) guarded[k] += g;
    preds[k] = std::move(fp.normals);
  });
  EvalReport r =
      make_report(to_string(params.config().variant), dataset.manifest.noise_level, frames, preds);
  for (std::size_t g : guarded) r.fallback_count += g;
  return r;
}

void write_predictions(const fs::path& dir, const std::string& frame_id,
                       const std::vector<Vec3>& normals) {
  fs::create_directories(dir);
  std::vector<double> flat;
  flat.reserve(normals.size() * 3);
  for (const Vec3& n : normals) flat.insert(flat.end(), {n.x(), n.y(), n.z()});
  io::write_file_atomic(dir / (frame_id + ".f64"), io::encode_f64_blob(flat));
}

EvalReport evaluate_prediction_dir(const Dataset& dataset, const std::string& split,
                                   const fs::path& dir) {
  const auto frames = dataset.split(split);
  if (frames.empty()) throw InvalidArgumentError("split '" + split + "' has no frames");
  std::vector<std::vector<Vec3>> preds(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const std::string what = "predictions for frame " + frames[k]->id;
    const auto flat = io::decode_f64_blob(io::read_file(dir / (frames[k]->id + ".f64")), what);
    if (flat.size() != frames[k]->size() * 3) {
      throw ParseError(what + ": expected " + std::to_string(frames[k]->size() * 3) +
                       " values, found " + std::to_string(flat.size()));
    }
    for (std::size_t i = 0; i < frames[k]->size(); ++i) {
      preds[k].emplace_back(flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]);
    }
  }
  return make_report("predictions", dataset.manifest.noise_level, frames, preds);
}

}  // namespace hgt
