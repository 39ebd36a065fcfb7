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
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "hgt/binary_io.hpp"
#include "hgt/error.hpp"
#include "hgt/metrics.hpp"
#include "hgt/parallel.hpp"
#include "hgt/train.hpp"

namespace hgt {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------------ config

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (grid.rows < 1 || grid.cols < 1) throw ConfigError("pane_grid dimensions must be >= 1");
  if (!(adam.lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ConfigError("eps must be > 0");
  if (noise_level && *noise_level < 0.0) throw ConfigError("noise_level must be >= 0");
  model.validate();
}

json to_json(const TrainConfig& c) {
  json j = {{"data", c.data.string()},
            {"out", c.out.string()},
            {"seed", c.seed},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"pane_grid", std::to_string(c.grid.rows) + "x" + std::to_string(c.grid.cols)},
            {"lr", c.adam.lr},
            {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"eps", c.adam.eps},
            {"clip_norm", c.clip_norm},
            {"model", to_json(c.model)}};
  if (c.noise_level) j["noise_level"] = *c.noise_level;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  static const std::set<std::string> known = {"data", "out",   "seed",  "epochs", "batch_size",
                                              "pane_grid", "lr", "beta1", "beta2", "eps",
                                              "clip_norm", "noise_level", "model"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown training config key '" + item.key() + "'");
  }
  TrainConfig c;
  try {
    if (j.contains("data")) c.data = j["data"].get<std::string>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("pane_grid")) c.grid = parse_pane_grid(j["pane_grid"].get<std::string>());
    if (j.contains("lr")) c.adam.lr = j["lr"].get<double>();
    if (j.contains("beta1")) c.adam.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) c.adam.beta2 = j["beta2"].get<double>();
    if (j.contains("eps")) c.adam.eps = j["eps"].get<double>();
    if (j.contains("clip_norm")) c.clip_norm = j["clip_norm"].get<double>();
    if (j.contains("noise_level")) c.noise_level = j["noise_level"].get<double>();
    if (j.contains("model")) c.model = model_config_from_json(j["model"]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  } catch (const InvalidArgumentError& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError("training config " + path.string() + ": " + e.what());
  }
  return train_config_from_json(j);
}

std::uint64_t frame_seed(std::uint64_t seed, const std::string& frame_id) {
  return derive_seed(seed, stable_hash(frame_id), 0x4E42);
}

// ------------------------------------------------------------ batch runner

struct BatchRunner::Pool {
  std::unique_ptr<ModelParams> scratch;

  ModelParams& acquire(const ModelParams& params) {
    if (!scratch || scratch->tensors().size() != params.tensors().size()) {
      scratch = std::make_unique<ModelParams>(params.clone());
    } else {
      scratch->assign_values(params);
    }
    scratch->zero_grad();
    return *scratch;
  }
};

BatchRunner::BatchRunner() : pool_(std::make_unique<Pool>()) {}
BatchRunner::~BatchRunner() = default;

BatchResult BatchRunner::run(const ModelParams& params, std::span<const FrameInput> frames,
                             std::span<const PaneSample* const> batch) {
  if (batch.empty()) throw ContractError("BatchRunner: empty batch");
  BatchResult out;
  out.order.assign(batch.begin(), batch.end());
  std::sort(out.order.begin(), out.order.end(), [](const PaneSample* a, const PaneSample* b) {
    return a->frame != b->frame ? a->frame < b->frame : a->pane < b->pane;
  });
  const std::size_t n = out.order.size();
  for (const PaneSample* s : out.order) {
    if (s->frame >= frames.size()) throw ContractError("BatchRunner: sample frame out of range");
  }
  out.sample_mse.assign(n, 0.0);
  out.predictions.assign(n, {});
  const double inv_batch = 1.0 / static_cast<double>(n);

  ModelParams& scratch = pool_->acquire(params);
  Tape tape;
  {
    TapeScope scope(tape);
    std::vector<Tensor> tokens(n);
    Tensor features;
    for (std::size_t i = 0; i < n; ++i) {
      const PaneSample& s = *out.order[i];
      if (i == 0 || out.order[i - 1]->frame != s.frame) {
        features = unet_features(frames[s.frame].image, scratch);
      }
      tokens[i] = build_tokens(frames[s.frame], s.points, features, scratch);
    }
    ForwardContext ctx;
    ctx.mode = ops::BatchNormMode::kTrain;
    std::vector<Tensor> encoded;
    if (scratch.config().variant == Variant::kHgt) {
      encoded = encode(tokens, scratch, ctx);
    } else {
      for (const Tensor& t : tokens) encoded.push_back(hgn_forward(t, scratch));
    }
    out.moments = std::move(ctx.moments);
    out.peak_attention_elements = ctx.peak_attention_elements;

    Tensor total;
    for (std::size_t i = 0; i < n; ++i) {
      const PaneSample& s = *out.order[i];
      NormalPrediction pred = predict_head(encoded[i], scratch);
      Tensor loss = mse_loss(pred.normals, target_normals(*frames[s.frame].frame, s.points));
      out.sample_mse[i] = loss.item();
      auto v = pred.normals.data();
      out.predictions[i].resize(s.points.size());
      for (std::size_t r = 0; r < s.points.size(); ++r) {
        out.predictions[i][r] = Vec3(v[3 * r], v[3 * r + 1], v[3 * r + 2]);
      }
      total = total.defined() ? ops::add(total, loss) : loss;
    }
    tape.backward(ops::scale(total, inv_batch));
  }
  for (const NamedTensor& t : scratch.tensors()) {
    if (t.tensor.has_grad()) {
      out.grads.emplace_back(t.tensor.grad().begin(), t.tensor.grad().end());
    } else {
      out.grads.emplace_back(t.tensor.numel(), 0.0);
    }
  }
  double sum = 0.0;
  for (double m : out.sample_mse) sum += m;
  out.loss = sum * inv_batch;
  return out;
}

void apply_batch_moments(ModelParams& params, const BatchResult& result) {
  for (std::size_t b = 0; b < result.moments.size(); ++b) {
    ops::update_running_stats(params.running().at(b), result.moments[b]);
  }
}

// --------------------------------------------------------------- inference

FramePrediction predict_frame(const FrameInput& input, const ModelParams& params, PaneGrid grid) {
  const Frame& frame = *input.frame;
  FramePrediction out;
  out.normals.assign(frame.size(), Vec3::Zero());
  out.guarded.assign(frame.size(), 0);
  const Tensor features = unet_features(input.image, params);
  for (const PaneSample& s : make_panes(frame, 0, grid)) {
    ForwardContext ctx;
    ctx.mode = ops::BatchNormMode::kEval;
    NormalPrediction pred = forward_sample(input, s.points, features, params, ctx);
    out.peak_attention_elements = std::max(out.peak_attention_elements, ctx.peak_attention_elements);
    auto v = pred.normals.data();
    for (std::size_t r = 0; r < s.points.size(); ++r) {
      out.normals[s.points[r]] = Vec3(v[3 * r], v[3 * r + 1], v[3 * r + 2]);
      out.guarded[s.points[r]] = pred.guarded[r];
    }
  }
  return out;
}

// ---------------------------------------------------------------- training

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_row(const EpochReport& r) {
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.3f", r.seconds);
  return std::to_string(r.epoch) + "," + r.split + "," + format_double(r.mse) + "," +
         format_double(r.mean_angle_deg) + "," + secs + "\n";
}

Vec3 oriented_gt(const Frame& f, std::size_t i) {
  return orient_toward(f.cloud.normals[i], f.cloud.points[i], Vec3::Zero());
}

EpochReport evaluate_split(const std::vector<FrameInput>& inputs, const ModelParams& params,
                           PaneGrid grid, int epoch, const std::string& split) {
  std::vector<FramePrediction> preds(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t k) { preds[k] = predict_frame(inputs[k], params, grid); });
  double sq = 0.0, ang = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Frame& f = *inputs[k].frame;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Vec3 gt = oriented_gt(f, i);
      sq += (preds[k].normals[i] - gt).squaredNorm();
      ang += angle_error(preds[k].normals[i], gt);
      ++count;
    }
  }
  EpochReport r;
  r.epoch = epoch;
  r.split = split;
  r.mse = count ? sq / count : 0.0;
  r.mean_angle_deg = count ? rad_to_deg(ang / count) : 0.0;
  return r;
}

void dump_bad_batch(const fs::path& out, int epoch, std::size_t step, const BatchResult& result,
                    const std::vector<FrameInput>& inputs) {
  json samples = json::array();
  for (std::size_t i = 0; i < result.order.size(); ++i) {
    const PaneSample& s = *result.order[i];
    samples.push_back({{"frame_id", inputs[s.frame].frame->id},
                       {"pane", s.pane},
                       {"points", s.points},
                       {"mse", std::isfinite(result.sample_mse[i]) ? json(result.sample_mse[i])
                                                                    : json(format_double(result.sample_mse[i]))}});
  }
  json dump = {{"epoch", epoch}, {"step", step}, {"loss", format_double(result.loss)}, {"samples", samples}};
  io::write_file_atomic(out / "nonfinite_batch.json", dump.dump(2) + "\n");
}

// Consecutive batches of `size` samples. Batch norm needs two tokens per
// batch, so a trailing batch holding a single point joins its predecessor.
std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(const std::vector<std::size_t>& order,
                                                              const std::vector<PaneSample>& samples,
                                                              std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += size) {
    out.emplace_back(start, std::min(order.size(), start + size));
  }
  const auto& last = out.back();
  std::size_t points = 0;
  for (std::size_t i = last.first; i < last.second; ++i) points += samples[order[i]].points.size();
  if (points < 2 && out.size() > 1) {
    const std::size_t stop = last.second;
    out.pop_back();
    out.back().second = stop;
  }
  return out;
}

bool all_finite(const std::vector<std::vector<double>>& grads) {
  for (const auto& g : grads)
    for (double v : g)
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

TrainResult train(const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  if (config.data.empty()) throw ConfigError("training config names no dataset");
  const Dataset dataset = read_dataset(config.data);
  return train(config, dataset, progress);
}

TrainResult train(const TrainConfig& config, const Dataset& dataset, const ProgressFn& progress) {
  config.validate();
  if (config.noise_level && *config.noise_level != dataset.manifest.noise_level) {
    throw ConfigError("training config expects noise level " + format_double(*config.noise_level) +
                      " but the dataset has " + format_double(dataset.manifest.noise_level));
  }
  const auto train_frames = dataset.split("train");
  const auto test_frames = dataset.split("test");
  if (train_frames.empty()) throw ConfigError("dataset has no training frames");

  auto prepare = [&](const std::vector<const Frame*>& frames) {
    std::vector<FrameInput> inputs(frames.size());
    parallel_for(frames.size(), [&](std::size_t k) {
      inputs[k] = prepare_frame(*frames[k], config.model, frame_seed(config.seed, frames[k]->id));
    });
    return inputs;
  };
  const std::vector<FrameInput> train_inputs = prepare(train_frames);
  const std::vector<FrameInput> test_inputs = prepare(test_frames);

  std::vector<PaneSample> samples;
  TrainResult result;
  for (std::size_t k = 0; k < train_frames.size(); ++k) {
    for (PaneSample& s : make_panes(*train_frames[k], k, config.grid)) samples.push_back(std::move(s));
    const std::size_t n = train_frames[k]->size();
    result.full_frame_attention_elements = std::max(result.full_frame_attention_elements, n * n);
  }
  if (samples.empty()) throw ConfigError("the training frames hold no points");

  result.params = ModelParams::init(config.model, config.seed);
  ModelParams& params = result.params;

  if (!config.out.empty()) {
    fs::create_directories(config.out);
    io::write_file_atomic(config.out / "config.json", to_json(config).dump(2) + "\n");
  }
  std::string loss_csv = "epoch,split,mse,mean_angle_deg,seconds\n";
  std::string steps_csv = "epoch,step,loss\n";

  Rng shuffle_rng(derive_seed(config.seed, 0x5EEDull));
  AdamState adam;
  BatchRunner runner;
  std::vector<std::size_t> order(samples.size());
  std::size_t step = 0;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(shuffle_rng)]);
    }
    double mse_sum = 0.0, angle_sum = 0.0;
    std::size_t angle_count = 0;
    for (const auto& [start, stop] : batch_bounds(order, samples, batch)) {
      std::vector<const PaneSample*> members;
      for (std::size_t i = start; i < stop; ++i) members.push_back(&samples[order[i]]);
      BatchResult br = runner.run(params, train_inputs, members);
      ++step;
      if (!std::isfinite(br.loss) || !all_finite(br.grads)) {
        if (!config.out.empty()) dump_bad_batch(config.out, epoch, step, br, train_inputs);
        throw NumericError("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(step) +
                           (config.out.empty() ? std::string()
                                               : "; batch written to " +
                                                     (config.out / "nonfinite_batch.json").string()));
      }
      result.step_losses.push_back(br.loss);
      steps_csv += std::to_string(epoch) + "," + std::to_string(step) + "," + format_double(br.loss) + "\n";
      result.peak_attention_elements = std::max(result.peak_attention_elements, br.peak_attention_elements);
      for (std::size_t i = 0; i < br.order.size(); ++i) {
        mse_sum += br.sample_mse[i];
        const PaneSample& s = *br.order[i];
        const Frame& f = *train_inputs[s.frame].frame;
        for (std::size_t r = 0; r < s.points.size(); ++r) {
          angle_sum += angle_error(br.predictions[i][r], oriented_gt(f, s.points[r]));
          ++angle_count;
        }
      }
      if (config.clip_norm > 0.0) clip_global_norm(br.grads, config.clip_norm);
      std::vector<Tensor> tensors;
      for (NamedTensor& t : params.tensors()) tensors.push_back(t.tensor);
      adam_step(tensors, br.grads, adam, config.adam);
      apply_batch_moments(params, br);
    }
    const double train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EpochReport tr;
    tr.epoch = epoch;
    tr.split = "train";
    tr.mse = mse_sum / static_cast<double>(samples.size());
    tr.mean_angle_deg = rad_to_deg(angle_sum / static_cast<double>(angle_count));
    tr.seconds = train_seconds;
    result.reports.push_back(tr);
    loss_csv += csv_row(tr);
    if (progress) progress(tr);
    if (!test_inputs.empty()) {
      const auto t1 = std::chrono::steady_clock::now();
      EpochReport te = evaluate_split(test_inputs, params, config.grid, epoch, "test");
      te.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
      result.reports.push_back(te);
      loss_csv += csv_row(te);
      if (progress) progress(te);
    }
    if (!config.out.empty()) {
      io::write_file_atomic(config.out / "loss.csv", loss_csv);
      io::write_file_atomic(config.out / "steps.csv", steps_csv);
      params.save(config.out / "checkpoint.hgt",
                  json{{"epoch", epoch}, {"seed", config.seed}, {"train_config", to_json(config)}});
    }
  }
  return result;
}

}  // namespace hgt
