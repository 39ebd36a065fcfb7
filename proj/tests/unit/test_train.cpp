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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>

#include "fixtures.hpp"
#include "hgt/binary_io.hpp"
#include "hgt/error.hpp"
#include "hgt/eval.hpp"
#include "hgt/train.hpp"
#include "oracles.hpp"

using namespace hgt;

namespace {

// Two 32x32 frames, both used for training; a third for testing.
const Dataset& tiny_dataset() {
  static const Dataset ds = test::small_dataset(test::temp_dir("train_data"), 3, 1, 21);
  return ds;
}

TrainConfig tiny_config(std::uint64_t seed = 1, int epochs = 2) {
  TrainConfig c;
  c.seed = seed;
  c.epochs = epochs;
  c.batch_size = 4;
  c.grid = PaneGrid{2, 2};
  c.adam.lr = 1e-2;
  c.model = test::tiny_model();
  return c;
}

std::vector<FrameInput> inputs_of(const Dataset& ds, const ModelConfig& cfg, std::uint64_t seed) {
  std::vector<FrameInput> out;
  for (const Frame* f : ds.split("train")) out.push_back(prepare_frame(*f, cfg, frame_seed(seed, f->id)));
  return out;
}

std::vector<PaneSample> samples_of(const std::vector<FrameInput>& inputs, PaneGrid grid) {
  std::vector<PaneSample> out;
  for (std::size_t k = 0; k < inputs.size(); ++k)
    for (PaneSample& s : make_panes(*inputs[k].frame, k, grid)) out.push_back(std::move(s));
  return out;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("mse loss examples") {
  const Tensor pred = Tensor::from({2, 3}, {1, 0, 0, 0, 1, 0});
  const Tensor same = Tensor::from({2, 3}, {1, 0, 0, 0, 1, 0});
  const Tensor other = Tensor::from({2, 3}, {1, 0, 0, 0, 0, 1});
  CHECK(mse_loss(pred, same).item() == 0.0);
  CHECK(mse_loss(pred, other).item() == doctest::Approx(1.0));
  CHECK_THROWS_AS(mse_loss(pred, Tensor::from({1, 3}, {1, 0, 0})), ContractError);
}

TEST_CASE("pane grid parsing") {
  const PaneGrid g = parse_pane_grid("4x3");
  CHECK(g.rows == 4);
  CHECK(g.cols == 3);
  for (const char* bad : {"4", "4x", "x4", "0x4", "4x-1", "axb", "4x4x4"})
    CHECK_THROWS_AS(parse_pane_grid(bad), InvalidArgumentError);
}

TEST_CASE("panes partition the frame exactly") {
  const Frame& frame = tiny_dataset().frames[0];
  for (PaneGrid grid : {PaneGrid{1, 1}, PaneGrid{2, 2}, PaneGrid{4, 4}, PaneGrid{3, 5}}) {
    const PanePartition part = partition_panes(frame, grid);
    const auto panes = make_panes(frame, 7, grid);
    std::vector<int> seen(frame.size(), 0);
    for (const PaneSample& s : panes) {
      CHECK(s.frame == 7);
      CHECK(!s.points.empty());
      CHECK(std::is_sorted(s.points.begin(), s.points.end()));
      for (std::size_t i : s.points) {
        ++seen[i];
        CHECK(part.assignment[i] == s.pane);
        const Pixel& px = frame.proj[i];
        const double ph = 32.0 / grid.rows, pw = 32.0 / grid.cols;
        CHECK(static_cast<std::size_t>(std::floor(px.v / ph)) * grid.cols +
                  static_cast<std::size_t>(std::floor(px.u / pw)) ==
              s.pane);
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
  const auto one = make_panes(frame, 0, PaneGrid{1, 1});
  REQUIRE(one.size() == 1);
  CHECK(one[0].points.size() == frame.size());
}

TEST_CASE("train config json") {
  TrainConfig c = tiny_config(5, 9);
  c.noise_level = 0.012;
  c.data = "d";
  const TrainConfig back = train_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.noise_level == 0.012);

  nlohmann::json j = to_json(c);
  j["learning_rte"] = 1.0;
  CHECK_THROWS_AS(train_config_from_json(j), ConfigError);
  j = to_json(c);
  j["epochs"] = 0;
  CHECK_THROWS_AS(train_config_from_json(j), ConfigError);

  const auto dir = test::temp_dir("train_config");
  io::write_file_atomic(dir / "c.json", "{\"epochs\": 3, \"model\": {\"preset\": \"desk\"}}");
  const TrainConfig loaded = load_train_config(dir / "c.json");
  CHECK(loaded.epochs == 3);
  CHECK(loaded.model.d_token == 32);
  io::write_file_atomic(dir / "bad.json", "{\"epochs\": ");
  CHECK_THROWS_AS(load_train_config(dir / "bad.json"), ParseError);
}

TEST_CASE("batch results do not depend on sample order") {
  const Dataset& ds = tiny_dataset();
  const ModelParams p = ModelParams::init(test::tiny_model(), 3);
  const auto inputs = inputs_of(ds, p.config(), 3);
  const auto samples = samples_of(inputs, PaneGrid{2, 2});
  std::vector<const PaneSample*> batch;
  for (const PaneSample& s : samples) batch.push_back(&s);
  batch.resize(std::min<std::size_t>(batch.size(), 5));
  BatchRunner runner;
  const BatchResult a = runner.run(p, inputs, batch);
  std::reverse(batch.begin(), batch.end());
  const BatchResult b = runner.run(p, inputs, batch);
  CHECK(std::memcmp(&a.loss, &b.loss, sizeof(double)) == 0);
  REQUIRE(a.grads.size() == b.grads.size());
  for (std::size_t i = 0; i < a.grads.size(); ++i) CHECK(same_bits(a.grads[i], b.grads[i]));
  double mean = 0.0;
  for (double m : a.sample_mse) mean += m;
  CHECK(a.loss == doctest::Approx(mean / 5.0).epsilon(1e-14));
  REQUIRE(a.moments.size() == 2);
  std::size_t rows = 0;
  for (const PaneSample* s : batch) rows += s->points.size();
  CHECK(a.moments[0].count == rows);
}

TEST_CASE("a small singleton-batch step lowers that batch's loss") {
  const Dataset& ds = tiny_dataset();
  ModelParams p = ModelParams::init(test::tiny_model(), 4);
  const auto inputs = inputs_of(ds, p.config(), 4);
  const auto samples = samples_of(inputs, PaneGrid{2, 2});
  const PaneSample* batch[] = {&samples[0]};
  BatchRunner runner;
  const BatchResult before = runner.run(p, inputs, batch);
  std::vector<Tensor> tensors;
  for (NamedTensor& t : p.tensors()) tensors.push_back(t.tensor);
  AdamState state;
  AdamConfig adam;
  adam.lr = 1e-6;
  adam_step(tensors, before.grads, state, adam);
  const BatchResult after = runner.run(p, inputs, batch);
  CHECK(after.loss < before.loss);
}

TEST_CASE("initial predictions are about a radian off on average") {
  // A random direction is about 57.3 deg from a fixed line on average; the
  // untrained network is close to that, averaged over several seeds.
  const Dataset& ds = tiny_dataset();
  double sum = 0.0;
  const int seeds = 6;
  for (int s = 0; s < seeds; ++s) {
    const ModelParams p = ModelParams::init(ModelConfig::desk(), 100 + s);
    sum += evaluate_model(ds, "train", p, PaneGrid{4, 4}, 100 + s).mean_angle_deg;
  }
  CHECK(std::abs(sum / seeds - 57.3) < 5.0);
}

TEST_CASE("two epochs on two frames lower the loss and write every artifact") {
  const auto out = test::temp_dir("train_smoke");
  TrainConfig cfg = tiny_config(1, 2);
  cfg.out = out;
  int calls = 0;
  const TrainResult r = train(cfg, tiny_dataset(), [&](const EpochReport&) { ++calls; });
  REQUIRE(r.reports.size() == 4);
  CHECK(calls == 4);
  CHECK(r.reports[0].split == "train");
  CHECK(r.reports[1].split == "test");
  CHECK(r.reports[2].mse < r.reports[0].mse);
  for (const char* f : {"config.json", "loss.csv", "steps.csv", "checkpoint.hgt"})
    CHECK(std::filesystem::exists(out / f));
  const std::string loss = test::read_text(out / "loss.csv");
  CHECK(loss.rfind("epoch,split,mse,mean_angle_deg,seconds\n", 0) == 0);
  CHECK(std::count(loss.begin(), loss.end(), '\n') == 5);
  const std::string steps = test::read_text(out / "steps.csv");
  CHECK(static_cast<std::size_t>(std::count(steps.begin(), steps.end(), '\n')) ==
        r.step_losses.size() + 1);

  // Panes bound the attention size.
  CHECK(r.peak_attention_elements > 0);
  CHECK(r.peak_attention_elements < r.full_frame_attention_elements);

  SUBCASE("the checkpoint reproduces the trained model exactly") {
    nlohmann::json meta;
    const ModelParams loaded = ModelParams::load(out / "checkpoint.hgt", &meta);
    CHECK(meta.at("epoch") == 2);
    const EvalReport a = evaluate_model(tiny_dataset(), "test", r.params, cfg.grid, cfg.seed);
    const EvalReport b = evaluate_model(tiny_dataset(), "test", loaded, cfg.grid, cfg.seed);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i)
      CHECK(std::memcmp(&a.points[i].angle, &b.points[i].angle, sizeof(double)) == 0);
    CHECK(std::abs(a.mean_angle_deg - r.reports.back().mean_angle_deg) < 1e-9);
  }
}

TEST_CASE("training is deterministic in the seed and independent of the thread count") {
  ::setenv("HGT_THREADS", "1", 1);
  const TrainResult a = train(tiny_config(2, 1), tiny_dataset());
  ::setenv("HGT_THREADS", "3", 1);
  const TrainResult b = train(tiny_config(2, 1), tiny_dataset());
  ::unsetenv("HGT_THREADS");
  CHECK(same_bits(a.step_losses, b.step_losses));
  CHECK(a.reports.back().mean_angle_deg == b.reports.back().mean_angle_deg);
  const TrainResult c = train(tiny_config(3, 1), tiny_dataset());
  CHECK(!same_bits(a.step_losses, c.step_losses));
}

TEST_CASE("training validates its inputs") {
  TrainConfig cfg = tiny_config();
  cfg.noise_level = 0.5;
  CHECK_THROWS_AS(train(cfg, tiny_dataset()), ConfigError);
  cfg = tiny_config();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(cfg, tiny_dataset()), ConfigError);
  cfg = tiny_config();
  cfg.model.neighbor_count = 0;
  CHECK_THROWS_AS(train(cfg, tiny_dataset()), ConfigError);
}

TEST_CASE("a diverging run stops with a numeric error and dumps the batch") {
  const auto out = test::temp_dir("train_diverge");
  TrainConfig cfg = tiny_config(1, 3);
  cfg.out = out;
  cfg.adam.lr = 1e300;
  cfg.clip_norm = 0.0;
  CHECK_THROWS_AS(train(cfg, tiny_dataset()), NumericError);
  CHECK(std::filesystem::exists(out / "nonfinite_batch.json"));
}

TEST_CASE("predict_frame covers every point with unit normals") {
  const Dataset& ds = tiny_dataset();
  const ModelParams p = ModelParams::init(test::tiny_model(), 6);
  const Frame& f = ds.frames[2];
  const FrameInput in = prepare_frame(f, p.config(), 6);
  const FramePrediction pred = predict_frame(in, p, PaneGrid{4, 4});
  REQUIRE(pred.normals.size() == f.size());
  for (const Vec3& n : pred.normals) CHECK(std::abs(n.norm() - 1.0) < 1e-12);
  const FramePrediction whole = predict_frame(in, p, PaneGrid{1, 1});
  CHECK(whole.peak_attention_elements == f.size() * f.size());
  CHECK(pred.peak_attention_elements < whole.peak_attention_elements);
}
