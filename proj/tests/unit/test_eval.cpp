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

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "hgt/binary_io.hpp"
#include "hgt/error.hpp"
#include "hgt/eval.hpp"
#include "hgt/metrics.hpp"
#include "hgt/pca.hpp"
#include "oracles.hpp"

using namespace hgt;

namespace {

const Dataset& eval_dataset() {
  static const Dataset ds = test::small_dataset(test::temp_dir("eval_data"), 3, 2, 31, 0.006);
  return ds;
}

std::vector<Vec3> ground_truth(const Frame& f, double sign = 1.0) {
  std::vector<Vec3> out;
  for (const Vec3& n : f.cloud.normals) out.push_back(sign * n);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(fields);
  }
  return rows;
}

}  // namespace

TEST_CASE("quantiles interpolate between order statistics") {
  const ErrorDistribution d({4.0, 1.0, 3.0, 2.0});
  CHECK(d.quantile(0.5) == 2.5);
  CHECK(d.quantile(0.0) == 1.0);
  CHECK(d.quantile(1.0) == 4.0);
  CHECK(d.quantile(1.0 / 3.0) == doctest::Approx(2.0));
  CHECK(d.mean() == 2.5);
  CHECK(d.sorted() == std::vector<double>{1, 2, 3, 4});
  CHECK_THROWS_AS(d.quantile(1.5), InvalidArgumentError);
  CHECK_THROWS_AS(ErrorDistribution({}).quantile(0.5), ContractError);

  const auto curve = quantile_curve(d, 5);
  REQUIRE(curve.size() == 5);
  CHECK(curve.front() == std::pair<double, double>{0.0, 1.0});
  CHECK(curve.back() == std::pair<double, double>{1.0, 4.0});
  CHECK(curve[2].second == 2.5);
  CHECK_THROWS_AS(quantile_curve(d, 1), InvalidArgumentError);
  CHECK_THROWS_AS(quantile_curve(ErrorDistribution({})), ContractError);
}

TEST_CASE("quantile curve is monotone") {
  Rng rng(1);
  std::vector<double> v(1000);
  std::uniform_real_distribution<double> u(0, 1.5);
  for (double& x : v) x = u(rng);
  const auto curve = quantile_curve(ErrorDistribution(v), 512);
  CHECK(curve.size() == 512);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].first > curve[i - 1].first);
    CHECK(curve[i].second >= curve[i - 1].second);
  }
}

TEST_CASE("ground truth as predictions scores zero either way round") {
  const Dataset& ds = eval_dataset();
  const auto frames = ds.split("test");
  for (double sign : {1.0, -1.0}) {
    std::vector<std::vector<Vec3>> preds;
    for (const Frame* f : frames) preds.push_back(ground_truth(*f, sign));
    const EvalReport r = make_report("gt", ds.manifest.noise_level, frames, preds);
    CHECK(r.mean_angle_deg == 0.0);
    CHECK(r.points.size() == frames[0]->size() + frames[1]->size());
    CHECK(r.per_frame_deg.size() == 2);
    CHECK(r.deciles_deg.size() == 9);
  }
  std::vector<std::vector<Vec3>> short_preds{ground_truth(*frames[0])};
  CHECK_THROWS_AS(make_report("x", 0.0, frames, short_preds), ContractError);
}

TEST_CASE("pca report mean equals the mean angle error of its predictions") {
  const Dataset& ds = eval_dataset();
  PcaOptions opt;
  opt.seed = 4;
  const EvalReport r = evaluate_pca(ds, "test", opt);
  CHECK(r.method == "pca");
  CHECK(r.noise_level == 0.006);
  std::vector<Vec3> all_pred, all_gt;
  for (const Frame* f : ds.split("test")) {
    const auto pred = pca_frame(*f, opt);
    all_pred.insert(all_pred.end(), pred.begin(), pred.end());
    all_gt.insert(all_gt.end(), f->cloud.normals.begin(), f->cloud.normals.end());
  }
  CHECK(std::abs(r.mean_angle_deg - rad_to_deg(mean_angle_error(all_pred, all_gt))) < 1e-12);
  CHECK(r.mean_angle_deg > 0.0);
  CHECK(r.mean_angle_deg < 60.0);

  // Same seed, same answer; the per-point errors are in frame order.
  const EvalReport again = evaluate_pca(ds, "test", opt);
  CHECK(again.mean_angle_deg == r.mean_angle_deg);
  CHECK(r.points.front().frame_id == ds.manifest.test.front());
  CHECK(r.points.front().point_id == 0);

  opt.radius = 0.0;
  CHECK_THROWS_AS(evaluate_pca(ds, "test", opt), ConfigError);
  CHECK_THROWS_AS(evaluate_pca(ds, "validation", PcaOptions{}), InvalidArgumentError);
}

TEST_CASE("report files agree with the report") {
  const Dataset& ds = eval_dataset();
  const EvalReport r = evaluate_pca(ds, "test", PcaOptions{});
  const auto out = test::temp_dir("eval_report");
  write_report(r, out, 64);

  const auto errors = read_csv(out / "errors.csv");
  REQUIRE(errors.size() == r.points.size() + 1);
  CHECK(errors[0] == std::vector<std::string>{"frame_id", "point_id", "angle_deg"});
  double sum = 0.0;
  for (std::size_t i = 1; i < errors.size(); ++i) sum += std::stod(errors[i][2]);
  CHECK(std::abs(sum / r.points.size() - r.mean_angle_deg) < 1e-9);

  const auto q = read_csv(out / "quantiles.csv");
  CHECK(q.size() == 65);
  CHECK(std::stod(q[1][0]) == 0.0);
  CHECK(std::stod(q.back()[0]) == 1.0);

  const auto rows = read_summary_csv(out / "summary.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].method == "pca");
  CHECK(std::abs(rows[0].mean_angle_deg - r.mean_angle_deg) < 1e-9);

  const auto j = nlohmann::json::parse(test::read_text(out / "report.json"));
  CHECK(j.at("method") == "pca");
  CHECK(j.at("points") == r.points.size());
}

TEST_CASE("prediction directories") {
  const Dataset& ds = eval_dataset();
  const auto dir = test::temp_dir("eval_predictions");
  for (const Frame* f : ds.split("test")) write_predictions(dir, f->id, ground_truth(*f, -1.0));
  CHECK(evaluate_prediction_dir(ds, "test", dir).mean_angle_deg == 0.0);

  const Frame& f = *ds.split("test")[0];
  auto wrong = ground_truth(f);
  wrong.pop_back();
  write_predictions(dir, f.id, wrong);
  CHECK_THROWS_AS(evaluate_prediction_dir(ds, "test", dir), ParseError);
  std::filesystem::remove(dir / (f.id + ".f64"));
  CHECK_THROWS_AS(evaluate_prediction_dir(ds, "test", dir), IoError);
}

TEST_CASE("summary csv and table") {
  const std::vector<SummaryRow> rows{{"pca", 0.0, 17.25}, {"hgt", 0.0, 9.5}, {"hgt", 0.024, 12.0}};
  const auto dir = test::temp_dir("eval_summary");
  io::write_file_atomic(dir / "s.csv", summary_csv(rows));
  const auto back = read_summary_csv(dir / "s.csv");
  REQUIRE(back.size() == 3);
  CHECK(back[2].method == "hgt");
  CHECK(back[2].noise_level == 0.024);
  CHECK(back[1].mean_angle_deg == 9.5);
  const std::string table = summary_table(rows);
  for (const char* s : {"pca", "hgt", "17.25", "9.50", "0.024"})
    CHECK(table.find(s) != std::string::npos);

  io::write_file_atomic(dir / "bad.csv", "method,noise,mean_angle_deg\npca,0\n");
  CHECK_THROWS_AS(read_summary_csv(dir / "bad.csv"), ParseError);
  io::write_file_atomic(dir / "nohead.csv", "pca,0,1\n");
  CHECK_THROWS_AS(read_summary_csv(dir / "nohead.csv"), ParseError);
}

TEST_CASE("attention dumps") {
  const Dataset& ds = eval_dataset();
  const Frame& f = ds.frames[0];
  const ModelParams p = ModelParams::init(test::tiny_model(), 5);
  const std::size_t point = f.size() / 2;
  const AttentionDump d = attention_dump(f, p, point, PaneGrid{2, 2}, 5);
  CHECK(d.frame_id == f.id);
  REQUIRE(d.row < d.members.size());
  CHECK(d.members[d.row] == point);
  CHECK(d.blocks.size() == 2);
  CHECK(d.weights.size() == d.members.size());
  CHECK(std::abs(std::accumulate(d.weights.begin(), d.weights.end(), 0.0) - 1.0) < 1e-9);
  for (std::size_t j = 0; j < d.weights.size(); ++j) CHECK(d.weights[j] == d.blocks[0].at(d.row, j));

  // Every member shares the query's pane.
  const PanePartition part = partition_panes(f, PaneGrid{2, 2});
  for (std::size_t m : d.members) CHECK(part.assignment[m] == part.assignment[point]);

  const auto out = test::temp_dir("eval_attention");
  write_attention_dump(d, f, out, true);
  const auto rows = read_csv(out / "attention.csv");
  CHECK(rows.size() == d.members.size() + 1);
  CHECK(std::filesystem::exists(out / "attention.ppm"));
  CHECK(std::filesystem::exists(out / "attention_index.json"));
  const auto blob = io::decode_f64_blob(io::read_file(out / "attention_block1.f64"), "b");
  CHECK(blob.size() == d.members.size() * d.members.size());
  CHECK(blob[0] == d.blocks[1][0]);

  CHECK_THROWS_AS(attention_dump(f, p, f.size(), PaneGrid{2, 2}, 5), InvalidArgumentError);
  const ModelParams hgn = ModelParams::init(test::tiny_model(Variant::kHgn), 5);
  CHECK_THROWS_AS(attention_dump(f, hgn, 0, PaneGrid{2, 2}, 5), InvalidArgumentError);
}

TEST_CASE("model evaluation matches predict_frame") {
  const Dataset& ds = eval_dataset();
  const ModelParams p = ModelParams::init(test::tiny_model(), 6);
  const EvalReport r = evaluate_model(ds, "test", p, PaneGrid{2, 2}, 6);
  CHECK(r.method == "hgt");
  std::vector<Vec3> pred, gt;
  for (const Frame* f : ds.split("test")) {
    const FrameInput in = prepare_frame(*f, p.config(), frame_seed(6, f->id));
    const auto fp = predict_frame(in, p, PaneGrid{2, 2});
    pred.insert(pred.end(), fp.normals.begin(), fp.normals.end());
    gt.insert(gt.end(), f->cloud.normals.begin(), f->cloud.normals.end());
  }
  CHECK(std::abs(r.mean_angle_deg - rad_to_deg(mean_angle_error(pred, gt))) < 1e-12);
}
