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
#include <iomanip>
#include <map>
#include <sstream>

#include "hgt/binary_io.hpp"
#include "hgt/error.hpp"
#include "hgt/eval.hpp"
#include "hgt/metrics.hpp"

namespace hgt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string noise_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

ErrorDistribution::ErrorDistribution(std::vector<double> errors) : sorted_(std::move(errors)) {
  std::sort(sorted_.begin(), sorted_.end());
  double sum = 0.0;
  for (double e : sorted_) sum += e;
  mean_ = sorted_.empty() ? 0.0 : sum / static_cast<double>(sorted_.size());
}

double ErrorDistribution::quantile(double q) const {
  if (sorted_.empty()) throw ContractError("quantile of an empty error distribution");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgumentError("quantile level must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted_.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted_.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted_[lo];
  return sorted_[lo] + frac * (sorted_[hi] - sorted_[lo]);
}

std::vector<std::pair<double, double>> quantile_curve(const ErrorDistribution& dist,
                                                      std::size_t resolution) {
  if (dist.size() == 0) throw ContractError("quantile curve of an empty error distribution");
  if (resolution < 2) throw InvalidArgumentError("quantile curve resolution must be >= 2");
  std::vector<std::pair<double, double>> curve;
  curve.reserve(resolution);
  for (std::size_t k = 0; k < resolution; ++k) {
    const double q = static_cast<double>(k) / static_cast<double>(resolution - 1);
    curve.emplace_back(q, dist.quantile(q));
  }
  return curve;
}

ErrorDistribution EvalReport::distribution() const {
  std::vector<double> e;
  e.reserve(points.size());
  for (const PointError& p : points) e.push_back(p.angle);
  return ErrorDistribution(std::move(e));
}

EvalReport make_report(const std::string& method, double noise_level,
                       const std::vector<const Frame*>& frames,
                       const std::vector<std::vector<Vec3>>& predictions) {
  if (frames.size() != predictions.size()) {
    throw ContractError("make_report: " + std::to_string(frames.size()) + " frames but " +
                        std::to_string(predictions.size()) + " prediction sets");
  }
  EvalReport r;
  r.method = method;
  r.noise_level = noise_level;
  std::vector<Vec3> all_pred, all_gt;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& f = *frames[k];
    if (predictions[k].size() != f.size()) {
      throw ContractError("frame " + f.id + ": " + std::to_string(predictions[k].size()) +
                          " predictions for " + std::to_string(f.size()) + " points");
    }
    double frame_sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double a = angle_error(predictions[k][i], f.cloud.normals[i]);
      r.points.push_back({f.id, i, a});
      frame_sum += a;
      all_pred.push_back(predictions[k][i]);
      all_gt.push_back(f.cloud.normals[i]);
    }
    r.per_frame_deg.emplace_back(f.id, f.size() ? rad_to_deg(frame_sum / f.size()) : 0.0);
  }
  r.mean_angle_deg = rad_to_deg(mean_angle_error(all_pred, all_gt));
  const ErrorDistribution dist = r.distribution();
  for (int d = 1; d <= 9; ++d) {
    r.deciles_deg.emplace_back(d / 10.0, rad_to_deg(dist.quantile(d / 10.0)));
  }
  return r;
}

void write_report(const EvalReport& report, const fs::path& out, std::size_t resolution) {
  fs::create_directories(out);
  std::string errors = "frame_id,point_id,angle_deg\n";
  for (const PointError& p : report.points) {
    errors += p.frame_id + "," + std::to_string(p.point_id) + "," + g17(rad_to_deg(p.angle)) + "\n";
  }
  io::write_file_atomic(out / "errors.csv", errors);

  std::string curve = "q,angle_deg\n";
  for (const auto& [q, a] : quantile_curve(report.distribution(), resolution)) {
    curve += g17(q) + "," + g17(rad_to_deg(a)) + "\n";
  }
  io::write_file_atomic(out / "quantiles.csv", curve);

  io::write_file_atomic(out / "summary.csv",
                        summary_csv({{report.method, report.noise_level, report.mean_angle_deg}}));

  json per_frame = json::array();
  for (const auto& [id, deg] : report.per_frame_deg) per_frame.push_back({{"frame_id", id}, {"mean_angle_deg", deg}});
  json deciles = json::array();
  for (const auto& [q, deg] : report.deciles_deg) deciles.push_back({{"q", q}, {"angle_deg", deg}});
  json j = {{"method", report.method},
            {"noise_level", report.noise_level},
            {"mean_angle_deg", report.mean_angle_deg},
            {"points", report.points.size()},
            {"fallback_count", report.fallback_count},
            {"tie_count", report.tie_count},
            {"deciles", deciles},
            {"per_frame", per_frame}};
  io::write_file_atomic(out / "report.json", j.dump(2) + "\n");
}

std::vector<SummaryRow> read_summary_csv(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::vector<SummaryRow> rows;
  if (!std::getline(in, line) || line != "method,noise,mean_angle_deg") {
    throw ParseError(path.string() + ": missing summary header");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected three fields");
    }
    try {
      rows.push_back({line.substr(0, c1), std::stod(line.substr(c1 + 1, c2 - c1 - 1)),
                      std::stod(line.substr(c2 + 1))});
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "method,noise,mean_angle_deg\n";
  for (const SummaryRow& r : rows) {
    out += r.method + "," + noise_text(r.noise_level) + "," + g17(r.mean_angle_deg) + "\n";
  }
  return out;
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::vector<std::string> methods;
  std::vector<double> noises;
  std::map<std::pair<std::string, double>, double> cell;
  for (const SummaryRow& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    if (std::find(noises.begin(), noises.end(), r.noise_level) == noises.end()) noises.push_back(r.noise_level);
    cell[{r.method, r.noise_level}] = r.mean_angle_deg;
  }
  std::sort(noises.begin(), noises.end());
  std::ostringstream os;
  os << "Mean angle error (degrees)\n";
  os << std::left << std::setw(10) << "method";
  for (double n : noises) os << std::right << std::setw(12) << ("noise " + noise_text(n));
  os << "\n";
  for (const std::string& m : methods) {
    os << std::left << std::setw(10) << m;
    for (double n : noises) {
      auto it = cell.find({m, n});
      if (it == cell.end()) {
        os << std::right << std::setw(12) << "-";
      } else {
        os << std::right << std::setw(12) << std::fixed << std::setprecision(2) << it->second;
      }
    }
    os << "\n";
  }
  os << "\nPublished values on the authors' dataset, noise 0 (context only):\n"
     << "  PCA 39.27   HGN 8.49   HGT 8.18\n";
  return os.str();
}

}  // namespace hgt
