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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/SVD>

#include "hgt/ops.hpp"

namespace hgt::test {

Tensor random_tensor(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = u(rng);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

GradCheck check_gradients(const std::function<Tensor()>& f, const std::vector<Tensor>& leaves,
                          double step, std::size_t max_entries) {
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    for (Tensor leaf : leaves) leaf.zero_grad();
    Tensor loss = f();
    tape.backward(loss);
    for (const Tensor& leaf : leaves) {
      analytic.emplace_back(leaf.has_grad() ? std::vector<double>(leaf.grad().begin(), leaf.grad().end())
                                            : std::vector<double>(leaf.numel(), 0.0));
    }
  }
  GradCheck out;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    Tensor leaf = leaves[l];
    auto values = leaf.mutable_data();
    const std::size_t n = values.size();
    const std::size_t stride = (max_entries == 0 || n <= max_entries) ? 1 : n / max_entries;
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = f().item();
      values[i] = saved - step;
      const double down = f().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[l][i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kGradRelFloor});
      ++out.checked;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        char buf[160];
        std::snprintf(buf, sizeof buf, "leaf %zu [%zu] analytic %.12g numeric %.12g", l, i, a,
                      numeric);
        out.worst = buf;
      }
    }
  }
  return out;
}

std::vector<std::size_t> brute_force_within(std::span<const Vec3> points, const Vec3& query,
                                            double radius) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if ((points[i] - query).norm() <= radius) out.push_back(i);
  }
  return out;
}

Vec3 svd_plane_normal(std::span<const Vec3> points) {
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Eigen::MatrixXd m(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i) m.row(i) = (points[i] - centroid).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().col(2).normalized();
}

double line_angle(const Vec3& a, const Vec3& b) {
  const double c = std::abs(a.dot(b));
  const double s = a.cross(b).norm();
  return std::atan2(s, c);
}

Vec3 analytic_normal(const Surface& surface, const Vec3& p) {
  if (const auto* pl = std::get_if<Plane>(&surface)) return pl->normal.normalized();
  if (const auto* sp = std::get_if<Sphere>(&surface)) return (p - sp->center).normalized();
  if (const auto* b = std::get_if<Box>(&surface)) {
    int axis = 0;
    double sign = 1.0, best = INFINITY;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(p[k] - b->min[k]) < best) best = std::abs(p[k] - b->min[k]), axis = k, sign = -1.0;
      if (std::abs(p[k] - b->max[k]) < best) best = std::abs(p[k] - b->max[k]), axis = k, sign = 1.0;
    }
    Vec3 n = Vec3::Zero();
    n[axis] = sign;
    return n;
  }
  const auto& c = std::get<Cylinder>(surface);
  const Vec3 radial(p.x() - c.base.x(), p.y() - c.base.y(), 0.0);
  const double side = std::abs(radial.norm() - c.radius);
  const double bottom = std::abs(p.z() - c.base.z());
  const double top = std::abs(p.z() - c.base.z() - c.height);
  if (side <= bottom && side <= top) return radial.normalized();
  return bottom < top ? Vec3(0, 0, -1) : Vec3(0, 0, 1);
}

Mat to_mat(const Tensor& t) {
  const std::size_t r = t.dim(0), c = t.numel() / r;
  Mat m(r, std::vector<double>(c));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m[i][j] = t[i * c + j];
  return m;
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.size(), std::vector<double>(b.front().size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[k].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.front().size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
  return t;
}

namespace {

Mat linear(const Mat& x, const Tensor& w, const Tensor& b) {
  Mat y = matmul(x, to_mat(w));
  for (auto& row : y)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  return y;
}

}  // namespace

Mat reference_attention_block(const Mat& tokens, const ModelParams& params, std::size_t block,
                              Mat* attention) {
  const std::string pre = "attn" + std::to_string(block);
  const ModelConfig& cfg = params.config();
  const std::size_t n = tokens.size(), d = tokens.front().size();
  const Mat q = matmul(tokens, to_mat(params.at(pre + ".wq")));
  const Mat k = matmul(tokens, to_mat(params.at(pre + ".wk")));
  Mat a(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double top = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < q[i].size(); ++c) s += q[i][c] * k[j][c];
      a[i][j] = s / std::sqrt(static_cast<double>(d));
      top = std::max(top, a[i][j]);
    }
    double z = 0.0;
    for (double& v : a[i]) z += (v = std::exp(v - top));
    for (double& v : a[i]) v /= z;
  }
  if (cfg.attention_norm == AttentionNorm::kOffset) {
    for (std::size_t j = 0; j < n; ++j) {
      double col = 1e-9;
      for (std::size_t i = 0; i < n; ++i) col += a[i][j];
      for (std::size_t i = 0; i < n; ++i) a[i][j] /= col;
    }
  }
  if (attention) *attention = a;
  const Mat mixed = cfg.combine == Combine::kValue
                        ? matmul(a, matmul(tokens, to_mat(params.at(pre + ".wv"))))
                        : matmul(a, q);
  Mat out = matmul(mixed, to_mat(params.at(pre + ".wo")));
  const auto& run = params.running().at(block);
  const Tensor& gamma = params.at(pre + ".gamma");
  const Tensor& beta = params.at(pre + ".beta");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < out[i].size(); ++j) {
      out[i][j] = gamma[j] * (out[i][j] - run.mean[j]) / std::sqrt(run.var[j] + 1e-5) + beta[j] +
                  tokens[i][j];
    }
  }
  return out;
}

Mat reference_fuse(const Mat& f_img, const Mat& f_geo, const Mat& f_pos, std::size_t count,
                   const ModelParams& params) {
  Mat cat(f_img.size());
  for (std::size_t r = 0; r < f_img.size(); ++r) {
    cat[r] = f_img[r];
    cat[r].insert(cat[r].end(), f_geo[r].begin(), f_geo[r].end());
    cat[r].insert(cat[r].end(), f_pos[r].begin(), f_pos[r].end());
  }
  Mat fused = linear(cat, params.at("fuse.weight"), params.at("fuse.bias"));
  for (auto& row : fused)
    for (double& v : row) v = std::max(v, 0.0);
  const bool use_max = params.config().reduction == Reduction::kMax;
  Mat out;
  for (std::size_t g = 0; g < fused.size() / count; ++g) {
    std::vector<double> acc = fused[g * count];
    for (std::size_t r = 1; r < count; ++r) {
      for (std::size_t j = 0; j < acc.size(); ++j) {
        const double v = fused[g * count + r][j];
        acc[j] = use_max ? std::max(acc[j], v) : acc[j] + v;
      }
    }
    if (!use_max)
      for (double& v : acc) v /= static_cast<double>(count);
    out.push_back(std::move(acc));
  }
  return out;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return INFINITY;
    for (std::size_t j = 0; j < a[i].size(); ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  }
  return m;
}

}  // namespace hgt::test
