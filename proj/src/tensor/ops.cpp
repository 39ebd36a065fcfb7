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

#include "hgt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "op_support.hpp"

namespace hgt::ops {

using detail::gemm_acc;
using detail::grad_of;
using detail::Impl;
using detail::record;
using detail::require_rank;
using detail::require_same_shape;
using detail::wants_grad;

namespace {

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree, " +
                         shape_string(a.shape()) + " . " +
                         shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros({m, p});
  gemm_acc(a.data().data(), b.data().data(), out.impl()->data.data(), m, k, p);
  if (wants_grad({&a, &b})) {
    Impl *ai = a.impl(), *bi = b.impl(), *oi = out.impl();
    record(out, {a, b}, [ai, bi, oi, m, k, p] {
      const double* dc = oi->grad.data();
      if (double* da = grad_of(ai)) {
        // dA = dC . B^T
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double* brow = bi->data.data() + kk * p;
            const double* dcrow = dc + i * p;
            double acc = 0.0;
            for (std::size_t j = 0; j < p; ++j) acc += dcrow[j] * brow[j];
            da[i * k + kk] += acc;
          }
        }
      }
      if (double* db = grad_of(bi)) {
        // dB = A^T . dC
        for (std::size_t i = 0; i < m; ++i) {
          const double* arow = ai->data.data() + i * k;
          const double* dcrow = dc + i * p;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            double* dbrow = db + kk * p;
            for (std::size_t j = 0; j < p; ++j) dbrow[j] += av * dcrow[j];
          }
        }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  Tensor out = Tensor::zeros({c, r});
  auto src = a.data();
  double* dst = out.impl()->data.data();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) dst[j * r + i] = src[i * c + j];
  }
  if (wants_grad({&a})) {
    Impl *ai = a.impl(), *oi = out.impl();
    record(out, {a}, [ai, oi, r, c] {
      double* da = grad_of(ai);
      const double* g = oi->grad.data();
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) da[i * c + j] += g[j * r + i];
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(a.shape()) +
                         " as " + shape_string(shape));
  }
  Tensor out = Tensor::from(std::move(shape),
                            std::vector<double>(a.data().begin(), a.data().end()));
  if (wants_grad({&a})) {
    Impl *ai = a.impl(), *oi = out.impl();
    record(out, {a}, [ai, oi] {
      double* da = grad_of(ai);
      for (std::size_t i = 0; i < oi->grad.size(); ++i) da[i] += oi->grad[i];
    });
  }
  return out;
}

namespace {

template <typename Fwd, typename BwdA, typename BwdB>
Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* name,
                          Fwd fwd, BwdA bwd_a, BwdB bwd_b) {
  require_same_shape(a, b, name);
  Tensor out = Tensor::zeros(a.shape());
  auto x = a.data();
  auto y = b.data();
  double* o = out.impl()->data.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = fwd(x[i], y[i]);
  if (wants_grad({&a, &b})) {
    Impl *ai = a.impl(), *bi = b.impl(), *oi = out.impl();
    record(out, {a, b}, [ai, bi, oi, bwd_a, bwd_b] {
      const double* g = oi->grad.data();
      const std::size_t n = oi->grad.size();
      if (double* da = grad_of(ai)) {
        for (std::size_t i = 0; i < n; ++i)
          da[i] += bwd_a(g[i], ai->data[i], bi->data[i]);
      }
      if (double* db = grad_of(bi)) {
        for (std::size_t i = 0; i < n; ++i)
          db[i] += bwd_b(g[i], ai->data[i], bi->data[i]);
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out = Tensor::zeros(a.shape());
  auto x = a.data();
  double* o = out.impl()->data.data();
  for (std::size_t i = 0; i < x.size(); ++i) o[i] = x[i] * factor;
  if (wants_grad({&a})) {
    Impl *ai = a.impl(), *oi = out.impl();
    record(out, {a}, [ai, oi, factor] {
      double* da = grad_of(ai);
      for (std::size_t i = 0; i < oi->grad.size(); ++i)
        da[i] += oi->grad[i] * factor;
    });
  }
  return out;
}

Tensor add_rowwise(const Tensor& a, const Tensor& bias) {
  require_rank(a, 2, "add_rowwise");
  require_rank(bias, 1, "add_rowwise");
  const std::size_t n = a.dim(0), d = a.dim(1);
  if (bias.dim(0) != d) {
    throw DimensionError("add_rowwise: bias " + shape_string(bias.shape()) +
                         " does not match " + shape_string(a.shape()));
  }
  Tensor out = Tensor::zeros(a.shape());
  double* o = out.impl()->data.data();
  auto x = a.data();
  auto b = bias.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) o[i * d + j] = x[i * d + j] + b[j];
  if (wants_grad({&a, &bias})) {
    Impl *ai = a.impl(), *bi = bias.impl(), *oi = out.impl();
    record(out, {a, bias}, [ai, bi, oi, n, d] {
      const double* g = oi->grad.data();
      if (double* da = grad_of(ai)) {
        for (std::size_t i = 0; i < n * d; ++i) da[i] += g[i];
      }
      if (double* db = grad_of(bi)) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < d; ++j) db[j] += g[i * d + j];
      }
    });
  }
  return out;
}

Tensor broadcast_rows(const Tensor& row, std::size_t count) {
  require_rank(row, 1, "broadcast_rows");
  const std::size_t d = row.dim(0);
  Tensor out = Tensor::zeros({count, d});
  double* o = out.impl()->data.data();
  auto r = row.data();
  for (std::size_t i = 0; i < count; ++i)
    std::copy(r.begin(), r.end(), o + i * d);
  if (wants_grad({&row})) {
    Impl *ri = row.impl(), *oi = out.impl();
    record(out, {row}, [ri, oi, count, d] {
      double* dr = grad_of(ri);
      for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < d; ++j) dr[j] += oi->grad[i * d + j];
    });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto in = x.data();
  double* o = out.impl()->data.data();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
  if (wants_grad({&x})) {
    Impl *xi = x.impl(), *oi = out.impl();
    record(out, {x}, [xi, oi] {
      double* dx = grad_of(xi);
      for (std::size_t i = 0; i < oi->grad.size(); ++i) {
        if (xi->data[i] > 0.0) dx[i] += oi->grad[i];
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::scalar(acc);
  if (wants_grad({&x})) {
    Impl *xi = x.impl(), *oi = out.impl();
    record(out, {x}, [xi, oi] {
      double* dx = grad_of(xi);
      const double g = oi->grad[0];
      for (std::size_t i = 0; i < xi->data.size(); ++i) dx[i] += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor reduce_max(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("reduce_max: axis out of range for " +
                         shape_string(x.shape()));
  }
  const AxisSplit s = split_at(x.shape(), axis);
  if (s.n == 0) throw DimensionError("reduce_max over an empty axis");
  Tensor out = Tensor::zeros(drop_axis(x.shape(), axis));
  std::vector<std::size_t> argmax(s.outer * s.inner);
  auto in = x.data();
  double* o = out.impl()->data.data();
  for (std::size_t a = 0; a < s.outer; ++a) {
    for (std::size_t c = 0; c < s.inner; ++c) {
      std::size_t best = 0;
      double best_v = in[a * s.n * s.inner + c];
      for (std::size_t b = 1; b < s.n; ++b) {
        const double v = in[(a * s.n + b) * s.inner + c];
        if (v > best_v) {
          best_v = v;
          best = b;
        }
      }
      o[a * s.inner + c] = best_v;
      argmax[a * s.inner + c] = best;
    }
  }
  if (wants_grad({&x})) {
    Impl *xi = x.impl(), *oi = out.impl();
    record(out, {x}, [xi, oi, s, argmax = std::move(argmax)] {
      double* dx = grad_of(xi);
      for (std::size_t a = 0; a < s.outer; ++a) {
        for (std::size_t c = 0; c < s.inner; ++c) {
          const std::size_t b = argmax[a * s.inner + c];
          dx[(a * s.n + b) * s.inner + c] += oi->grad[a * s.inner + c];
        }
      }
    });
  }
  return out;
}

Tensor reduce_mean(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("reduce_mean: axis out of range for " +
                         shape_string(x.shape()));
  }
  const AxisSplit s = split_at(x.shape(), axis);
  if (s.n == 0) throw DimensionError("reduce_mean over an empty axis");
  Tensor out = Tensor::zeros(drop_axis(x.shape(), axis));
  auto in = x.data();
  double* o = out.impl()->data.data();
  const double inv = 1.0 / static_cast<double>(s.n);
  for (std::size_t a = 0; a < s.outer; ++a) {
    for (std::size_t b = 0; b < s.n; ++b) {
      for (std::size_t c = 0; c < s.inner; ++c)
        o[a * s.inner + c] += in[(a * s.n + b) * s.inner + c];
    }
    for (std::size_t c = 0; c < s.inner; ++c) o[a * s.inner + c] *= inv;
  }
  if (wants_grad({&x})) {
    Impl *xi = x.impl(), *oi = out.impl();
    record(out, {x}, [xi, oi, s, inv] {
      double* dx = grad_of(xi);
      for (std::size_t a = 0; a < s.outer; ++a)
        for (std::size_t b = 0; b < s.n; ++b)
          for (std::size_t c = 0; c < s.inner; ++c)
            dx[(a * s.n + b) * s.inner + c] += oi->grad[a * s.inner + c] * inv;
    });
  }
  return out;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis out of range for " +
                         shape_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) ok = false;
    }
    if (!ok) {
      throw DimensionError("concat: incompatible shapes " +
                           shape_string(first) + " and " + shape_string(s));
    }
    out_shape[axis] += s[axis];
  }
  const AxisSplit total = split_at(out_shape, axis);
  Tensor out = Tensor::zeros(out_shape);
  double* o = out.impl()->data.data();
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const std::size_t block = p.dim(axis) * total.inner;
    auto in = p.data();
    for (std::size_t a = 0; a < total.outer; ++a) {
      std::copy(in.begin() + a * block, in.begin() + (a + 1) * block,
                o + a * total.n * total.inner + offset * total.inner);
    }
    offset += p.dim(axis);
  }
  bool any = false;
  for (const Tensor& p : parts) any = any || wants_grad({&p});
  if (any) {
    std::vector<Impl*> impls;
    for (const Tensor& p : parts) impls.push_back(p.impl());
    Impl* oi = out.impl();
    record(out, std::vector<Tensor>(parts.begin(), parts.end()),
           [impls, oi, offsets, total, axis] {
             for (std::size_t k = 0; k < impls.size(); ++k) {
               double* dp = grad_of(impls[k]);
               if (!dp) continue;
               const std::size_t block = impls[k]->shape[axis] * total.inner;
               for (std::size_t a = 0; a < total.outer; ++a) {
                 const double* g = oi->grad.data() +
                                   a * total.n * total.inner +
                                   offsets[k] * total.inner;
                 for (std::size_t i = 0; i < block; ++i)
                   dp[a * block + i] += g[i];
               }
             }
           });
  }
  return out;
}

Tensor row_softmax(const Tensor& x) {
  require_rank(x, 2, "row_softmax");
  const std::size_t n = x.dim(0), m = x.dim(1);
  Tensor out = Tensor::zeros(x.shape());
  auto in = x.data();
  double* o = out.impl()->data.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = in.data() + i * m;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      o[i * m + j] = std::exp(row[j] - mx);
      z += o[i * m + j];
    }
    for (std::size_t j = 0; j < m; ++j) o[i * m + j] /= z;
  }
  if (wants_grad({&x})) {
    Impl *xi = x.impl(), *oi = out.impl();
    record(out, {x}, [xi, oi, n, m] {
      double* dx = grad_of(xi);
      const double* y = oi->data.data();
      const double* g = oi->grad.data();
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j) dot += g[i * m + j] * y[i * m + j];
        for (std::size_t j = 0; j < m; ++j)
          dx[i * m + j] += y[i * m + j] * (g[i * m + j] - dot);
      }
    });
  }
  return out;
}

Tensor column_normalize(const Tensor& x) {
  require_rank(x, 2, "column_normalize");
  constexpr double kOffset = 1e-9;
  const std::size_t n = x.dim(0), m = x.dim(1);
  std::vector<double> denom(m, kOffset);
  auto in = x.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) denom[j] += in[i * m + j];
  Tensor out = Tensor::zeros(x.shape());
  double* o = out.impl()->data.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) o[i * m + j] = in[i * m + j] / denom[j];
  if (wants_grad({&x})) {
    Impl *xi = x.impl(), *oi = out.impl();
    record(out, {x}, [xi, oi, n, m, denom = std::move(denom)] {
      double* dx = grad_of(xi);
      const double* g = oi->grad.data();
      std::vector<double> col_dot(m, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
          col_dot[j] += g[i * m + j] * xi->data[i * m + j];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
          dx[i * m + j] += g[i * m + j] / denom[j] -
                           col_dot[j] / (denom[j] * denom[j]);
    });
  }
  return out;
}

Tensor normalize_rows(const Tensor& x, double min_norm,
                      std::span<const double> fallback,
                      std::vector<std::uint8_t>* guarded) {
  require_rank(x, 2, "normalize_rows");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (fallback.size() != d) {
    throw DimensionError("normalize_rows: fallback has " +
                         std::to_string(fallback.size()) + " entries, rows have " +
                         std::to_string(d));
  }
  Tensor out = Tensor::zeros(x.shape());
  std::vector<double> norms(n);
  std::vector<std::uint8_t> mask(n, 0);
  auto in = x.data();
  double* o = out.impl()->data.data();
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += in[i * d + j] * in[i * d + j];
    norms[i] = std::sqrt(sq);
    if (norms[i] < min_norm) {
      mask[i] = 1;
      for (std::size_t j = 0; j < d; ++j) o[i * d + j] = fallback[j];
    } else {
      for (std::size_t j = 0; j < d; ++j) o[i * d + j] = in[i * d + j] / norms[i];
    }
  }
  if (guarded) *guarded = mask;
  if (wants_grad({&x})) {
    Impl *xi = x.impl(), *oi = out.impl();
    record(out, {x}, [xi, oi, n, d, norms = std::move(norms),
                      mask = std::move(mask)] {
      double* dx = grad_of(xi);
      const double* y = oi->data.data();
      const double* g = oi->grad.data();
      for (std::size_t i = 0; i < n; ++i) {
        if (mask[i]) continue;
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += g[i * d + j] * y[i * d + j];
        for (std::size_t j = 0; j < d; ++j)
          dx[i * d + j] += (g[i * d + j] - y[i * d + j] * dot) / norms[i];
      }
    });
  }
  return out;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_rank(x, 2, "gather_rows");
  const std::size_t r = x.dim(0), d = x.dim(1);
  Tensor out = Tensor::zeros({rows.size(), d});
  double* o = out.impl()->data.data();
  auto in = x.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= r) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[i]) +
                           " out of range for " + shape_string(x.shape()));
    }
    std::copy(in.begin() + rows[i] * d, in.begin() + (rows[i] + 1) * d,
              o + i * d);
  }
  if (wants_grad({&x})) {
    Impl *xi = x.impl(), *oi = out.impl();
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    record(out, {x}, [xi, oi, d, idx = std::move(idx)] {
      double* dx = grad_of(xi);
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
          dx[idx[i] * d + j] += oi->grad[i * d + j];
    });
  }
  return out;
}

Tensor gather_pixels(const Tensor& fmap, std::span<const std::size_t> pixels) {
  require_rank(fmap, 3, "gather_pixels");
  const std::size_t c = fmap.dim(0);
  const std::size_t hw = fmap.dim(1) * fmap.dim(2);
  Tensor out = Tensor::zeros({pixels.size(), c});
  double* o = out.impl()->data.data();
  auto in = fmap.data();
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i] >= hw) {
      throw DimensionError("gather_pixels: pixel " + std::to_string(pixels[i]) +
                           " outside map " + shape_string(fmap.shape()));
    }
    for (std::size_t ch = 0; ch < c; ++ch) o[i * c + ch] = in[ch * hw + pixels[i]];
  }
  if (wants_grad({&fmap})) {
    Impl *fi = fmap.impl(), *oi = out.impl();
    std::vector<std::size_t> idx(pixels.begin(), pixels.end());
    record(out, {fmap}, [fi, oi, c, hw, idx = std::move(idx)] {
      double* df = grad_of(fi);
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t ch = 0; ch < c; ++ch)
          df[ch * hw + idx[i]] += oi->grad[i * c + ch];
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add_rowwise(matmul(x, weight), bias);
}

Tensor mean_squared_row_distance(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "mean_squared_row_distance");
  require_same_shape(a, b, "mean_squared_row_distance");
  const std::size_t n = a.dim(0);
  if (n == 0) throw ContractError("mean_squared_row_distance of zero rows");
  double acc = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    acc += diff * diff;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  Tensor out = Tensor::scalar(acc * inv_n);
  if (wants_grad({&a, &b})) {
    Impl *ai = a.impl(), *bi = b.impl(), *oi = out.impl();
    record(out, {a, b}, [ai, bi, oi, inv_n] {
      const double g = oi->grad[0] * 2.0 * inv_n;
      double* da = grad_of(ai);
      double* db = grad_of(bi);
      for (std::size_t i = 0; i < ai->data.size(); ++i) {
        const double diff = ai->data[i] - bi->data[i];
        if (da) da[i] += g * diff;
        if (db) db[i] -= g * diff;
      }
    });
  }
  return out;
}

RunningStats RunningStats::identity(std::size_t features) {
  return RunningStats{std::vector<double>(features, 0.0),
                      std::vector<double>(features, 1.0)};
}

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 const RunningStats& running, BatchNormMode mode,
                 BatchMoments* observed) {
  require_rank(x, 2, "batchnorm");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw DimensionError("batchnorm: affine parameters " +
                         shape_string(gamma.shape()) + "/" +
                         shape_string(beta.shape()) + " do not match " +
                         shape_string(x.shape()));
  }
  std::vector<double> mu(d, 0.0), var(d, 0.0);
  auto in = x.data();
  if (mode == BatchNormMode::kTrain) {
    if (n < 2) {
      throw DegenerateError("batchnorm: train mode needs at least 2 rows, got " +
                            std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) mu[j] += in[i * d + j];
    for (std::size_t j = 0; j < d; ++j) mu[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double c = in[i * d + j] - mu[j];
        var[j] += c * c;
      }
    for (std::size_t j = 0; j < d; ++j) var[j] /= static_cast<double>(n);
    if (observed) *observed = BatchMoments{mu, var, n};
  } else {
    if (running.mean.size() != d || running.var.size() != d) {
      throw DimensionError("batchnorm: running statistics have " +
                           std::to_string(running.mean.size()) +
                           " features, input has " + std::to_string(d));
    }
    mu = running.mean;
    var = running.var;
  }
  std::vector<double> inv_std(d);
  for (std::size_t j = 0; j < d; ++j)
    inv_std[j] = 1.0 / std::sqrt(var[j] + kBatchNormEpsilon);
  std::vector<double> xhat(n * d);
  Tensor out = Tensor::zeros(x.shape());
  double* o = out.impl()->data.data();
  auto gm = gamma.data();
  auto bt = beta.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (in[i * d + j] - mu[j]) * inv_std[j];
      o[i * d + j] = gm[j] * xhat[i * d + j] + bt[j];
    }
  if (wants_grad({&x, &gamma, &beta})) {
    Impl *xi = x.impl(), *gi = gamma.impl(), *bi = beta.impl(),
         *oi = out.impl();
    const bool train = mode == BatchNormMode::kTrain;
    record(out, {x, gamma, beta},
           [xi, gi, bi, oi, n, d, train, inv_std = std::move(inv_std),
            xhat = std::move(xhat)] {
             const double* g = oi->grad.data();
             if (double* dg = grad_of(gi)) {
               for (std::size_t i = 0; i < n; ++i)
                 for (std::size_t j = 0; j < d; ++j)
                   dg[j] += g[i * d + j] * xhat[i * d + j];
             }
             if (double* db = grad_of(bi)) {
               for (std::size_t i = 0; i < n; ++i)
                 for (std::size_t j = 0; j < d; ++j) db[j] += g[i * d + j];
             }
             double* dx = grad_of(xi);
             if (!dx) return;
             const double* gm = gi->data.data();
             if (!train) {
               for (std::size_t i = 0; i < n; ++i)
                 for (std::size_t j = 0; j < d; ++j)
                   dx[i * d + j] += g[i * d + j] * gm[j] * inv_std[j];
               return;
             }
             const double inv_n = 1.0 / static_cast<double>(n);
             for (std::size_t j = 0; j < d; ++j) {
               double sum_g = 0.0, sum_gx = 0.0;
               for (std::size_t i = 0; i < n; ++i) {
                 sum_g += g[i * d + j];
                 sum_gx += g[i * d + j] * xhat[i * d + j];
               }
               const double k = gm[j] * inv_std[j] * inv_n;
               for (std::size_t i = 0; i < n; ++i) {
                 dx[i * d + j] += k * (static_cast<double>(n) * g[i * d + j] -
                                       sum_g - xhat[i * d + j] * sum_gx);
               }
             }
           });
  }
  return out;
}

void update_running_stats(RunningStats& running, const BatchMoments& batch,
                          double momentum) {
  const std::size_t d = batch.mean.size();
  if (running.mean.size() != d || running.var.size() != d) {
    throw DimensionError("update_running_stats: feature count mismatch");
  }
  const double unbias =
      batch.count > 1 ? static_cast<double>(batch.count) /
                            static_cast<double>(batch.count - 1)
                      : 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    running.mean[j] = (1.0 - momentum) * running.mean[j] + momentum * batch.mean[j];
    running.var[j] =
        (1.0 - momentum) * running.var[j] + momentum * batch.var[j] * unbias;
  }
}

}  // namespace hgt::ops
