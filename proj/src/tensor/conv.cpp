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
#include <limits>

#include "hgt/ops.hpp"
#include "op_support.hpp"

namespace hgt::ops {

using detail::gemm_acc;
using detail::grad_of;
using detail::Impl;
using detail::record;
using detail::require_rank;
using detail::wants_grad;

namespace {

struct ConvGeometry {
  std::size_t c, h, w, f, k, stride, pad, oh, ow;
};

// cols[(ch * k + ky) * k + kx][oy * ow + ox] = padded input sample.
std::vector<double> im2col(const double* in, const ConvGeometry& g) {
  const std::size_t patch = g.c * g.k * g.k;
  const std::size_t npix = g.oh * g.ow;
  std::vector<double> cols(patch * npix, 0.0);
  for (std::size_t ch = 0; ch < g.c; ++ch) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        double* row = cols.data() + ((ch * g.k + ky) * g.k + kx) * npix;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) -
                          static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          const double* src = in + (ch * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) -
                            static_cast<long>(g.pad);
            if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
            row[oy * g.ow + ox] = src[ix];
          }
        }
      }
    }
  }
  return cols;
}

void col2im_acc(const double* cols, const ConvGeometry& g, double* in_grad) {
  const std::size_t npix = g.oh * g.ow;
  for (std::size_t ch = 0; ch < g.c; ++ch) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const double* row = cols + ((ch * g.k + ky) * g.k + kx) * npix;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) -
                          static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          double* dst = in_grad + (ch * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) -
                            static_cast<long>(g.pad);
            if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
            dst[ix] += row[oy * g.ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride,
              std::size_t padding) {
  require_rank(input, 3, "conv2d");
  require_rank(kernel, 4, "conv2d");
  ConvGeometry g{};
  g.c = input.dim(0);
  g.h = input.dim(1);
  g.w = input.dim(2);
  g.f = kernel.dim(0);
  g.k = kernel.dim(2);
  g.stride = stride;
  g.pad = padding;
  if (kernel.dim(1) != g.c || kernel.dim(3) != g.k) {
    throw DimensionError("conv2d: kernel " + shape_string(kernel.shape()) +
                         " does not fit input " + shape_string(input.shape()));
  }
  if (g.k % 2 == 0) {
    throw ConfigError("conv2d: kernel size must be odd, got " +
                      std::to_string(g.k));
  }
  if (stride == 0) throw ConfigError("conv2d: stride must be >= 1");
  const long span_h = static_cast<long>(g.h + 2 * padding) - static_cast<long>(g.k);
  const long span_w = static_cast<long>(g.w + 2 * padding) - static_cast<long>(g.k);
  if (span_h < 0 || span_w < 0 || span_h % static_cast<long>(stride) != 0 ||
      span_w % static_cast<long>(stride) != 0) {
    throw ConfigError("conv2d: output size is not integral for input " +
                      shape_string(input.shape()) + ", kernel " +
                      std::to_string(g.k) + ", stride " + std::to_string(stride) +
                      ", padding " + std::to_string(padding));
  }
  g.oh = static_cast<std::size_t>(span_h) / stride + 1;
  g.ow = static_cast<std::size_t>(span_w) / stride + 1;

  std::vector<double> cols = im2col(input.data().data(), g);
  const std::size_t patch = g.c * g.k * g.k;
  const std::size_t npix = g.oh * g.ow;
  Tensor out = Tensor::zeros({g.f, g.oh, g.ow});
  gemm_acc(kernel.data().data(), cols.data(), out.impl()->data.data(), g.f,
           patch, npix);

  if (wants_grad({&input, &kernel})) {
    Impl *ii = input.impl(), *ki = kernel.impl(), *oi = out.impl();
    record(out, {input, kernel},
           [ii, ki, oi, g, patch, npix, cols = std::move(cols)] {
             const double* dout = oi->grad.data();
             if (double* dk = grad_of(ki)) {
               for (std::size_t f = 0; f < g.f; ++f) {
                 const double* drow = dout + f * npix;
                 for (std::size_t q = 0; q < patch; ++q) {
                   const double* crow = cols.data() + q * npix;
                   double acc = 0.0;
                   for (std::size_t p = 0; p < npix; ++p) acc += drow[p] * crow[p];
                   dk[f * patch + q] += acc;
                 }
               }
             }
             if (double* di = grad_of(ii)) {
               std::vector<double> dcols(patch * npix, 0.0);
               const double* kd = ki->data.data();
               for (std::size_t f = 0; f < g.f; ++f) {
                 const double* drow = dout + f * npix;
                 for (std::size_t q = 0; q < patch; ++q) {
                   const double kv = kd[f * patch + q];
                   if (kv == 0.0) continue;
                   double* dc = dcols.data() + q * npix;
                   for (std::size_t p = 0; p < npix; ++p) dc[p] += kv * drow[p];
                 }
               }
               col2im_acc(dcols.data(), g, di);
             }
           });
  }
  return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 3, "add_channel_bias");
  require_rank(bias, 1, "add_channel_bias");
  const std::size_t c = x.dim(0);
  const std::size_t hw = x.dim(1) * x.dim(2);
  if (bias.dim(0) != c) {
    throw DimensionError("add_channel_bias: bias " + shape_string(bias.shape()) +
                         " does not match " + shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros(x.shape());
  double* o = out.impl()->data.data();
  auto in = x.data();
  auto b = bias.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t p = 0; p < hw; ++p) o[ch * hw + p] = in[ch * hw + p] + b[ch];
  if (wants_grad({&x, &bias})) {
    Impl *xi = x.impl(), *bi = bias.impl(), *oi = out.impl();
    record(out, {x, bias}, [xi, bi, oi, c, hw] {
      const double* g = oi->grad.data();
      if (double* dx = grad_of(xi)) {
        for (std::size_t i = 0; i < c * hw; ++i) dx[i] += g[i];
      }
      if (double* db = grad_of(bi)) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          double acc = 0.0;
          for (std::size_t p = 0; p < hw; ++p) acc += g[ch * hw + p];
          db[ch] += acc;
        }
      }
    });
  }
  return out;
}

Tensor max_pool2x(const Tensor& x) {
  require_rank(x, 3, "max_pool2x");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ConfigError("max_pool2x: spatial size " + shape_string(x.shape()) +
                      " is not even");
  }
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out = Tensor::zeros({c, oh, ow});
  std::vector<std::size_t> argmax(c * oh * ow);
  auto in = x.data();
  double* o = out.impl()->data.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (ch * h + 2 * oy) * w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (ch * h + 2 * oy + dy) * w + 2 * ox + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t oidx = (ch * oh + oy) * ow + ox;
        o[oidx] = in[best];
        argmax[oidx] = best;
      }
    }
  }
  if (wants_grad({&x})) {
    Impl *xi = x.impl(), *oi = out.impl();
    record(out, {x}, [xi, oi, argmax = std::move(argmax)] {
      double* dx = grad_of(xi);
      for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += oi->grad[i];
    });
  }
  return out;
}

Tensor upsample2x(const Tensor& x) {
  require_rank(x, 3, "upsample2x");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = 2 * h, ow = 2 * w;
  Tensor out = Tensor::zeros({c, oh, ow});
  auto in = x.data();
  double* o = out.impl()->data.data();
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx)
        o[(ch * oh + y) * ow + xx] = in[(ch * h + y / 2) * w + xx / 2];
  if (wants_grad({&x})) {
    Impl *xi = x.impl(), *oi = out.impl();
    record(out, {x}, [xi, oi, c, h, w] {
      double* dx = grad_of(xi);
      const std::size_t oh = 2 * h, ow = 2 * w;
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < oh; ++y)
          for (std::size_t xx = 0; xx < ow; ++xx)
            dx[(ch * h + y / 2) * w + xx / 2] += oi->grad[(ch * oh + y) * ow + xx];
    });
  }
  return out;
}

}  // namespace hgt::ops
