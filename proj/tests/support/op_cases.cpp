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

#include "op_cases.hpp"

#include "hgt/ops.hpp"

namespace hgt::test {

namespace {

// Random values bounded away from zero, for kinks at the origin.
Tensor away_from_zero(Shape shape, Rng& rng) {
  Tensor t = random_tensor(std::move(shape), rng);
  for (double& v : t.mutable_data()) v = v < 0 ? v - 0.05 : v + 0.05;
  return t;
}

GradCheck worst(std::initializer_list<GradCheck> checks) {
  GradCheck out;
  for (const GradCheck& c : checks) {
    out.checked += c.checked;
    if (c.max_rel_error >= out.max_rel_error) {
      out.max_rel_error = c.max_rel_error;
      out.worst = c.worst;
    }
  }
  return out;
}

std::vector<OpCase> make_cases() {
  std::vector<OpCase> c;
  auto add = [&](std::string name, std::function<GradCheck(Rng&, std::uint64_t)> fn) {
    c.push_back({std::move(name), std::move(fn)});
  };
  add("matmul", [](Rng& rng, std::uint64_t w) {
    Tensor a = random_tensor({4, 3}, rng), m = random_tensor({3, 5}, rng);
    return check_gradients([&] { return weighted_sum(ops::matmul(a, m), w); }, {a, m});
  });
  add("transpose", [](Rng& rng, std::uint64_t w) {
    Tensor a = random_tensor({4, 3}, rng);
    return check_gradients([&] { return weighted_sum(ops::transpose(a), w); }, {a});
  });
  add("reshape", [](Rng& rng, std::uint64_t w) {
    Tensor a = random_tensor({4, 3}, rng);
    return check_gradients([&] { return weighted_sum(ops::reshape(a, {2, 6}), w); }, {a});
  });
  add("add", [](Rng& rng, std::uint64_t w) {
    Tensor a = random_tensor({4, 3}, rng), b = random_tensor({4, 3}, rng);
    return check_gradients([&] { return weighted_sum(ops::add(a, b), w); }, {a, b});
  });
  add("sub", [](Rng& rng, std::uint64_t w) {
    Tensor a = random_tensor({4, 3}, rng), b = random_tensor({4, 3}, rng);
    return check_gradients([&] { return weighted_sum(ops::sub(a, b), w); }, {a, b});
  });
  add("mul", [](Rng& rng, std::uint64_t w) {
    Tensor a = random_tensor({4, 3}, rng), b = random_tensor({4, 3}, rng);
    return check_gradients([&] { return weighted_sum(ops::mul(a, b), w); }, {a, b});
  });
  add("scale", [](Rng& rng, std::uint64_t w) {
    Tensor a = random_tensor({4, 3}, rng);
    return check_gradients([&] { return weighted_sum(ops::scale(a, -1.7), w); }, {a});
  });
  add("add_rowwise", [](Rng& rng, std::uint64_t w) {
    Tensor a = random_tensor({4, 3}, rng), row = random_tensor({3}, rng);
    return check_gradients([&] { return weighted_sum(ops::add_rowwise(a, row), w); }, {a, row});
  });
  add("broadcast_rows", [](Rng& rng, std::uint64_t w) {
    Tensor row = random_tensor({3}, rng);
    return check_gradients([&] { return weighted_sum(ops::broadcast_rows(row, 5), w); }, {row});
  });
  add("relu", [](Rng& rng, std::uint64_t w) {
    Tensor x = away_from_zero({4, 3}, rng);
    return check_gradients([&] { return weighted_sum(ops::relu(x), w); }, {x});
  });
  add("sum and mean", [](Rng& rng, std::uint64_t) {
    Tensor a = random_tensor({4, 3}, rng), b = random_tensor({4, 3}, rng);
    return check_gradients(
        [&] { return ops::add(ops::sum(ops::mul(a, a)), ops::mean(ops::mul(a, b))); }, {a, b});
  });
  add("reduce_max", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({3, 4, 5}, rng);
    auto axis = [&](std::size_t k) {
      return check_gradients([&] { return weighted_sum(ops::reduce_max(x, k), w); }, {x});
    };
    return worst({axis(0), axis(1), axis(2)});
  });
  add("reduce_mean", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({3, 4, 5}, rng);
    auto axis = [&](std::size_t k) {
      return check_gradients([&] { return weighted_sum(ops::reduce_mean(x, k), w); }, {x});
    };
    return worst({axis(0), axis(1), axis(2)});
  });
  add("concat", [](Rng& rng, std::uint64_t w) {
    Tensor a = random_tensor({4, 3}, rng), c = random_tensor({2, 3}, rng), d = random_tensor({4, 2}, rng);
    return check_gradients(
        [&] {
          const Tensor rows[] = {a, c};
          const Tensor cols[] = {a, d};
          return ops::add(weighted_sum(ops::concat(rows, 0), w),
                          weighted_sum(ops::concat(cols, 1), w + 1));
        },
        {a, c, d});
  });
  add("row_softmax", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({4, 6}, rng, -3, 3);
    return check_gradients([&] { return weighted_sum(ops::row_softmax(x), w); }, {x});
  });
  add("column_normalize", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({4, 6}, rng, 0.1, 1.0);
    return check_gradients([&] { return weighted_sum(ops::column_normalize(x), w); }, {x});
  });
  add("normalize_rows", [](Rng& rng, std::uint64_t w) {
    Tensor x = away_from_zero({5, 3}, rng);
    const double fb[3] = {0, 0, -1};
    return check_gradients([&] { return weighted_sum(ops::normalize_rows(x, 1e-8, fb), w); }, {x});
  });
  add("gather_rows", [](Rng& rng, std::uint64_t w) {
    Tensor a = random_tensor({4, 3}, rng);
    const std::size_t idx[] = {3, 0, 3, 1};
    return check_gradients([&] { return weighted_sum(ops::gather_rows(a, idx), w); }, {a});
  });
  add("gather_pixels", [](Rng& rng, std::uint64_t w) {
    Tensor f = random_tensor({3, 4, 5}, rng);
    const std::size_t px[] = {0, 19, 7, 7, 12};
    return check_gradients([&] { return weighted_sum(ops::gather_pixels(f, px), w); }, {f});
  });
  add("conv2d", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({2, 6, 6}, rng), k = random_tensor({3, 2, 3, 3}, rng);
    Tensor x7 = random_tensor({2, 7, 7}, rng);
    return worst({check_gradients([&] { return weighted_sum(ops::conv2d(x, k, 1, 1), w); }, {x, k}),
                  check_gradients([&] { return weighted_sum(ops::conv2d(x7, k, 2, 0), w); }, {x7, k})});
  });
  add("add_channel_bias", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({3, 2, 2}, rng), bias = random_tensor({3}, rng);
    return check_gradients([&] { return weighted_sum(ops::add_channel_bias(x, bias), w); }, {x, bias});
  });
  add("max_pool2x", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({2, 4, 6}, rng);
    return check_gradients([&] { return weighted_sum(ops::max_pool2x(x), w); }, {x});
  });
  add("upsample2x", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({2, 3, 2}, rng);
    return check_gradients([&] { return weighted_sum(ops::upsample2x(x), w); }, {x});
  });
  add("linear", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({4, 3}, rng), m = random_tensor({3, 5}, rng), bias = random_tensor({5}, rng);
    return check_gradients([&] { return weighted_sum(ops::linear(x, m, bias), w); }, {x, m, bias});
  });
  add("mean_squared_row_distance", [](Rng& rng, std::uint64_t) {
    Tensor a = random_tensor({4, 3}, rng), b = random_tensor({4, 3}, rng);
    return check_gradients([&] { return ops::mean_squared_row_distance(a, b); }, {a, b});
  });
  add("batchnorm train", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({8, 4}, rng), g = random_tensor({4}, rng), be = random_tensor({4}, rng);
    auto run = ops::RunningStats::identity(4);
    return check_gradients(
        [&] { return weighted_sum(ops::batchnorm(x, g, be, run, ops::BatchNormMode::kTrain), w); },
        {x, g, be});
  });
  add("batchnorm eval", [](Rng& rng, std::uint64_t w) {
    Tensor x = random_tensor({8, 4}, rng), g = random_tensor({4}, rng), be = random_tensor({4}, rng);
    ops::RunningStats run{{0.1, -0.2, 0.3, 0.0}, {0.5, 1.5, 2.0, 0.7}};
    return check_gradients(
        [&] { return weighted_sum(ops::batchnorm(x, g, be, run, ops::BatchNormMode::kEval), w); },
        {x, g, be});
  });
  return c;
}

}  // namespace

Tensor weighted_sum(const Tensor& t, std::uint64_t seed) {
  Rng rng(seed);
  Tensor r = random_tensor(t.shape(), rng, -1.0, 1.0, false);
  return ops::sum(ops::mul(t, r));
}

const std::vector<OpCase>& op_cases() {
  static const std::vector<OpCase> cases = make_cases();
  return cases;
}

}  // namespace hgt::test
