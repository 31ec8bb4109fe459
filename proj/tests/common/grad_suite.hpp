/**
 * Copyright 2026 The FlexiNet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Finite-difference checks of every differentiable operation, in double.
// Each check runs on at least five random shapes and reports the worst
// norm-wise relative error.

#include <map>
#include <string>
#include <vector>

#include "flexinet/distill.hpp"
#include "flexinet/model.hpp"
#include "flexinet/ops.hpp"
#include "flexinet/quant.hpp"
#include "testing.hpp"

namespace flexinet::testing {

struct GradResult {
  std::string op;
  std::size_t shapes = 0;
  double worst = 0.0;
};

inline Var<double> param(const Shape& s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return Var<double>::parameter(random_tensor<double>(s, rng, lo, hi));
}

inline GradResult check_conv(std::mt19937_64& rng) {
  const std::vector<std::tuple<Shape, std::size_t, std::size_t, std::size_t, std::size_t>> cases = {
      {{1, 1, 5, 5}, 2, 3, 1, 1}, {{2, 3, 6, 4}, 4, 3, 2, 1}, {{1, 2, 7, 7}, 3, 1, 1, 0},
      {{2, 2, 5, 6}, 2, 3, 2, 0}, {{1, 3, 4, 5}, 2, 3, 1, 1}, {{3, 1, 6, 6}, 2, 3, 2, 1}};
  GradResult r{"conv2d"};
  for (const auto& [xs, co, k, s, pad] : cases) {
    std::vector<Var<double>> in = {param(xs, rng), param({co, xs[1], k, k}, rng), param({co}, rng)};
    const Conv2dParams p{s, s, pad, pad};
    r.worst = std::max(r.worst, gradient_check(in, [&](Tape<double>& t, std::vector<Var<double>>& v) {
      return weighted_sum(t, ops::conv2d(t, v[0], v[1], v[2], p));
    }));
    ++r.shapes;
  }
  return r;
}

inline GradResult check_depthwise(std::mt19937_64& rng) {
  const std::vector<std::tuple<Shape, std::size_t, std::size_t>> cases = {
      {{1, 2, 5, 5}, 1, 1}, {{2, 3, 6, 7}, 2, 1}, {{1, 4, 4, 4}, 1, 0},
      {{2, 1, 7, 5}, 2, 0}, {{1, 5, 3, 6}, 1, 1}, {{3, 2, 8, 8}, 2, 1}};
  GradResult r{"depthwise_conv2d"};
  for (const auto& [xs, s, pad] : cases) {
    std::vector<Var<double>> in = {param(xs, rng), param({xs[1], 1, 3, 3}, rng), param({xs[1]}, rng)};
    const Conv2dParams p{s, s, pad, pad};
    r.worst = std::max(r.worst, gradient_check(in, [&](Tape<double>& t, std::vector<Var<double>>& v) {
      return weighted_sum(t, ops::depthwise_conv2d(t, v[0], v[1], v[2], p));
    }));
    ++r.shapes;
  }
  return r;
}

inline GradResult check_pointwise(std::mt19937_64& rng) {
  const std::vector<std::pair<Shape, std::size_t>> cases = {
      {{1, 2, 3, 3}, 3}, {{2, 4, 2, 5}, 2}, {{1, 1, 4, 4}, 5}, {{3, 3, 2, 2}, 3}, {{2, 5, 3, 1}, 4}};
  GradResult r{"pointwise_conv2d"};
  for (const auto& [xs, co] : cases) {
    std::vector<Var<double>> in = {param(xs, rng), param({co, xs[1], 1, 1}, rng), param({co}, rng)};
    r.worst = std::max(r.worst, gradient_check(in, [&](Tape<double>& t, std::vector<Var<double>>& v) {
      return weighted_sum(t, ops::pointwise_conv2d(t, v[0], v[1], v[2]));
    }));
    ++r.shapes;
  }
  return r;
}

inline GradResult check_batch_norm(std::mt19937_64& rng) {
  const std::vector<Shape> cases = {{2, 2, 3, 3}, {4, 1, 2, 5}, {3, 3, 2, 2}, {2, 4, 4, 1}, {5, 2, 1, 3}};
  GradResult r{"batch_norm"};
  for (const auto& xs : cases) {
    std::vector<Var<double>> in = {param(xs, rng), param({xs[1]}, rng, 0.5, 1.5), param({xs[1]}, rng)};
    ops::BatchNormState<double> st{TensorD({xs[1]}, 0.0), TensorD({xs[1]}, 1.0)};
    r.worst = std::max(r.worst, gradient_check(in, [&](Tape<double>& t, std::vector<Var<double>>& v) {
      return weighted_sum(t, ops::batch_norm(t, v[0], v[1], v[2], st, true, 0.1, 1e-5));
    }));
    ++r.shapes;
  }
  return r;
}

inline GradResult check_instance_norm(std::mt19937_64& rng) {
  const std::vector<Shape> cases = {{1, 1, 3, 4}, {2, 2, 3, 3}, {1, 3, 5, 2}, {3, 1, 2, 6}, {2, 3, 4, 4}};
  GradResult r{"instance_norm"};
  for (const auto& xs : cases) {
    std::vector<Var<double>> in = {param(xs, rng)};
    r.worst = std::max(r.worst, gradient_check(in, [&](Tape<double>& t, std::vector<Var<double>>& v) {
      return weighted_sum(t, ops::instance_norm(t, v[0], 1e-5));
    }));
    ++r.shapes;
  }
  return r;
}

inline GradResult check_res_norm(std::mt19937_64& rng) {
  const std::vector<Shape> cases = {{1, 1, 4, 4}, {2, 1, 3, 5}, {1, 2, 6, 3}, {3, 1, 2, 2}, {2, 2, 4, 5}};
  GradResult r{"res_norm (x and lambda)"};
  for (const auto& xs : cases) {
    std::vector<Var<double>> in = {param(xs, rng), param({1}, rng, 0.05, 0.5)};
    r.worst = std::max(r.worst, gradient_check(in, [&](Tape<double>& t, std::vector<Var<double>>& v) {
      return weighted_sum(t, res_norm(t, v[0], v[1], 1e-5));
    }));
    ++r.shapes;
  }
  return r;
}

inline GradResult check_kd_loss(std::mt19937_64& rng) {
  const std::vector<std::tuple<std::size_t, double, double>> cases = {
      {1, 0.5, 2.0}, {3, 0.0, 1.0}, {4, 1.0, 3.0}, {2, 0.3, 4.0}, {5, 0.7, 1.5}};
  GradResult r{"kd_loss"};
  for (const auto& [n, lambda, temp] : cases) {
    std::vector<Var<double>> in = {param({n, 10}, rng, -3.0, 3.0)};
    const auto teacher = random_tensor<double>({n, 10}, rng, -4.0, 4.0);
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng() % 10);
    r.worst = std::max(r.worst, gradient_check(in, [&](Tape<double>& t, std::vector<Var<double>>& v) {
      return kd_loss(t, v[0], labels, teacher, lambda, temp);
    }));
    ++r.shapes;
  }
  return r;
}

// The straight-through estimator is not the derivative of the staircase, so the
// check compares the analytic gradient with the finite-difference derivative of
// the downstream loss evaluated at fq(x), masked by the representable range.
inline GradResult check_fake_quant(std::mt19937_64& rng) {
  const std::vector<Shape> cases = {{1, 1, 3, 3}, {2, 2, 2, 4}, {1, 3, 5, 1}, {4, 1, 2, 2}, {2, 1, 6, 3}};
  GradResult r{"fake_quant (STE interior)"};
  for (const auto& xs : cases) {
    // Range narrower than the data so both interior and saturated elements occur.
    const QuantSpec q = affine_spec(-0.8, 0.6);
    Var<double> x = param(xs, rng);
    const auto w = random_tensor<double>(xs, rng);
    Tape<double> tape;
    const auto y = ops::fake_quant(tape, x, q);
    const auto loss = ops::sum(tape, ops::mul(tape, ops::mul(tape, y, y), Var<double>(w)));
    tape.backward(loss);

    const double h = 1e-6;
    std::vector<double> analytic(x.grad().storage().begin(), x.grad().storage().end());
    std::vector<double> numeric(x.value().size());
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      const double yi = y.value()[i];
      const double up = w[i] * (yi + h) * (yi + h), down = w[i] * (yi - h) * (yi - h);
      const double xi = x.value()[i];
      const bool inside = xi >= q.lo() && xi <= q.hi();
      numeric[i] = inside ? (up - down) / (2 * h) : 0.0;
    }
    r.worst = std::max(r.worst, relative_error(analytic, numeric));
    ++r.shapes;
  }
  return r;
}

inline GradResult check_misc(std::mt19937_64& rng) {
  GradResult r{"relu/add/mean/var/softmax/log/pool/cross_entropy"};
  const std::vector<Shape> cases = {{1, 2, 3, 3}, {2, 1, 4, 2}, {2, 3, 2, 2}, {1, 1, 5, 5}, {3, 2, 2, 3}};
  for (const auto& xs : cases) {
    std::vector<Var<double>> in = {param(xs, rng), param(xs, rng)};
    r.worst = std::max(r.worst, gradient_check(in, [&](Tape<double>& t, std::vector<Var<double>>& v) {
      auto a = ops::relu(t, ops::add(t, v[0], ops::scale(t, v[1], 0.5)));
      auto m = ops::mean(t, a, {2, 3});
      auto s = ops::var(t, v[1], {1, 3});
      auto pooled = ops::global_average_pool(t, ops::mul(t, v[0], v[1]));
      auto sm = ops::softmax(t, pooled);
      auto l = ops::log(t, ops::add(t, sm, Var<double>(TensorD(sm.shape(), 0.1))));
      std::vector<int> labels(xs[0], 0);
      auto ce = ops::softmax_cross_entropy(t, pooled, labels);
      return ops::add(t, ops::add(t, weighted_sum(t, m), weighted_sum(t, s)),
                      ops::add(t, weighted_sum(t, l), ce));
    }));
    ++r.shapes;
  }
  return r;
}

inline std::vector<GradResult> run_gradient_suite(std::uint64_t seed = 2026) {
  std::mt19937_64 rng(seed);
  return {check_conv(rng),       check_depthwise(rng),     check_pointwise(rng),
          check_batch_norm(rng), check_instance_norm(rng), check_res_norm(rng),
          check_kd_loss(rng),    check_fake_quant(rng),    check_misc(rng)};
}

}  // namespace flexinet::testing
