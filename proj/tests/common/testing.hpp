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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "flexinet/autograd.hpp"
#include "flexinet/ops.hpp"
#include "flexinet/tensor.hpp"

namespace flexinet::testing {

// Typed null bias for the convolution templates.
template <typename T>
inline const Tensor<T>* const no_bias = nullptr;

template <typename T>
Tensor<T> random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(shape);
  for (auto& v : t.storage()) v = static_cast<T>(u(rng));
  return t;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

// Norm-wise relative error ||a - n|| / max(||a|| + ||n||, 1e-12).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nn), 1e-12);
}

using LossFn = std::function<Var<double>(Tape<double>&, std::vector<Var<double>>&)>;

// Reduces an op output to a scalar through fixed random weights so that
// symmetric cancellations (normalized outputs sum to zero) do not hide errors.
inline Var<double> weighted_sum(Tape<double>& tape, const Var<double>& y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Var<double> w(random_tensor<double>(y.shape(), rng));
  return ops::sum(tape, ops::mul(tape, y, w));
}

// Largest relative error between backward and central differences over all inputs.
inline double gradient_check(std::vector<Var<double>> inputs, const LossFn& loss_fn, double h = 1e-6) {
  Tape<double> tape;
  for (auto& v : inputs) v.zero_grad();
  tape.backward(loss_fn(tape, inputs));

  double worst = 0.0;
  for (auto& v : inputs) {
    if (!v.requires_grad()) continue;
    std::vector<double> analytic(v.grad().storage().begin(), v.grad().storage().end());
    std::vector<double> numeric(v.value().size());
    for (std::size_t i = 0; i < v.value().size(); ++i) {
      const double keep = v.value()[i];
      v.value_mut()[i] = keep + h;
      Tape<double> tp;
      const double up = loss_fn(tp, inputs).value()[0];
      v.value_mut()[i] = keep - h;
      Tape<double> tm;
      const double down = loss_fn(tm, inputs).value()[0];
      v.value_mut()[i] = keep;
      numeric[i] = (up - down) / (2 * h);
    }
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("flexinet-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace flexinet::testing
