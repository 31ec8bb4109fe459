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

#include <cstdint>
#include <span>
#include <vector>

#include "flexinet/autograd.hpp"
#include "flexinet/tensor.hpp"

namespace flexinet {

constexpr int kQMin = -128;
constexpr int kQMax = 127;

/// Per-tensor affine int8 parameters: real = scale * (q - zero_point).
struct QuantSpec {
  float scale = 1.0f;
  std::int32_t zero_point = 0;
  float min = 0.0f;  // observed range
  float max = 0.0f;

  /// Smallest and largest representable real values.
  double lo() const { return static_cast<double>(scale) * (kQMin - zero_point); }
  double hi() const { return static_cast<double>(scale) * (kQMax - zero_point); }
  void validate() const;
};

/// Affine spec for activations. The range is widened to contain zero so that
/// zero is exactly representable; scale = (max - min) / 255.
QuantSpec affine_spec(double min, double max);

/// Symmetric spec for weights: zero_point = 0, scale = max|w| / 127.
QuantSpec symmetric_spec(double max_abs);

template <typename T>
QuantSpec symmetric_spec_for(const Tensor<T>& w);

/// Round-half-away-from-zero then saturate to [-128, 127].
std::int8_t quantize_value(double v, const QuantSpec& q);
inline float dequantize_value(std::int8_t q8, const QuantSpec& q) {
  return q.scale * static_cast<float>(static_cast<int>(q8) - q.zero_point);
}

struct QTensor {
  Shape shape;
  std::vector<std::int8_t> data;
  QuantSpec spec;
};

QTensor quantize(const TensorF& t, const QuantSpec& q);
TensorF dequantize(const QTensor& q);

/// Running min-max observer (no smoothing).
class Observer {
 public:
  template <typename T>
  void update(const Tensor<T>& t);
  void update_range(double min, double max);

  bool initialized() const { return initialized_; }
  double min() const { return min_; }
  double max() const { return max_; }
  QuantSpec spec() const;

 private:
  bool initialized_ = false;
  double min_ = 0.0;
  double max_ = 0.0;
};

/// Integer multiplier and right shift approximating a positive real factor,
/// applied with round-half-away-from-zero. Used for requantization.
struct FixedMultiplier {
  std::int32_t multiplier = 0;  // in [2^30, 2^31) for nonzero factors
  int shift = 0;                // total right shift applied to the 64-bit product

  static FixedMultiplier from_real(double real);
  std::int64_t apply(std::int64_t acc) const;
};

namespace ops {

/// Simulated quantization: forward = dequantize(quantize(x)); backward passes the
/// gradient where x lies in the representable range and zeroes it elsewhere.
template <typename T>
Var<T> fake_quant(Tape<T>& tape, const Var<T>& x, const QuantSpec& q);

}  // namespace ops
}  // namespace flexinet
