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

#include "flexinet/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flexinet/errors.hpp"

namespace flexinet {

void QuantSpec::validate() const {
  if (!(scale > 0.0f) || !std::isfinite(scale)) {
    throw ConfigError("quant: scale must be positive and finite, got " + std::to_string(scale));
  }
  if (zero_point < kQMin || zero_point > kQMax) {
    throw ConfigError("quant: zero_point " + std::to_string(zero_point) + " outside int8 range");
  }
}

QuantSpec affine_spec(double min, double max) {
  if (!(min <= max)) throw ConfigError("quant: observed min exceeds max");
  QuantSpec q;
  q.min = static_cast<float>(min);
  q.max = static_cast<float>(max);
  const double lo = std::min(min, 0.0), hi = std::max(max, 0.0);
  const double scale = (hi - lo) / 255.0;
  if (!(scale > 0.0)) return q;  // all-zero tensor: unit scale, zero point 0
  q.scale = static_cast<float>(scale);
  const double zp = std::round(kQMin - lo / static_cast<double>(q.scale));
  q.zero_point = static_cast<std::int32_t>(std::clamp(zp, double(kQMin), double(kQMax)));
  return q;
}

QuantSpec symmetric_spec(double max_abs) {
  QuantSpec q;
  q.min = static_cast<float>(-max_abs);
  q.max = static_cast<float>(max_abs);
  if (max_abs > 0.0) q.scale = static_cast<float>(max_abs / 127.0);
  return q;
}

template <typename T>
QuantSpec symmetric_spec_for(const Tensor<T>& w) {
  double m = 0.0;
  for (auto v : w.data()) m = std::max(m, std::abs(static_cast<double>(v)));
  return symmetric_spec(m);
}

template QuantSpec symmetric_spec_for(const Tensor<float>&);
template QuantSpec symmetric_spec_for(const Tensor<double>&);

std::int8_t quantize_value(double v, const QuantSpec& q) {
  const double r = std::round(v / static_cast<double>(q.scale)) + q.zero_point;
  return static_cast<std::int8_t>(std::clamp(r, double(kQMin), double(kQMax)));
}

QTensor quantize(const TensorF& t, const QuantSpec& q) {
  q.validate();
  QTensor out{t.shape(), std::vector<std::int8_t>(t.size()), q};
  for (std::size_t i = 0; i < t.size(); ++i) out.data[i] = quantize_value(t[i], q);
  return out;
}

TensorF dequantize(const QTensor& q) {
  q.spec.validate();
  TensorF out(q.shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dequantize_value(q.data[i], q.spec);
  return out;
}

template <typename T>
void Observer::update(const Tensor<T>& t) {
  if (t.empty()) return;
  const auto [mn, mx] = std::minmax_element(t.data().begin(), t.data().end());
  update_range(static_cast<double>(*mn), static_cast<double>(*mx));
}

template void Observer::update(const Tensor<float>&);
template void Observer::update(const Tensor<double>&);

void Observer::update_range(double min, double max) {
  if (!initialized_) {
    min_ = min;
    max_ = max;
    initialized_ = true;
    return;
  }
  min_ = std::min(min_, min);
  max_ = std::max(max_, max);
}

QuantSpec Observer::spec() const {
  if (!initialized_) throw ConfigError("quant: observer has not seen any data");
  return affine_spec(min_, max_);
}

FixedMultiplier FixedMultiplier::from_real(double real) {
  if (!(real >= 0.0) || !std::isfinite(real)) {
    throw ConfigError("quant: requantization factor must be finite and non-negative");
  }
  FixedMultiplier f;
  if (real == 0.0) return f;
  int exp = 0;
  const double frac = std::frexp(real, &exp);  // real = frac * 2^exp, frac in [0.5, 1)
  auto m = static_cast<std::int64_t>(std::round(frac * 2147483648.0));
  if (m == (std::int64_t{1} << 31)) {
    m /= 2;
    ++exp;
  }
  f.multiplier = static_cast<std::int32_t>(m);
  f.shift = 31 - exp;
  return f;
}

std::int64_t FixedMultiplier::apply(std::int64_t acc) const {
  if (multiplier == 0) return 0;
  const std::int64_t prod = acc * multiplier;
  if (shift <= 0) return prod << (-shift);
  if (shift >= 63) return 0;
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  return prod >= 0 ? (prod + half) >> shift : -((-prod + half) >> shift);
}

namespace ops {

template <typename T>
Var<T> fake_quant(Tape<T>& tape, const Var<T>& x, const QuantSpec& q) {
  q.validate();
  const double lo = q.lo(), hi = q.hi();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<T>(dequantize_value(quantize_value(static_cast<double>(x.value()[i]), q), q));
  }
  auto xn = x.node();
  return tape.record("fake_quant", {x}, std::move(out), [xn, lo, hi](const Tensor<T>& g) {
    Tensor<T> gx(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = static_cast<double>(xn->value[i]);
      gx[i] = (v >= lo && v <= hi) ? g[i] : T(0);
    }
    accumulate_grad(xn, gx);
  });
}

template Var<float> fake_quant(Tape<float>&, const Var<float>&, const QuantSpec&);
template Var<double> fake_quant(Tape<double>&, const Var<double>&, const QuantSpec&);

}  // namespace ops
}  // namespace flexinet
