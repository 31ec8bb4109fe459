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

// Direct nested-loop reference kernels. Slow and obvious on purpose: these are
// the oracles the optimized kernels are checked against and are never called on
// the training path.

#include <cstddef>
#include <vector>

#include "flexinet/kernels.hpp"
#include "flexinet/tensor.hpp"

namespace flexinet::reference {

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                 const Conv2dParams& p) {
  const auto d = dims4(x, "reference conv2d");
  const std::size_t co = w.dim(0), ci = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (ci != d.c) throw DimensionError("reference conv2d: channel mismatch");
  const std::size_t ho = conv_out_size(d.f, kh, p.stride_h, p.pad_h, "reference conv2d");
  const std::size_t wo = conv_out_size(d.t, kw, p.stride_w, p.pad_w, "reference conv2d");
  Tensor<T> out({d.n, co, ho, wo});
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t y = 0; y < ho; ++y)
        for (std::size_t x0 = 0; x0 < wo; ++x0) {
          T acc = 0;
          for (std::size_t c = 0; c < ci; ++c)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j) {
                const long iy = static_cast<long>(y * p.stride_h + i) - static_cast<long>(p.pad_h);
                const long ix = static_cast<long>(x0 * p.stride_w + j) - static_cast<long>(p.pad_w);
                const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(d.f) &&
                                    ix < static_cast<long>(d.t);
                const T v = inside ? x.at(n, c, static_cast<std::size_t>(iy),
                                          static_cast<std::size_t>(ix))
                                   : T(0);
                acc += v * w[((o * ci + c) * kh + i) * kw + j];
              }
          if (bias) acc += (*bias)[o];
          out.at(n, o, y, x0) = acc;
        }
  return out;
}

/// Expands a [C, 1, Kh, Kw] depthwise filter bank into the equivalent
/// block-diagonal [C, C, Kh, Kw] dense weight.
template <typename T>
Tensor<T> expand_depthwise(const Tensor<T>& w) {
  const std::size_t c = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  Tensor<T> full({c, c, kh, kw});
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < kh * kw; ++i) full[(k * c + k) * kh * kw + i] = w[k * kh * kw + i];
  return full;
}

template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                           const Conv2dParams& p) {
  const auto d = dims4(x, "reference depthwise");
  const std::size_t kh = w.dim(2), kw = w.dim(3);
  const std::size_t ho = conv_out_size(d.f, kh, p.stride_h, p.pad_h, "reference depthwise");
  const std::size_t wo = conv_out_size(d.t, kw, p.stride_w, p.pad_w, "reference depthwise");
  Tensor<T> out({d.n, d.c, ho, wo});
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t y = 0; y < ho; ++y)
        for (std::size_t x0 = 0; x0 < wo; ++x0) {
          T acc = 0;
          for (std::size_t i = 0; i < kh; ++i)
            for (std::size_t j = 0; j < kw; ++j) {
              const long iy = static_cast<long>(y * p.stride_h + i) - static_cast<long>(p.pad_h);
              const long ix = static_cast<long>(x0 * p.stride_w + j) - static_cast<long>(p.pad_w);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(d.f) || ix >= static_cast<long>(d.t))
                continue;
              acc += x.at(n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) *
                     w[(c * kh + i) * kw + j];
            }
          if (bias) acc += (*bias)[c];
          out.at(n, c, y, x0) = acc;
        }
  return out;
}

/// out[n, o, f, t] = sum_c w[o, c] * x[n, c, f, t] + b[o]
template <typename T>
Tensor<T> pointwise_conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias) {
  const auto d = dims4(x, "reference pointwise");
  const std::size_t co = w.dim(0);
  Tensor<T> out({d.n, co, d.f, d.t});
  for (std::size_t n = 0; n < d.n; ++n)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t f = 0; f < d.f; ++f)
        for (std::size_t t = 0; t < d.t; ++t) {
          T acc = 0;
          for (std::size_t c = 0; c < d.c; ++c) acc += w[o * d.c + c] * x.at(n, c, f, t);
          if (bias) acc += (*bias)[o];
          out.at(n, o, f, t) = acc;
        }
  return out;
}

/// Dense weight equivalent to depthwise (w_dw, no bias) followed by pointwise (w_pw).
template <typename T>
Tensor<T> compose_separable(const Tensor<T>& w_dw, const Tensor<T>& w_pw) {
  const std::size_t c = w_dw.dim(0), kh = w_dw.dim(2), kw = w_dw.dim(3), co = w_pw.dim(0);
  Tensor<T> full({co, c, kh, kw});
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t i = 0; i < kh * kw; ++i)
        full[(o * c + k) * kh * kw + i] = w_pw[o * c + k] * w_dw[k * kh * kw + i];
  return full;
}

/// O(n * m) full linear convolution, accumulated in double.
inline std::vector<double> direct_convolution(const std::vector<float>& x, const std::vector<float>& h) {
  if (x.empty() || h.empty()) return {};
  std::vector<double> out(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) out[i + j] += static_cast<double>(x[i]) * h[j];
  return out;
}

}  // namespace flexinet::reference
