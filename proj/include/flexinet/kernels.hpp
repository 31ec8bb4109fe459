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

#include <cstddef>

#include "flexinet/tensor.hpp"

namespace flexinet {

struct Conv2dParams {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
};

/// Output extent of a strided, zero-padded window; throws when the window does not fit.
std::size_t conv_out_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad,
                          const char* op);

namespace kernels {

// Forward and backward kernels. All accumulate taps in row-major order
// (input channel, kernel row, kernel column) and add the bias last.

/// x: [N, Cin, H, W], w: [Cout, Cin, Kh, Kw], bias: [Cout] or nullptr.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                         const Conv2dParams& p);

/// Any of the output pointers may be null to skip that gradient.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out,
                     const Conv2dParams& p, Tensor<T>* grad_x, Tensor<T>* grad_w,
                     Tensor<T>* grad_b);

/// x: [N, C, H, W], w: [C, 1, Kh, Kw], bias: [C] or nullptr.
template <typename T>
Tensor<T> depthwise_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                            const Conv2dParams& p);

template <typename T>
void depthwise_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out,
                        const Conv2dParams& p, Tensor<T>* grad_x, Tensor<T>* grad_w,
                        Tensor<T>* grad_b);

}  // namespace kernels
}  // namespace flexinet
