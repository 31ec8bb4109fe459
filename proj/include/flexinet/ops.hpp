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

#include <vector>

#include "flexinet/autograd.hpp"
#include "flexinet/kernels.hpp"

// Differentiable operations. Every op records its backward rule on the tape when
// any input requires a gradient. Shapes must match exactly: the only implicit
// expansion is the per-channel bias of the convolutions and scalar scaling.
namespace flexinet::ops {

/// Pass an undefined Var as `b` for no bias.
template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& w, const Var<T>& b,
              const Conv2dParams& p);

template <typename T>
Var<T> depthwise_conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& w, const Var<T>& b,
                        const Conv2dParams& p);

/// w: [Cout, Cin, 1, 1]. Per-pixel linear map across channels.
template <typename T>
Var<T> pointwise_conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& w, const Var<T>& b);

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> mul(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

/// x * s for a constant s.
template <typename T>
Var<T> scale(Tape<T>& tape, const Var<T>& x, T s);

/// lambda * x where lambda is a single-element tensor.
template <typename T>
Var<T> scale_by(Tape<T>& tape, const Var<T>& x, const Var<T>& lambda);

/// Sum of all elements, shape [1].
template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x);

/// Mean over `axes`; reduced axes are dropped (all axes reduced -> shape [1]).
template <typename T>
Var<T> mean(Tape<T>& tape, const Var<T>& x, std::vector<std::size_t> axes);

/// Population variance over `axes`.
template <typename T>
Var<T> var(Tape<T>& tape, const Var<T>& x, std::vector<std::size_t> axes);

/// Softmax along the last axis of a rank-2 [N, K] tensor.
template <typename T>
Var<T> softmax(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> log(Tape<T>& tape, const Var<T>& x);

/// [N, C, F, T] -> [N, C].
template <typename T>
Var<T> global_average_pool(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> reshape(Tape<T>& tape, const Var<T>& x, Shape shape);

/// Per-(n, c) normalization over the F x T plane with population variance.
template <typename T>
Var<T> instance_norm(Tape<T>& tape, const Var<T>& x, T epsilon);

/// Mean and population variance per (n, c); each tensor has shape [N, C].
template <typename T>
struct NormStats {
  Tensor<T> mean;
  Tensor<T> var;
};

template <typename T>
NormStats<T> instance_norm_stats(const Tensor<T>& x);

template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

/// Per-channel normalization. Training mode uses batch statistics and updates
/// `state` with exponential momentum (unbiased variance); eval mode uses `state`.
template <typename T>
Var<T> batch_norm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  BatchNormState<T>& state, bool training, T momentum, T epsilon);

/// Mean softmax cross-entropy of [N, K] logits against integer labels.
template <typename T>
Var<T> softmax_cross_entropy(Tape<T>& tape, const Var<T>& logits, const std::vector<int>& labels);

}  // namespace flexinet::ops
