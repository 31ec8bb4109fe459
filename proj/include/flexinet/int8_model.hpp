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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flexinet/model.hpp"
#include "flexinet/quant.hpp"

namespace flexinet {

/// Integer convolution: int8 weights (zero point 0), int32 bias at scale
/// s_in * s_w, int32 accumulation and fixed-point requantization to `out`.
struct QConvLayer {
  std::string name;
  ConvKind kind = ConvKind::standard;
  Conv2dParams params;
  bool relu = false;
  QTensor weight;
  std::vector<std::int32_t> bias;
  QuantSpec in;
  QuantSpec out;

  /// Scale of the int32 accumulator, s_in * s_w.
  double acc_scale() const { return static_cast<double>(in.scale) * weight.spec.scale; }
  FixedMultiplier requant() const;
};

/// Builds a layer from float (already BN-folded) weight and bias.
QConvLayer make_qconv(std::string name, ConvKind kind, const Conv2dParams& params, bool relu,
                      const TensorF& weight, const TensorF& bias, const QuantSpec& in,
                      const QuantSpec& out);

/// Runs the layer on an int8 activation quantized with layer.in.
QTensor int8_conv(const QConvLayer& layer, const QTensor& x);

/// ReLU(a + b) requantized to `out`, all in integer arithmetic.
QTensor int8_add_relu(const QTensor& a, const QTensor& b, const QuantSpec& out);

/// Global average pool [N, C, H, W] -> [N, C], requantized to `out`.
QTensor int8_global_average_pool(const QTensor& x, const QuantSpec& out);

struct QBlock {
  std::string name;
  QConvLayer dw;
  QConvLayer pw;
  std::optional<QConvLayer> proj;
  QuantSpec out;
};

/// Integer-only network. ResNorm is evaluated in float on the input (and after
/// the stem for post-stem placement) before quantization.
struct QuantizedModel {
  ArchConfig arch;
  float resnorm_lambda = 0.0f;
  QuantSpec input;
  std::vector<QConvLayer> stem;
  std::optional<QuantSpec> post_stem;
  std::vector<QBlock> blocks;
  QuantSpec pool;
  QConvLayer head;  // pointwise with bias on the pooled [N, C, 1, 1] map

  /// Int8 logits [N, 10] quantized with head.out.
  QTensor forward(const TensorF& x) const;
  /// Dequantized logits.
  TensorF predict_logits(const TensorF& x) const;
  /// Stored values: int8 weights, int32 biases and lambda.
  std::size_t stored_values() const;
};

/// Folds BN into each convolution, quantizes weights symmetrically and takes
/// activation specs from the model's observers. A missing observer throws
/// ConfigError naming the activation point.
QuantizedModel convert_int8(const FlexiNet<float>& model);

}  // namespace flexinet
