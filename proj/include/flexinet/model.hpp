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

#include "flexinet/autograd.hpp"
#include "flexinet/ops.hpp"
#include "flexinet/quant.hpp"

namespace flexinet {

enum class ResNormPlacement { none, input, post_stem };

std::string to_string(ResNormPlacement p);
ResNormPlacement parse_resnorm_placement(const std::string& s);

struct StageSpec {
  std::size_t num_blocks = 1;
  std::size_t channels = 16;
  std::size_t first_stride = 1;
};

/// One depthwise-separable residual block. Kernel is fixed at 3 x 3.
struct BlockSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;

  bool has_projection() const { return in_channels != out_channels || stride != 1; }
};

struct ArchConfig {
  std::string name = "custom";
  std::size_t in_channels = 1;
  std::size_t stem_channels = 8;
  std::vector<StageSpec> stages;
  std::size_t num_classes = 10;
  ResNormPlacement resnorm_placement = ResNormPlacement::input;
  double resnorm_lambda_init = 0.1;
  double resnorm_epsilon = 1e-5;

  /// Throws ConfigError for empty stages, strides outside {1, 2}, shrinking
  /// channel counts, or a class count other than 10.
  void validate() const;
  std::vector<BlockSpec> blocks() const;
};

/// Shipped layouts sized to the sm1..sm4 parameter budgets: "sm-a" .. "sm-d".
ArchConfig reference_config(const std::string& name);
std::vector<std::string> reference_config_names();

struct LayerCost {
  std::string name;
  std::size_t params = 0;
  std::size_t macs = 0;
};

struct Complexity {
  std::size_t params = 0;
  std::size_t macs = 0;
  std::vector<LayerCost> layers;
};

// Primitive cost formulas (MACs count multiplies of the convolution only).
LayerCost conv_cost(std::size_t cin, std::size_t cout, std::size_t k, std::size_t out_h,
                    std::size_t out_w, bool bias);
LayerCost depthwise_cost(std::size_t channels, std::size_t k, std::size_t out_h, std::size_t out_w,
                         bool bias);
LayerCost pointwise_cost(std::size_t cin, std::size_t cout, std::size_t out_h, std::size_t out_w,
                         bool bias);

/// Trainable parameters (BatchNorm running statistics excluded) and MACs for a
/// forward pass on one in_f x in_t spectrogram.
Complexity count_params_macs(const ArchConfig& cfg, std::size_t in_f = 256, std::size_t in_t = 64);

constexpr double kBatchNormMomentum = 0.1;
constexpr double kBatchNormEpsilon = 1e-5;

/// lambda * x + IN(x) with a trainable scalar lambda.
template <typename T>
Var<T> res_norm(Tape<T>& tape, const Var<T>& x, const Var<T>& lambda, T epsilon);

/// Test-time comparator: normalizes each (n, f) row over channels and time.
TensorF frequency_instance_norm(const TensorF& x, float epsilon);

enum class ConvKind { standard, depthwise };

/// Convolution without bias followed by BatchNorm and an optional ReLU.
template <typename T>
struct ConvBn {
  std::string name;
  ConvKind kind = ConvKind::standard;
  Conv2dParams params;
  bool relu = true;
  Var<T> weight;
  Var<T> gamma;
  Var<T> beta;
  ops::BatchNormState<T> stats;
};

template <typename T>
struct Block {
  std::string name;
  BlockSpec spec;
  ConvBn<T> dw;
  ConvBn<T> pw;
  std::optional<ConvBn<T>> proj;
};

/// BatchNorm folded into the preceding convolution (eval statistics).
template <typename T>
struct FoldedConv {
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
FoldedConv<T> fold_batch_norm(const ConvBn<T>& layer);

struct ForwardOptions {
  bool training = false;    // batch statistics in BatchNorm, running stats updated
  bool observe = false;     // update activation observers
  bool fake_quant = false;  // folded BatchNorm, fake-quantized weights and activations
};

template <typename T>
struct NamedParam {
  std::string name;
  Var<T> var;
};

/// The network: optional ResNorm, two stride-2 3x3 stem convolutions with BN and
/// ReLU, staged depthwise-separable residual blocks, global average pooling and a
/// pointwise classifier.
template <typename T>
class FlexiNet {
 public:
  FlexiNet(const ArchConfig& cfg, std::uint64_t seed);

  const ArchConfig& config() const { return cfg_; }

  /// x: [N, 1, F, T] -> logits [N, num_classes].
  Var<T> forward(Tape<T>& tape, const Var<T>& x, const ForwardOptions& opt);

  /// Inference convenience: eval-mode logits without recording.
  Tensor<T> predict_logits(const Tensor<T>& x);

  std::vector<NamedParam<T>> parameters();
  /// Parameters plus BatchNorm running statistics, in a fixed order.
  std::vector<std::pair<std::string, Tensor<T>*>> state();
  void zero_grad();
  std::size_t parameter_count();

  const Var<T>& resnorm_lambda() const { return resnorm_lambda_; }
  Var<T>& resnorm_lambda() { return resnorm_lambda_; }
  std::vector<ConvBn<T>>& stem() { return stem_; }
  const std::vector<ConvBn<T>>& stem() const { return stem_; }
  std::vector<Block<T>>& blocks() { return blocks_; }
  const std::vector<Block<T>>& blocks() const { return blocks_; }
  Var<T>& head_weight() { return head_weight_; }
  Var<T>& head_bias() { return head_bias_; }
  const Var<T>& head_weight() const { return head_weight_; }
  const Var<T>& head_bias() const { return head_bias_; }

  /// Activation observers keyed by quantization point name.
  std::map<std::string, Observer>& observers() { return observers_; }
  const std::map<std::string, Observer>& observers() const { return observers_; }
  /// Names of every activation quantization point, in graph order.
  std::vector<std::string> activation_points() const;

 private:
  Var<T> conv_bn(Tape<T>& tape, ConvBn<T>& layer, const Var<T>& x, const ForwardOptions& opt);
  Var<T> activation(Tape<T>& tape, const Var<T>& x, const std::string& point,
                    const ForwardOptions& opt);

  ArchConfig cfg_;
  Var<T> resnorm_lambda_;
  std::vector<ConvBn<T>> stem_;
  std::vector<Block<T>> blocks_;
  Var<T> head_weight_;
  Var<T> head_bias_;
  std::map<std::string, Observer> observers_;
};

extern template class FlexiNet<float>;
extern template class FlexiNet<double>;

}  // namespace flexinet
