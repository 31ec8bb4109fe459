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

#include "flexinet/model.hpp"

#include <cmath>
#include <random>

#include "flexinet/errors.hpp"

namespace flexinet {

std::string to_string(ResNormPlacement p) {
  switch (p) {
    case ResNormPlacement::none: return "none";
    case ResNormPlacement::input: return "input";
    case ResNormPlacement::post_stem: return "post-stem";
  }
  return "none";
}

ResNormPlacement parse_resnorm_placement(const std::string& s) {
  if (s == "none") return ResNormPlacement::none;
  if (s == "input") return ResNormPlacement::input;
  if (s == "post-stem" || s == "post_stem") return ResNormPlacement::post_stem;
  throw ConfigError("arch: unknown resnorm_placement '" + s + "' (expected input | post-stem | none)");
}

void ArchConfig::validate() const {
  if (num_classes != 10) throw ConfigError("arch: num_classes must be 10");
  if (in_channels == 0 || stem_channels == 0) throw ConfigError("arch: channel counts must be positive");
  if (stages.empty()) throw ConfigError("arch: at least one stage is required");
  std::size_t prev = stem_channels;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    const std::string where = "arch: stage " + std::to_string(i);
    if (s.num_blocks == 0) throw ConfigError(where + " has no blocks");
    if (s.first_stride != 1 && s.first_stride != 2) throw ConfigError(where + " stride must be 1 or 2");
    if (s.channels < prev) throw ConfigError(where + " decreases the channel count");
    prev = s.channels;
  }
  if (!(resnorm_epsilon > 0.0)) throw ConfigError("arch: resnorm epsilon must be positive");
}

std::vector<BlockSpec> ArchConfig::blocks() const {
  std::vector<BlockSpec> out;
  std::size_t c = stem_channels;
  for (const auto& s : stages) {
    for (std::size_t i = 0; i < s.num_blocks; ++i) {
      out.push_back({c, s.channels, i == 0 ? s.first_stride : 1});
      c = s.channels;
    }
  }
  return out;
}

ArchConfig reference_config(const std::string& name) {
  ArchConfig c;
  c.name = name;
  if (name == "sm-a") {
    c.stem_channels = 8;
    c.stages = {{2, 16, 1}, {2, 32, 2}, {2, 56, 2}};
  } else if (name == "sm-b") {
    c.stem_channels = 16;
    c.stages = {{2, 32, 1}, {2, 56, 2}, {2, 80, 2}};
  } else if (name == "sm-c") {
    c.stem_channels = 16;
    c.stages = {{2, 32, 1}, {3, 72, 2}, {2, 112, 2}};
  } else if (name == "sm-d") {
    c.stem_channels = 24;
    c.stages = {{2, 48, 1}, {3, 96, 2}, {3, 160, 2}};
  } else {
    throw ConfigError("arch: unknown reference config '" + name + "'");
  }
  return c;
}

std::vector<std::string> reference_config_names() { return {"sm-a", "sm-b", "sm-c", "sm-d"}; }

LayerCost conv_cost(std::size_t cin, std::size_t cout, std::size_t k, std::size_t out_h,
                    std::size_t out_w, bool bias) {
  LayerCost c;
  c.params = cin * cout * k * k + (bias ? cout : 0);
  c.macs = cin * cout * k * k * out_h * out_w;
  return c;
}

LayerCost depthwise_cost(std::size_t channels, std::size_t k, std::size_t out_h, std::size_t out_w,
                         bool bias) {
  LayerCost c;
  c.params = channels * k * k + (bias ? channels : 0);
  c.macs = k * k * channels * out_h * out_w;
  return c;
}

LayerCost pointwise_cost(std::size_t cin, std::size_t cout, std::size_t out_h, std::size_t out_w,
                         bool bias) {
  return conv_cost(cin, cout, 1, out_h, out_w, bias);
}

Complexity count_params_macs(const ArchConfig& cfg, std::size_t in_f, std::size_t in_t) {
  cfg.validate();
  Complexity total;
  auto push = [&](LayerCost c, std::string name, std::size_t bn_channels) {
    c.name = std::move(name);
    c.params += 2 * bn_channels;
    total.params += c.params;
    total.macs += c.macs;
    total.layers.push_back(std::move(c));
  };
  auto out = [](std::size_t in, std::size_t stride) { return (in - 1) / stride + 1; };
  if (cfg.resnorm_placement != ResNormPlacement::none) push(LayerCost{"", 1, 0}, "resnorm", 0);
  std::size_t h = out(in_f, 2), w = out(in_t, 2);
  push(conv_cost(cfg.in_channels, cfg.stem_channels, 3, h, w, false), "stem.0", cfg.stem_channels);
  h = out(h, 2);
  w = out(w, 2);
  push(conv_cost(cfg.stem_channels, cfg.stem_channels, 3, h, w, false), "stem.1", cfg.stem_channels);
  const auto blocks = cfg.blocks();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const std::string name = "blocks." + std::to_string(i);
    h = out(h, b.stride);
    w = out(w, b.stride);
    push(depthwise_cost(b.in_channels, 3, h, w, false), name + ".dw", b.in_channels);
    push(pointwise_cost(b.in_channels, b.out_channels, h, w, false), name + ".pw", b.out_channels);
    if (b.has_projection()) {
      push(pointwise_cost(b.in_channels, b.out_channels, h, w, false), name + ".proj", b.out_channels);
    }
  }
  const std::size_t c_last = blocks.back().out_channels;
  push(pointwise_cost(c_last, cfg.num_classes, 1, 1, true), "head", 0);
  return total;
}

template <typename T>
Var<T> res_norm(Tape<T>& tape, const Var<T>& x, const Var<T>& lambda, T epsilon) {
  return ops::add(tape, ops::scale_by(tape, x, lambda), ops::instance_norm(tape, x, epsilon));
}

template Var<float> res_norm(Tape<float>&, const Var<float>&, const Var<float>&, float);
template Var<double> res_norm(Tape<double>&, const Var<double>&, const Var<double>&, double);

TensorF frequency_instance_norm(const TensorF& x, float epsilon) {
  const auto d = dims4(x, "frequency_instance_norm");
  TensorF out(x.shape());
  const double count = static_cast<double>(d.c * d.t);
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t f = 0; f < d.f; ++f) {
      double s = 0, sq = 0;
      for (std::size_t c = 0; c < d.c; ++c)
        for (std::size_t t = 0; t < d.t; ++t) s += x.at(n, c, f, t);
      const double mu = s / count;
      for (std::size_t c = 0; c < d.c; ++c)
        for (std::size_t t = 0; t < d.t; ++t) sq += (x.at(n, c, f, t) - mu) * (x.at(n, c, f, t) - mu);
      const double is = 1.0 / std::sqrt(sq / count + epsilon);
      for (std::size_t c = 0; c < d.c; ++c)
        for (std::size_t t = 0; t < d.t; ++t)
          out.at(n, c, f, t) = static_cast<float>((x.at(n, c, f, t) - mu) * is);
    }
  }
  return out;
}

template <typename T>
FoldedConv<T> fold_batch_norm(const ConvBn<T>& layer) {
  const auto& w = layer.weight.value();
  const std::size_t co = w.dim(0), per = w.size() / co;
  FoldedConv<T> f{Tensor<T>(w.shape()), Tensor<T>({co})};
  for (std::size_t o = 0; o < co; ++o) {
    const T s = layer.gamma.value()[o] /
                std::sqrt(layer.stats.running_var[o] + static_cast<T>(kBatchNormEpsilon));
    for (std::size_t k = 0; k < per; ++k) f.weight[o * per + k] = w[o * per + k] * s;
    f.bias[o] = layer.beta.value()[o] - layer.stats.running_mean[o] * s;
  }
  return f;
}

template FoldedConv<float> fold_batch_norm(const ConvBn<float>&);
template FoldedConv<double> fold_batch_norm(const ConvBn<double>&);

namespace {

template <typename T>
std::vector<T> bn_inv_std(const ConvBn<T>& layer) {
  std::vector<T> is(layer.gamma.value().size());
  for (std::size_t o = 0; o < is.size(); ++o) {
    is[o] = T(1) / std::sqrt(layer.stats.running_var[o] + static_cast<T>(kBatchNormEpsilon));
  }
  return is;
}

// Differentiable BatchNorm folding with frozen running statistics.
template <typename T>
std::pair<Var<T>, Var<T>> fold_bn_op(Tape<T>& tape, const ConvBn<T>& layer) {
  const auto is = bn_inv_std(layer);
  const auto mean = layer.stats.running_mean;
  const FoldedConv<T> f = fold_batch_norm(layer);
  auto wn = layer.weight.node(), gn = layer.gamma.node(), bn = layer.beta.node();
  const std::size_t co = is.size(), per = layer.weight.value().size() / co;
  Var<T> wf = tape.record("fold_weight", {layer.weight, layer.gamma}, f.weight,
                          [wn, gn, is, co, per](const Tensor<T>& g) {
                            if (wn->requires_grad) {
                              Tensor<T> gw(wn->value.shape());
                              for (std::size_t o = 0; o < co; ++o) {
                                const T s = gn->value[o] * is[o];
                                for (std::size_t k = 0; k < per; ++k) gw[o * per + k] = g[o * per + k] * s;
                              }
                              accumulate_grad(wn, gw);
                            }
                            if (gn->requires_grad) {
                              Tensor<T> gg({co});
                              for (std::size_t o = 0; o < co; ++o) {
                                T acc = 0;
                                for (std::size_t k = 0; k < per; ++k) acc += g[o * per + k] * wn->value[o * per + k];
                                gg[o] = acc * is[o];
                              }
                              accumulate_grad(gn, gg);
                            }
                          });
  Var<T> bf = tape.record("fold_bias", {layer.gamma, layer.beta}, f.bias,
                          [gn, bn, is, mean, co](const Tensor<T>& g) {
                            if (gn->requires_grad) {
                              Tensor<T> gg({co});
                              for (std::size_t o = 0; o < co; ++o) gg[o] = -g[o] * mean[o] * is[o];
                              accumulate_grad(gn, gg);
                            }
                            accumulate_grad(bn, g);
                          });
  return {wf, bf};
}

template <typename T>
Tensor<T> kaiming_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> t(std::move(shape));
  for (auto& v : t.storage()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
ConvBn<T> make_conv_bn(std::string name, ConvKind kind, std::size_t cin, std::size_t cout,
                       std::size_t k, std::size_t stride, bool relu, std::mt19937_64& rng) {
  ConvBn<T> l;
  l.name = std::move(name);
  l.kind = kind;
  l.relu = relu;
  const std::size_t pad = k / 2;
  l.params = Conv2dParams{stride, stride, pad, pad};
  if (kind == ConvKind::depthwise) {
    l.weight = Var<T>::parameter(kaiming_uniform<T>({cin, 1, k, k}, k * k, rng));
  } else {
    l.weight = Var<T>::parameter(kaiming_uniform<T>({cout, cin, k, k}, cin * k * k, rng));
  }
  l.gamma = Var<T>::parameter(Tensor<T>({cout}, T(1)));
  l.beta = Var<T>::parameter(Tensor<T>({cout}, T(0)));
  l.stats.running_mean = Tensor<T>({cout}, T(0));
  l.stats.running_var = Tensor<T>({cout}, T(1));
  return l;
}

}  // namespace

template <typename T>
FlexiNet<T>::FlexiNet(const ArchConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  resnorm_lambda_ = Var<T>::parameter(Tensor<T>({1}, static_cast<T>(cfg_.resnorm_lambda_init)));
  const std::size_t s = cfg_.stem_channels;
  stem_.push_back(make_conv_bn<T>("stem.0", ConvKind::standard, cfg_.in_channels, s, 3, 2, true, rng));
  stem_.push_back(make_conv_bn<T>("stem.1", ConvKind::standard, s, s, 3, 2, true, rng));
  const auto specs = cfg_.blocks();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& b = specs[i];
    Block<T> blk;
    blk.name = "blocks." + std::to_string(i);
    blk.spec = b;
    blk.dw = make_conv_bn<T>(blk.name + ".dw", ConvKind::depthwise, b.in_channels, b.in_channels, 3,
                             b.stride, true, rng);
    blk.pw = make_conv_bn<T>(blk.name + ".pw", ConvKind::standard, b.in_channels, b.out_channels, 1,
                             1, false, rng);
    if (b.has_projection()) {
      blk.proj = make_conv_bn<T>(blk.name + ".proj", ConvKind::standard, b.in_channels,
                                 b.out_channels, 1, b.stride, false, rng);
    }
    blocks_.push_back(std::move(blk));
  }
  const std::size_t c_last = specs.back().out_channels;
  head_weight_ = Var<T>::parameter(kaiming_uniform<T>({cfg_.num_classes, c_last, 1, 1}, c_last, rng));
  head_bias_ = Var<T>::parameter(Tensor<T>({cfg_.num_classes}, T(0)));
}

template <typename T>
std::vector<std::string> FlexiNet<T>::activation_points() const {
  std::vector<std::string> pts{"input"};
  for (const auto& l : stem_) pts.push_back(l.name);
  if (cfg_.resnorm_placement == ResNormPlacement::post_stem) pts.push_back("post_stem");
  for (const auto& b : blocks_) {
    pts.push_back(b.dw.name);
    pts.push_back(b.pw.name);
    if (b.proj) pts.push_back(b.proj->name);
    pts.push_back(b.name + ".out");
  }
  pts.push_back("pool");
  pts.push_back("logits");
  return pts;
}

template <typename T>
Var<T> FlexiNet<T>::activation(Tape<T>& tape, const Var<T>& x, const std::string& point,
                               const ForwardOptions& opt) {
  if (!opt.observe && !opt.fake_quant) return x;
  auto& obs = observers_[point];
  if (opt.observe) obs.update(x.value());
  if (!opt.fake_quant) return x;
  if (!obs.initialized()) {
    throw ConfigError("quant: activation point '" + point + "' has no calibrated observer");
  }
  return ops::fake_quant(tape, x, obs.spec());
}

template <typename T>
Var<T> FlexiNet<T>::conv_bn(Tape<T>& tape, ConvBn<T>& l, const Var<T>& x, const ForwardOptions& opt) {
  Var<T> y;
  if (opt.fake_quant) {
    auto [wf, bf] = fold_bn_op(tape, l);
    auto wq = ops::fake_quant(tape, wf, symmetric_spec_for(wf.value()));
    y = l.kind == ConvKind::depthwise ? ops::depthwise_conv2d(tape, x, wq, bf, l.params)
                                      : ops::conv2d(tape, x, wq, bf, l.params);
  } else {
    y = l.kind == ConvKind::depthwise ? ops::depthwise_conv2d(tape, x, l.weight, Var<T>(), l.params)
                                      : ops::conv2d(tape, x, l.weight, Var<T>(), l.params);
    y = ops::batch_norm(tape, y, l.gamma, l.beta, l.stats, opt.training,
                        static_cast<T>(kBatchNormMomentum), static_cast<T>(kBatchNormEpsilon));
  }
  if (l.relu) y = ops::relu(tape, y);
  return activation(tape, y, l.name, opt);
}

template <typename T>
Var<T> FlexiNet<T>::forward(Tape<T>& tape, const Var<T>& x, const ForwardOptions& opt) {
  const auto d = dims4(x.value(), "FlexiNet input");
  if (d.c != cfg_.in_channels) {
    throw DimensionError("FlexiNet: expected " + std::to_string(cfg_.in_channels) +
                         " input channels, got " + std::to_string(d.c));
  }
  const T eps = static_cast<T>(cfg_.resnorm_epsilon);
  Var<T> h = x;
  if (cfg_.resnorm_placement == ResNormPlacement::input) h = res_norm(tape, h, resnorm_lambda_, eps);
  h = activation(tape, h, "input", opt);
  for (auto& l : stem_) h = conv_bn(tape, l, h, opt);
  if (cfg_.resnorm_placement == ResNormPlacement::post_stem) {
    h = res_norm(tape, h, resnorm_lambda_, eps);
    h = activation(tape, h, "post_stem", opt);
  }
  for (auto& b : blocks_) {
    Var<T> r = conv_bn(tape, b.dw, h, opt);
    r = conv_bn(tape, b.pw, r, opt);
    Var<T> skip = b.proj ? conv_bn(tape, *b.proj, h, opt) : h;
    h = ops::relu(tape, ops::add(tape, r, skip));
    h = activation(tape, h, b.name + ".out", opt);
  }
  Var<T> pooled = activation(tape, ops::global_average_pool(tape, h), "pool", opt);
  const std::size_t n = d.n, c = pooled.value().dim(1);
  Var<T> p4 = ops::reshape(tape, pooled, {n, c, 1, 1});
  Var<T> w = head_weight_;
  if (opt.fake_quant) w = ops::fake_quant(tape, w, symmetric_spec_for(w.value()));
  Var<T> logits = ops::pointwise_conv2d(tape, p4, w, head_bias_);
  logits = ops::reshape(tape, logits, {n, cfg_.num_classes});
  return activation(tape, logits, "logits", opt);
}

template <typename T>
Tensor<T> FlexiNet<T>::predict_logits(const Tensor<T>& x) {
  Tape<T> tape;
  Var<T> in(x, false);
  // Parameters require grad, so the tape records; it is discarded immediately.
  return forward(tape, in, ForwardOptions{}).value();
}

template <typename T>
std::vector<NamedParam<T>> FlexiNet<T>::parameters() {
  std::vector<NamedParam<T>> out;
  if (cfg_.resnorm_placement != ResNormPlacement::none) out.push_back({"resnorm.lambda", resnorm_lambda_});
  auto add_layer = [&](ConvBn<T>& l) {
    out.push_back({l.name + ".weight", l.weight});
    out.push_back({l.name + ".bn.gamma", l.gamma});
    out.push_back({l.name + ".bn.beta", l.beta});
  };
  for (auto& l : stem_) add_layer(l);
  for (auto& b : blocks_) {
    add_layer(b.dw);
    add_layer(b.pw);
    if (b.proj) add_layer(*b.proj);
  }
  out.push_back({"head.weight", head_weight_});
  out.push_back({"head.bias", head_bias_});
  return out;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> FlexiNet<T>::state() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for (auto& p : parameters()) out.emplace_back(p.name, &p.var.value_mut());
  auto add_stats = [&](ConvBn<T>& l) {
    out.emplace_back(l.name + ".bn.running_mean", &l.stats.running_mean);
    out.emplace_back(l.name + ".bn.running_var", &l.stats.running_var);
  };
  for (auto& l : stem_) add_stats(l);
  for (auto& b : blocks_) {
    add_stats(b.dw);
    add_stats(b.pw);
    if (b.proj) add_stats(*b.proj);
  }
  return out;
}

template <typename T>
void FlexiNet<T>::zero_grad() {
  for (auto& p : parameters()) p.var.zero_grad();
}

template <typename T>
std::size_t FlexiNet<T>::parameter_count() {
  std::size_t n = 0;
  for (auto& p : parameters()) n += p.var.value().size();
  return n;
}

template class FlexiNet<float>;
template class FlexiNet<double>;

}  // namespace flexinet
