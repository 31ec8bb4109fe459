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

#include "flexinet/int8_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flexinet/errors.hpp"

namespace flexinet {

namespace {

std::int8_t saturate8(std::int64_t v, int lo) {
  return static_cast<std::int8_t>(std::clamp<std::int64_t>(v, lo, kQMax));
}

std::int32_t quantize_bias(double b, double scale) {
  const double q = std::round(b / scale);
  constexpr double lo = std::numeric_limits<std::int32_t>::min();
  constexpr double hi = std::numeric_limits<std::int32_t>::max();
  return static_cast<std::int32_t>(std::clamp(q, lo, hi));
}

const QuantSpec& observed(const std::map<std::string, Observer>& obs, const std::string& point,
                          std::map<std::string, QuantSpec>& cache) {
  auto c = cache.find(point);
  if (c != cache.end()) return c->second;
  const auto it = obs.find(point);
  if (it == obs.end() || !it->second.initialized()) {
    throw ConfigError("convert_int8: no calibrated observer for activation '" + point + "'");
  }
  return cache.emplace(point, it->second.spec()).first->second;
}

TensorF res_norm_float(const TensorF& x, float lambda, float eps) {
  Tape<float> tape;
  Var<float> xv(x, false), lv(TensorF({1}, lambda), false);
  return res_norm(tape, xv, lv, eps).value();
}

}  // namespace

FixedMultiplier QConvLayer::requant() const {
  return FixedMultiplier::from_real(acc_scale() / static_cast<double>(out.scale));
}

QConvLayer make_qconv(std::string name, ConvKind kind, const Conv2dParams& params, bool relu,
                      const TensorF& weight, const TensorF& bias, const QuantSpec& in,
                      const QuantSpec& out) {
  QConvLayer l;
  l.name = std::move(name);
  l.kind = kind;
  l.params = params;
  l.relu = relu;
  l.in = in;
  l.out = out;
  l.weight = quantize(weight, symmetric_spec_for(weight));
  const double s = l.acc_scale();
  l.bias.resize(bias.size());
  for (std::size_t i = 0; i < bias.size(); ++i) l.bias[i] = quantize_bias(bias[i], s);
  return l;
}

QTensor int8_conv(const QConvLayer& layer, const QTensor& x) {
  if (x.shape.size() != 4) throw DimensionError("int8_conv: expected rank-4 input for " + layer.name);
  const std::size_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const auto& ws = layer.weight.shape;
  const bool dw = layer.kind == ConvKind::depthwise;
  const std::size_t co = ws[0], ci = dw ? 1 : ws[1], kh = ws[2], kw = ws[3];
  if ((dw && co != c) || (!dw && ci != c)) {
    throw DimensionError("int8_conv: " + layer.name + " expects " + std::to_string(dw ? co : ci) +
                         " input channels, got " + std::to_string(c));
  }
  const auto& p = layer.params;
  const std::size_t ho = conv_out_size(h, kh, p.stride_h, p.pad_h, "int8_conv");
  const std::size_t wo = conv_out_size(w, kw, p.stride_w, p.pad_w, "int8_conv");
  const std::int32_t zp_in = layer.in.zero_point, zp_out = layer.out.zero_point;
  const FixedMultiplier m = layer.requant();
  const int lo = layer.relu ? std::max(zp_out, kQMin) : kQMin;

  // Centered input; padding positions are real zero and simply skipped.
  std::vector<std::int16_t> xc(x.data.size());
  for (std::size_t i = 0; i < xc.size(); ++i) xc[i] = static_cast<std::int16_t>(x.data[i] - zp_in);

  QTensor out{{n, co, ho, wo}, std::vector<std::int8_t>(n * co * ho * wo), layer.out};
  std::vector<std::int32_t> acc(ho * wo);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t o = 0; o < co; ++o) {
      std::fill(acc.begin(), acc.end(), layer.bias.empty() ? 0 : layer.bias[o]);
      const std::size_t c_begin = dw ? o : 0, c_end = dw ? o + 1 : ci;
      for (std::size_t cc = c_begin; cc < c_end; ++cc) {
        const std::int16_t* plane = xc.data() + (b * c + cc) * h * w;
        const std::size_t wc = dw ? 0 : cc;
        for (std::size_t i = 0; i < kh; ++i) {
          for (std::size_t j = 0; j < kw; ++j) {
            const std::int32_t wv = layer.weight.data[((o * ci + wc) * kh + i) * kw + j];
            if (wv == 0) continue;
            for (std::size_t y = 0; y < ho; ++y) {
              const long iy = static_cast<long>(y * p.stride_h + i) - static_cast<long>(p.pad_h);
              if (iy < 0 || iy >= static_cast<long>(h)) continue;
              const std::int16_t* row = plane + static_cast<std::size_t>(iy) * w;
              std::int32_t* arow = acc.data() + y * wo;
              for (std::size_t xo = 0; xo < wo; ++xo) {
                const long ix = static_cast<long>(xo * p.stride_w + j) - static_cast<long>(p.pad_w);
                if (ix < 0 || ix >= static_cast<long>(w)) continue;
                arow[xo] += wv * row[ix];
              }
            }
          }
        }
      }
      std::int8_t* dst = out.data.data() + (b * co + o) * ho * wo;
      for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = saturate8(zp_out + m.apply(acc[i]), lo);
    }
  }
  return out;
}

QTensor int8_add_relu(const QTensor& a, const QTensor& b, const QuantSpec& out) {
  if (a.shape != b.shape) {
    throw DimensionError("int8_add_relu: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  }
  // Both operands are brought to the output scale with 16 extra fractional bits.
  constexpr int kFrac = 16;
  const FixedMultiplier ma = FixedMultiplier::from_real(static_cast<double>(a.spec.scale) / out.scale);
  const FixedMultiplier mb = FixedMultiplier::from_real(static_cast<double>(b.spec.scale) / out.scale);
  const std::int64_t half = std::int64_t{1} << (kFrac - 1);
  QTensor r{a.shape, std::vector<std::int8_t>(a.data.size()), out};
  const int lo = std::max(out.zero_point, kQMin);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const std::int64_t va = ma.apply(static_cast<std::int64_t>(a.data[i] - a.spec.zero_point) << kFrac);
    const std::int64_t vb = mb.apply(static_cast<std::int64_t>(b.data[i] - b.spec.zero_point) << kFrac);
    const std::int64_t s = va + vb;
    const std::int64_t q = s >= 0 ? (s + half) >> kFrac : -((-s + half) >> kFrac);
    r.data[i] = saturate8(out.zero_point + q, lo);
  }
  return r;
}

QTensor int8_global_average_pool(const QTensor& x, const QuantSpec& out) {
  if (x.shape.size() != 4) throw DimensionError("int8_global_average_pool: expected rank-4 input");
  const std::size_t n = x.shape[0], c = x.shape[1], hw = x.shape[2] * x.shape[3];
  const FixedMultiplier m =
      FixedMultiplier::from_real(static_cast<double>(x.spec.scale) / (static_cast<double>(hw) * out.scale));
  QTensor r{{n, c}, std::vector<std::int8_t>(n * c), out};
  for (std::size_t i = 0; i < n * c; ++i) {
    std::int64_t s = 0;
    const std::int8_t* src = x.data.data() + i * hw;
    for (std::size_t k = 0; k < hw; ++k) s += src[k] - x.spec.zero_point;
    r.data[i] = saturate8(out.zero_point + m.apply(s), kQMin);
  }
  return r;
}

QTensor QuantizedModel::forward(const TensorF& x) const {
  const auto d = dims4(x, "QuantizedModel input");
  const auto eps = static_cast<float>(arch.resnorm_epsilon);
  TensorF in = arch.resnorm_placement == ResNormPlacement::input ? res_norm_float(x, resnorm_lambda, eps) : x;
  QTensor h = quantize(in, input);
  for (const auto& l : stem) h = int8_conv(l, h);
  if (post_stem) {
    h = quantize(res_norm_float(dequantize(h), resnorm_lambda, eps), *post_stem);
  }
  for (const auto& b : blocks) {
    QTensor r = int8_conv(b.pw, int8_conv(b.dw, h));
    QTensor skip = b.proj ? int8_conv(*b.proj, h) : h;
    h = int8_add_relu(r, skip, b.out);
  }
  QTensor pooled = int8_global_average_pool(h, pool);
  pooled.shape = {d.n, pooled.shape[1], 1, 1};
  QTensor logits = int8_conv(head, pooled);
  logits.shape = {d.n, arch.num_classes};
  return logits;
}

TensorF QuantizedModel::predict_logits(const TensorF& x) const { return dequantize(forward(x)); }

std::size_t QuantizedModel::stored_values() const {
  std::size_t n = arch.resnorm_placement == ResNormPlacement::none ? 0 : 1;
  auto add = [&](const QConvLayer& l) { n += l.weight.data.size() + l.bias.size(); };
  for (const auto& l : stem) add(l);
  for (const auto& b : blocks) {
    add(b.dw);
    add(b.pw);
    if (b.proj) add(*b.proj);
  }
  add(head);
  return n;
}

QuantizedModel convert_int8(const FlexiNet<float>& model) {
  QuantizedModel q;
  q.arch = model.config();
  q.resnorm_lambda = model.resnorm_lambda().value()[0];
  std::map<std::string, QuantSpec> specs;
  const auto& obs = model.observers();
  auto spec = [&](const std::string& point) { return observed(obs, point, specs); };

  auto convert = [&](const ConvBn<float>& l, const QuantSpec& in) {
    const FoldedConv<float> f = fold_batch_norm(l);
    return make_qconv(l.name, l.kind, l.params, l.relu, f.weight, f.bias, in, spec(l.name));
  };

  q.input = spec("input");
  QuantSpec cur = q.input;
  for (const auto& l : model.stem()) {
    q.stem.push_back(convert(l, cur));
    cur = q.stem.back().out;
  }
  if (q.arch.resnorm_placement == ResNormPlacement::post_stem) {
    q.post_stem = spec("post_stem");
    cur = *q.post_stem;
  }
  for (const auto& b : model.blocks()) {
    QBlock qb;
    qb.name = b.name;
    qb.dw = convert(b.dw, cur);
    qb.pw = convert(b.pw, qb.dw.out);
    if (b.proj) qb.proj = convert(*b.proj, cur);
    qb.out = spec(b.name + ".out");
    cur = qb.out;
    q.blocks.push_back(std::move(qb));
  }
  q.pool = spec("pool");
  q.head = make_qconv("head", ConvKind::standard, Conv2dParams{}, false, model.head_weight().value(),
                      model.head_bias().value(), q.pool, spec("logits"));
  return q;
}

}  // namespace flexinet
