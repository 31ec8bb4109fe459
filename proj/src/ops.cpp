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

#include "flexinet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace flexinet::ops {
namespace {

template <typename T>
void require_same(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

template <typename T>
const Tensor<T>* bias_ptr(const Var<T>& b) {
  return b.defined() ? &b.value() : nullptr;
}

// Maps each input element to its slot in the reduced output.
struct Reduction {
  Shape out_shape;
  std::vector<std::size_t> out_index;  // per input element
  std::size_t group = 1;               // elements per output slot
};

Reduction plan_reduction(const Shape& shape, std::vector<std::size_t> axes, const char* op) {
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  std::vector<bool> reduced(shape.size(), false);
  for (auto a : axes) {
    if (a >= shape.size()) {
      throw DimensionError(std::string(op) + ": axis " + std::to_string(a) +
                           " invalid for shape " + shape_str(shape));
    }
    reduced[a] = true;
  }
  Reduction r;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (reduced[i]) r.group *= shape[i];
    else r.out_shape.push_back(shape[i]);
  }
  if (r.out_shape.empty()) r.out_shape = {1};
  const std::size_t total = numel(shape);
  r.out_index.resize(total);
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t o = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (!reduced[d]) o = o * shape[d] + idx[d];
    }
    r.out_index[flat] = o;
    for (std::size_t d = shape.size(); d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
  return r;
}

}  // namespace

template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& w, const Var<T>& b,
              const Conv2dParams& p) {
  auto out = kernels::conv2d_forward(x.value(), w.value(), bias_ptr(b), p);
  auto xn = x.node(), wn = w.node();
  auto bn = b.defined() ? b.node() : nullptr;
  return tape.record("conv2d", {x, w, b.defined() ? b : Var<T>()}, std::move(out),
                     [xn, wn, bn, p](const Tensor<T>& g) {
                       Tensor<T> gx, gw, gb;
                       const bool want_b = bn && bn->requires_grad;
                       kernels::conv2d_backward(xn->value, wn->value, g, p,
                                                xn->requires_grad ? &gx : nullptr,
                                                wn->requires_grad ? &gw : nullptr,
                                                want_b ? &gb : nullptr);
                       if (xn->requires_grad) accumulate_grad(xn, gx);
                       if (wn->requires_grad) accumulate_grad(wn, gw);
                       if (want_b) accumulate_grad(bn, gb);
                     });
}

template <typename T>
Var<T> depthwise_conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& w, const Var<T>& b,
                        const Conv2dParams& p) {
  auto out = kernels::depthwise_forward(x.value(), w.value(), bias_ptr(b), p);
  auto xn = x.node(), wn = w.node();
  auto bn = b.defined() ? b.node() : nullptr;
  return tape.record("depthwise_conv2d", {x, w, b.defined() ? b : Var<T>()}, std::move(out),
                     [xn, wn, bn, p](const Tensor<T>& g) {
                       Tensor<T> gx, gw, gb;
                       const bool want_b = bn && bn->requires_grad;
                       kernels::depthwise_backward(xn->value, wn->value, g, p,
                                                   xn->requires_grad ? &gx : nullptr,
                                                   wn->requires_grad ? &gw : nullptr,
                                                   want_b ? &gb : nullptr);
                       if (xn->requires_grad) accumulate_grad(xn, gx);
                       if (wn->requires_grad) accumulate_grad(wn, gw);
                       if (want_b) accumulate_grad(bn, gb);
                     });
}

template <typename T>
Var<T> pointwise_conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  if (w.value().rank() != 4 || w.value().dim(2) != 1 || w.value().dim(3) != 1) {
    throw DimensionError("pointwise_conv2d: weight must be [Cout, Cin, 1, 1], got " +
                         shape_str(w.shape()));
  }
  return conv2d(tape, x, w, b, Conv2dParams{});
}

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x) {
  Tensor<T> out(x.shape());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : T(0);
  auto xn = x.node();
  return tape.record("relu", {x}, std::move(out), [xn](const Tensor<T>& g) {
    Tensor<T> gx(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = xn->value[i] > T(0) ? g[i] : T(0);
    accumulate_grad(xn, gx);
  });
}

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  require_same(a, b, "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  auto an = a.node(), bn = b.node();
  return tape.record("add", {a, b}, std::move(out), [an, bn](const Tensor<T>& g) {
    accumulate_grad(an, g);
    accumulate_grad(bn, g);
  });
}

template <typename T>
Var<T> mul(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  require_same(a, b, "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  auto an = a.node(), bn = b.node();
  return tape.record("mul", {a, b}, std::move(out), [an, bn](const Tensor<T>& g) {
    if (an->requires_grad) {
      Tensor<T> ga(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * bn->value[i];
      accumulate_grad(an, ga);
    }
    if (bn->requires_grad) {
      Tensor<T> gb(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * an->value[i];
      accumulate_grad(bn, gb);
    }
  });
}

template <typename T>
Var<T> scale(Tape<T>& tape, const Var<T>& x, T s) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * s;
  auto xn = x.node();
  return tape.record("scale", {x}, std::move(out), [xn, s](const Tensor<T>& g) {
    Tensor<T> gx(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * s;
    accumulate_grad(xn, gx);
  });
}

template <typename T>
Var<T> scale_by(Tape<T>& tape, const Var<T>& x, const Var<T>& lambda) {
  if (lambda.value().size() != 1) {
    throw DimensionError("scale_by: lambda must have one element, got " +
                         shape_str(lambda.shape()));
  }
  const T s = lambda.value()[0];
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * x.value()[i];
  auto xn = x.node(), ln = lambda.node();
  return tape.record("scale_by", {x, lambda}, std::move(out), [xn, ln](const Tensor<T>& g) {
    const T s = ln->value[0];
    if (xn->requires_grad) {
      Tensor<T> gx(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] = s * g[i];
      accumulate_grad(xn, gx);
    }
    if (ln->requires_grad) {
      T acc = 0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xn->value[i];
      accumulate_grad(ln, Tensor<T>(ln->value.shape(), std::vector<T>{acc}));
    }
  });
}

template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x) {
  T acc = 0;
  for (auto v : x.value().data()) acc += v;
  auto xn = x.node();
  return tape.record("sum", {x}, Tensor<T>({1}, std::vector<T>{acc}), [xn](const Tensor<T>& g) {
    accumulate_grad(xn, Tensor<T>(xn->value.shape(), g[0]));
  });
}

template <typename T>
Var<T> mean(Tape<T>& tape, const Var<T>& x, std::vector<std::size_t> axes) {
  auto r = std::make_shared<Reduction>(plan_reduction(x.shape(), std::move(axes), "mean"));
  Tensor<T> out(r->out_shape);
  const auto& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i) out[r->out_index[i]] += xv[i];
  const T inv = T(1) / static_cast<T>(r->group);
  for (auto& v : out.storage()) v *= inv;
  auto xn = x.node();
  return tape.record("mean", {x}, std::move(out), [xn, r, inv](const Tensor<T>& g) {
    Tensor<T> gx(xn->value.shape());
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = g[r->out_index[i]] * inv;
    accumulate_grad(xn, gx);
  });
}

template <typename T>
Var<T> var(Tape<T>& tape, const Var<T>& x, std::vector<std::size_t> axes) {
  auto r = std::make_shared<Reduction>(plan_reduction(x.shape(), std::move(axes), "var"));
  const auto& xv = x.value();
  const T inv = T(1) / static_cast<T>(r->group);
  auto mu = std::make_shared<Tensor<T>>(r->out_shape);
  for (std::size_t i = 0; i < xv.size(); ++i) (*mu)[r->out_index[i]] += xv[i];
  for (auto& v : mu->storage()) v *= inv;
  Tensor<T> out(r->out_shape);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const T d = xv[i] - (*mu)[r->out_index[i]];
    out[r->out_index[i]] += d * d;
  }
  for (auto& v : out.storage()) v *= inv;
  auto xn = x.node();
  return tape.record("var", {x}, std::move(out), [xn, r, mu, inv](const Tensor<T>& g) {
    Tensor<T> gx(xn->value.shape());
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const std::size_t o = r->out_index[i];
      gx[i] = g[o] * T(2) * (xn->value[i] - (*mu)[o]) * inv;
    }
    accumulate_grad(xn, gx);
  });
}

template <typename T>
Var<T> softmax(Tape<T>& tape, const Var<T>& x) {
  if (x.value().rank() != 2) {
    throw DimensionError("softmax: expected [N, K], got " + shape_str(x.shape()));
  }
  const std::size_t n = x.value().dim(0), k = x.value().dim(1);
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = x.value().ptr() + r * k;
    T* o = out.ptr() + r * k;
    const T mx = *std::max_element(row, row + k);
    T z = 0;
    for (std::size_t j = 0; j < k; ++j) z += (o[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < k; ++j) o[j] /= z;
  }
  auto xn = x.node();
  auto probs = std::make_shared<Tensor<T>>(out);
  return tape.record("softmax", {x}, std::move(out), [xn, probs, n, k](const Tensor<T>& g) {
    Tensor<T> gx(g.shape());
    for (std::size_t r = 0; r < n; ++r) {
      const T* p = probs->ptr() + r * k;
      const T* gr = g.ptr() + r * k;
      T dotp = 0;
      for (std::size_t j = 0; j < k; ++j) dotp += gr[j] * p[j];
      for (std::size_t j = 0; j < k; ++j) gx[r * k + j] = p[j] * (gr[j] - dotp);
    }
    accumulate_grad(xn, gx);
  });
}

template <typename T>
Var<T> log(Tape<T>& tape, const Var<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(x.value()[i] > T(0))) throw std::domain_error("log: non-positive input");
    out[i] = std::log(x.value()[i]);
  }
  auto xn = x.node();
  return tape.record("log", {x}, std::move(out), [xn](const Tensor<T>& g) {
    Tensor<T> gx(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] / xn->value[i];
    accumulate_grad(xn, gx);
  });
}

template <typename T>
Var<T> global_average_pool(Tape<T>& tape, const Var<T>& x) {
  const auto d = dims4(x.value(), "global_average_pool");
  const std::size_t plane = d.f * d.t;
  Tensor<T> out({d.n, d.c});
  for (std::size_t i = 0; i < d.n * d.c; ++i) {
    const T* src = x.value().ptr() + i * plane;
    T acc = 0;
    for (std::size_t j = 0; j < plane; ++j) acc += src[j];
    out[i] = acc / static_cast<T>(plane);
  }
  auto xn = x.node();
  return tape.record("global_average_pool", {x}, std::move(out), [xn, plane](const Tensor<T>& g) {
    Tensor<T> gx(xn->value.shape());
    const T inv = T(1) / static_cast<T>(plane);
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::fill(gx.ptr() + i * plane, gx.ptr() + (i + 1) * plane, g[i] * inv);
    }
    accumulate_grad(xn, gx);
  });
}

template <typename T>
Var<T> reshape(Tape<T>& tape, const Var<T>& x, Shape shape) {
  auto out = x.value().reshaped(std::move(shape));
  auto xn = x.node();
  return tape.record("reshape", {x}, std::move(out), [xn](const Tensor<T>& g) {
    accumulate_grad(xn, g.reshaped(xn->value.shape()));
  });
}

namespace {

// Two-pass mean and biased variance, accumulated in double whatever T is.
template <typename T>
std::pair<double, double> plane_moments(const T* src, std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += static_cast<double>(src[j]);
  const double mu = acc / static_cast<double>(n);
  double sq = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double c = static_cast<double>(src[j]) - mu;
    sq += c * c;
  }
  return {mu, sq / static_cast<double>(n)};
}

}  // namespace

template <typename T>
NormStats<T> instance_norm_stats(const Tensor<T>& x) {
  const auto d = dims4(x, "instance_norm");
  const std::size_t plane = d.f * d.t;
  NormStats<T> s{Tensor<T>({d.n, d.c}), Tensor<T>({d.n, d.c})};
  for (std::size_t i = 0; i < d.n * d.c; ++i) {
    const auto [mu, var] = plane_moments(x.ptr() + i * plane, plane);
    s.mean[i] = static_cast<T>(mu);
    s.var[i] = static_cast<T>(var);
  }
  return s;
}

template <typename T>
Var<T> instance_norm(Tape<T>& tape, const Var<T>& x, T epsilon) {
  const auto d = dims4(x.value(), "instance_norm");
  const std::size_t plane = d.f * d.t;
  if (plane < 2) throw DimensionError("instance_norm: F x T must be >= 2");
  auto inv_std = std::make_shared<std::vector<T>>(d.n * d.c);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < d.n * d.c; ++i) {
    const T* src = x.value().ptr() + i * plane;
    const auto [mu, var] = plane_moments(src, plane);
    const double is = 1.0 / std::sqrt(var + static_cast<double>(epsilon));
    (*inv_std)[i] = static_cast<T>(is);
    T* dst = out.ptr() + i * plane;
    for (std::size_t j = 0; j < plane; ++j) dst[j] = static_cast<T>((static_cast<double>(src[j]) - mu) * is);
  }
  auto xhat = std::make_shared<Tensor<T>>(out);
  auto xn = x.node();
  return tape.record("instance_norm", {x}, std::move(out),
                     [xn, xhat, inv_std, plane](const Tensor<T>& g) {
                       Tensor<T> gx(g.shape());
                       const T m = static_cast<T>(plane);
                       for (std::size_t i = 0; i < inv_std->size(); ++i) {
                         const T* gs = g.ptr() + i * plane;
                         const T* xh = xhat->ptr() + i * plane;
                         T sg = 0, sgx = 0;
                         for (std::size_t j = 0; j < plane; ++j) {
                           sg += gs[j];
                           sgx += gs[j] * xh[j];
                         }
                         const T mg = sg / m, mgx = sgx / m, is = (*inv_std)[i];
                         T* dst = gx.ptr() + i * plane;
                         for (std::size_t j = 0; j < plane; ++j) {
                           dst[j] = is * (gs[j] - mg - xh[j] * mgx);
                         }
                       }
                       accumulate_grad(xn, gx);
                     });
}

template <typename T>
Var<T> batch_norm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  BatchNormState<T>& state, bool training, T momentum, T epsilon) {
  const auto d = dims4(x.value(), "batch_norm");
  if (gamma.value().size() != d.c || beta.value().size() != d.c ||
      state.running_mean.size() != d.c || state.running_var.size() != d.c) {
    throw DimensionError("batch_norm: parameters must have " + std::to_string(d.c) + " entries");
  }
  const std::size_t plane = d.f * d.t;
  const std::size_t count = d.n * plane;
  std::vector<T> mu(d.c), vr(d.c);
  if (training) {
    if (count < 2) throw DimensionError("batch_norm: training needs >= 2 values per channel");
    for (std::size_t c = 0; c < d.c; ++c) {
      T acc = 0;
      for (std::size_t n = 0; n < d.n; ++n) {
        const T* src = x.value().ptr() + (n * d.c + c) * plane;
        for (std::size_t j = 0; j < plane; ++j) acc += src[j];
      }
      const T m = acc / static_cast<T>(count);
      T sq = 0;
      for (std::size_t n = 0; n < d.n; ++n) {
        const T* src = x.value().ptr() + (n * d.c + c) * plane;
        for (std::size_t j = 0; j < plane; ++j) sq += (src[j] - m) * (src[j] - m);
      }
      mu[c] = m;
      vr[c] = sq / static_cast<T>(count);
      const T unbiased = sq / static_cast<T>(count - 1);
      state.running_mean[c] = (T(1) - momentum) * state.running_mean[c] + momentum * m;
      state.running_var[c] = (T(1) - momentum) * state.running_var[c] + momentum * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < d.c; ++c) {
      mu[c] = state.running_mean[c];
      vr[c] = state.running_var[c];
    }
  }
  auto inv_std = std::make_shared<std::vector<T>>(d.c);
  auto xhat = std::make_shared<Tensor<T>>(x.shape());
  Tensor<T> out(x.shape());
  for (std::size_t c = 0; c < d.c; ++c) (*inv_std)[c] = T(1) / std::sqrt(vr[c] + epsilon);
  for (std::size_t n = 0; n < d.n; ++n) {
    for (std::size_t c = 0; c < d.c; ++c) {
      const std::size_t off = (n * d.c + c) * plane;
      const T is = (*inv_std)[c], ga = gamma.value()[c], be = beta.value()[c];
      for (std::size_t j = 0; j < plane; ++j) {
        const T xh = (x.value()[off + j] - mu[c]) * is;
        (*xhat)[off + j] = xh;
        out[off + j] = ga * xh + be;
      }
    }
  }
  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  return tape.record(
      "batch_norm", {x, gamma, beta}, std::move(out),
      [xn, gn, bn, xhat, inv_std, d, plane, count, training](const Tensor<T>& g) {
        std::vector<T> sg(d.c, 0), sgx(d.c, 0);
        for (std::size_t n = 0; n < d.n; ++n) {
          for (std::size_t c = 0; c < d.c; ++c) {
            const std::size_t off = (n * d.c + c) * plane;
            for (std::size_t j = 0; j < plane; ++j) {
              sg[c] += g[off + j];
              sgx[c] += g[off + j] * (*xhat)[off + j];
            }
          }
        }
        if (gn->requires_grad) accumulate_grad(gn, Tensor<T>({d.c}, sgx));
        if (bn->requires_grad) accumulate_grad(bn, Tensor<T>({d.c}, sg));
        if (!xn->requires_grad) return;
        Tensor<T> gx(g.shape());
        const T m = static_cast<T>(count);
        for (std::size_t n = 0; n < d.n; ++n) {
          for (std::size_t c = 0; c < d.c; ++c) {
            const std::size_t off = (n * d.c + c) * plane;
            const T k = gn->value[c] * (*inv_std)[c];
            if (training) {
              const T mg = sg[c] / m, mgx = sgx[c] / m;
              for (std::size_t j = 0; j < plane; ++j) {
                gx[off + j] = k * (g[off + j] - mg - (*xhat)[off + j] * mgx);
              }
            } else {
              for (std::size_t j = 0; j < plane; ++j) gx[off + j] = k * g[off + j];
            }
          }
        }
        accumulate_grad(xn, gx);
      });
}

template <typename T>
Var<T> softmax_cross_entropy(Tape<T>& tape, const Var<T>& logits, const std::vector<int>& labels) {
  const auto& z = logits.value();
  if (z.rank() != 2 || z.dim(0) != labels.size()) {
    throw DimensionError("softmax_cross_entropy: logits " + shape_str(z.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = z.dim(0), k = z.dim(1);
  auto probs = std::make_shared<Tensor<T>>(z.shape());
  T loss = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(labels[r]) +
                              " outside [0, " + std::to_string(k) + ")");
    }
    const T* row = z.ptr() + r * k;
    const T mx = *std::max_element(row, row + k);
    T zsum = 0;
    for (std::size_t j = 0; j < k; ++j) zsum += std::exp(row[j] - mx);
    const T lse = mx + std::log(zsum);
    for (std::size_t j = 0; j < k; ++j) (*probs)[r * k + j] = std::exp(row[j] - lse);
    loss += lse - row[labels[r]];
  }
  loss /= static_cast<T>(n);
  auto zn = logits.node();
  return tape.record("softmax_cross_entropy", {logits}, Tensor<T>({1}, std::vector<T>{loss}),
                     [zn, probs, labels, n, k](const Tensor<T>& g) {
                       Tensor<T> gz(probs->shape());
                       const T s = g[0] / static_cast<T>(n);
                       for (std::size_t r = 0; r < n; ++r) {
                         for (std::size_t j = 0; j < k; ++j) {
                           const T onehot = static_cast<int>(j) == labels[r] ? T(1) : T(0);
                           gz[r * k + j] = s * ((*probs)[r * k + j] - onehot);
                         }
                       }
                       accumulate_grad(zn, gz);
                     });
}

#define FLEXINET_INSTANTIATE(T)                                                                    \
  template Var<T> conv2d(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&,                  \
                         const Conv2dParams&);                                                   \
  template Var<T> depthwise_conv2d(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&,        \
                                   const Conv2dParams&);                                         \
  template Var<T> pointwise_conv2d(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&);       \
  template Var<T> relu(Tape<T>&, const Var<T>&);                                                 \
  template Var<T> add(Tape<T>&, const Var<T>&, const Var<T>&);                                   \
  template Var<T> mul(Tape<T>&, const Var<T>&, const Var<T>&);                                   \
  template Var<T> scale(Tape<T>&, const Var<T>&, T);                                             \
  template Var<T> scale_by(Tape<T>&, const Var<T>&, const Var<T>&);                              \
  template Var<T> sum(Tape<T>&, const Var<T>&);                                                  \
  template Var<T> mean(Tape<T>&, const Var<T>&, std::vector<std::size_t>);                       \
  template Var<T> var(Tape<T>&, const Var<T>&, std::vector<std::size_t>);                        \
  template Var<T> softmax(Tape<T>&, const Var<T>&);                                              \
  template Var<T> log(Tape<T>&, const Var<T>&);                                                  \
  template Var<T> global_average_pool(Tape<T>&, const Var<T>&);                                  \
  template Var<T> reshape(Tape<T>&, const Var<T>&, Shape);                                       \
  template NormStats<T> instance_norm_stats(const Tensor<T>&);                                   \
  template Var<T> instance_norm(Tape<T>&, const Var<T>&, T);                                     \
  template Var<T> batch_norm(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&,              \
                             BatchNormState<T>&, bool, T, T);                                    \
  template Var<T> softmax_cross_entropy(Tape<T>&, const Var<T>&, const std::vector<int>&);

FLEXINET_INSTANTIATE(float)
FLEXINET_INSTANTIATE(double)
#undef FLEXINET_INSTANTIATE

}  // namespace flexinet::ops
