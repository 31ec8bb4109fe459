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

#include "flexinet/kernels.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace flexinet {

std::size_t conv_out_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad,
                          const char* op) {
  if (kernel == 0) throw DimensionError(std::string(op) + ": kernel extent must be >= 1");
  if (stride == 0) throw DimensionError(std::string(op) + ": stride must be >= 1");
  if (in + 2 * pad < kernel) {
    throw DimensionError(std::string(op) + ": padded input extent " + std::to_string(in + 2 * pad) +
                         " smaller than kernel " + std::to_string(kernel));
  }
  return (in + 2 * pad - kernel) / stride + 1;
}

namespace kernels {
namespace {

constexpr std::size_t kTile = 512;

struct ConvGeom {
  std::size_t n, c, h, w;
  std::size_t co, kh, kw;
  std::size_t ho, wo;
  std::size_t k() const { return c * kh * kw; }
  std::size_t p() const { return ho * wo; }
  bool direct(const Conv2dParams& prm) const {
    return kh == 1 && kw == 1 && prm.stride_h == 1 && prm.stride_w == 1 && prm.pad_h == 0 &&
           prm.pad_w == 0;
  }
};

template <typename T>
ConvGeom conv_geom(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                   const Conv2dParams& p) {
  auto d = dims4(x, "conv2d input");
  if (w.rank() != 4) {
    throw DimensionError("conv2d: weight must be [Cout, Cin, Kh, Kw], got " + shape_str(w.shape()));
  }
  if (w.dim(1) != d.c) {
    throw DimensionError("conv2d: weight expects Cin=" + std::to_string(w.dim(1)) +
                         " but input has C=" + std::to_string(d.c));
  }
  if (bias && bias->size() != w.dim(0)) {
    throw DimensionError("conv2d: bias has " + std::to_string(bias->size()) + " entries, expected " +
                         std::to_string(w.dim(0)));
  }
  ConvGeom g{d.n, d.c, d.f, d.t, w.dim(0), w.dim(2), w.dim(3), 0, 0};
  g.ho = conv_out_size(d.f, g.kh, p.stride_h, p.pad_h, "conv2d");
  g.wo = conv_out_size(d.t, g.kw, p.stride_w, p.pad_w, "conv2d");
  return g;
}

template <typename T>
void im2col(const T* x, const ConvGeom& g, const Conv2dParams& p, T* col) {
  const std::size_t P = g.p();
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    for (std::size_t kh = 0; kh < g.kh; ++kh) {
      for (std::size_t kw = 0; kw < g.kw; ++kw) {
        T* row = col + ((ci * g.kh + kh) * g.kw + kw) * P;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const long ih = static_cast<long>(oh * p.stride_h + kh) - static_cast<long>(p.pad_h);
          T* dst = row + oh * g.wo;
          if (ih < 0 || ih >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = x + (ci * g.h + static_cast<std::size_t>(ih)) * g.w;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const long iw = static_cast<long>(ow * p.stride_w + kw) - static_cast<long>(p.pad_w);
            dst[ow] = (iw < 0 || iw >= static_cast<long>(g.w)) ? T(0) : src[iw];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeom& g, const Conv2dParams& p, T* gx) {
  const std::size_t P = g.p();
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    for (std::size_t kh = 0; kh < g.kh; ++kh) {
      for (std::size_t kw = 0; kw < g.kw; ++kw) {
        const T* row = col + ((ci * g.kh + kh) * g.kw + kw) * P;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const long ih = static_cast<long>(oh * p.stride_h + kh) - static_cast<long>(p.pad_h);
          if (ih < 0 || ih >= static_cast<long>(g.h)) continue;
          T* dst = gx + (ci * g.h + static_cast<std::size_t>(ih)) * g.w;
          const T* src = row + oh * g.wo;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const long iw = static_cast<long>(ow * p.stride_w + kw) - static_cast<long>(p.pad_w);
            if (iw >= 0 && iw < static_cast<long>(g.w)) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

// Fixed-order dot product: eight lane sums, then a fixed pairwise reduction.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  for (; i < n; ++i) acc[0] += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                         const Conv2dParams& p) {
  const ConvGeom g = conv_geom(x, w, bias, p);
  const std::size_t K = g.k(), P = g.p();
  Tensor<T> out({g.n, g.co, g.ho, g.wo});
  std::vector<T> col;
  if (!g.direct(p)) col.resize(K * P);
  const T* wp = w.ptr();
  for (std::size_t n = 0; n < g.n; ++n) {
    const T* xn = x.ptr() + n * g.c * g.h * g.w;
    const T* cols = xn;
    if (!g.direct(p)) {
      im2col(xn, g, p, col.data());
      cols = col.data();
    }
    T* on = out.ptr() + n * g.co * P;
    for (std::size_t p0 = 0; p0 < P; p0 += kTile) {
      const std::size_t p1 = std::min(P, p0 + kTile);
      for (std::size_t co = 0; co < g.co; ++co) {
        T* orow = on + co * P;
        const T* wrow = wp + co * K;
        for (std::size_t k = 0; k < K; ++k) {
          const T wv = wrow[k];
          const T* crow = cols + k * P;
          for (std::size_t i = p0; i < p1; ++i) orow[i] += wv * crow[i];
        }
        if (bias) {
          const T b = (*bias)[co];
          for (std::size_t i = p0; i < p1; ++i) orow[i] += b;
        }
      }
    }
  }
  return out;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out,
                     const Conv2dParams& p, Tensor<T>* grad_x, Tensor<T>* grad_w,
                     Tensor<T>* grad_b) {
  const ConvGeom g = conv_geom<T>(x, w, nullptr, p);
  const std::size_t K = g.k(), P = g.p();
  if (grad_out.shape() != Shape{g.n, g.co, g.ho, g.wo}) {
    throw DimensionError("conv2d backward: grad shape " + shape_str(grad_out.shape()));
  }
  if (grad_x) *grad_x = Tensor<T>(x.shape());
  if (grad_w) *grad_w = Tensor<T>(w.shape());
  if (grad_b) *grad_b = Tensor<T>({g.co});
  const bool direct = g.direct(p);
  std::vector<T> col, gcol;
  if (!direct) {
    col.resize(K * P);
    if (grad_x) gcol.resize(K * P);
  }
  const T* wp = w.ptr();
  for (std::size_t n = 0; n < g.n; ++n) {
    const T* gn = grad_out.ptr() + n * g.co * P;
    const T* xn = x.ptr() + n * g.c * g.h * g.w;
    if (grad_b) {
      for (std::size_t co = 0; co < g.co; ++co) {
        T s = 0;
        for (std::size_t i = 0; i < P; ++i) s += gn[co * P + i];
        (*grad_b)[co] += s;
      }
    }
    const T* cols = xn;
    if (!direct && grad_w) {
      im2col(xn, g, p, col.data());
      cols = col.data();
    }
    if (grad_w) {
      T* gw = grad_w->ptr();
      for (std::size_t co = 0; co < g.co; ++co) {
        for (std::size_t k = 0; k < K; ++k) gw[co * K + k] += dot(gn + co * P, cols + k * P, P);
      }
    }
    if (grad_x) {
      T* gxn = grad_x->ptr() + n * g.c * g.h * g.w;
      T* gc = direct ? gxn : gcol.data();
      if (!direct) std::fill(gcol.begin(), gcol.end(), T(0));
      for (std::size_t p0 = 0; p0 < P; p0 += kTile) {
        const std::size_t p1 = std::min(P, p0 + kTile);
        for (std::size_t co = 0; co < g.co; ++co) {
          const T* grow = gn + co * P;
          const T* wrow = wp + co * K;
          for (std::size_t k = 0; k < K; ++k) {
            const T wv = wrow[k];
            T* crow = gc + k * P;
            for (std::size_t i = p0; i < p1; ++i) crow[i] += wv * grow[i];
          }
        }
      }
      if (!direct) col2im_add(gcol.data(), g, p, gxn);
    }
  }
}

namespace {

struct DwGeom {
  std::size_t n, c, h, w, kh, kw, ho, wo;
};

template <typename T>
DwGeom dw_geom(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
               const Conv2dParams& p) {
  auto d = dims4(x, "depthwise_conv2d input");
  if (w.rank() != 4 || w.dim(1) != 1) {
    throw DimensionError("depthwise_conv2d: weight must be [C, 1, Kh, Kw], got " +
                         shape_str(w.shape()));
  }
  if (w.dim(0) != d.c) {
    throw DimensionError("depthwise_conv2d: weight has " + std::to_string(w.dim(0)) +
                         " filters but input has C=" + std::to_string(d.c));
  }
  if (bias && bias->size() != d.c) {
    throw DimensionError("depthwise_conv2d: bias has " + std::to_string(bias->size()) +
                         " entries, expected " + std::to_string(d.c));
  }
  DwGeom g{d.n, d.c, d.f, d.t, w.dim(2), w.dim(3), 0, 0};
  g.ho = conv_out_size(d.f, g.kh, p.stride_h, p.pad_h, "depthwise_conv2d");
  g.wo = conv_out_size(d.t, g.kw, p.stride_w, p.pad_w, "depthwise_conv2d");
  return g;
}

// Range of output columns whose tap `kw` lands inside [0, W).
inline void valid_cols(std::size_t kw, const DwGeom& g, const Conv2dParams& p, std::size_t& lo,
                       std::size_t& hi) {
  const long s = static_cast<long>(p.stride_w);
  const long off = static_cast<long>(kw) - static_cast<long>(p.pad_w);
  long first = off >= 0 ? 0 : (-off + s - 1) / s;
  long last = (static_cast<long>(g.w) - 1 - off);
  last = last < 0 ? -1 : last / s;
  last = std::min(last, static_cast<long>(g.wo) - 1);
  lo = static_cast<std::size_t>(first);
  hi = last < first ? lo : static_cast<std::size_t>(last + 1);
}

}  // namespace

template <typename T>
Tensor<T> depthwise_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* bias,
                            const Conv2dParams& p) {
  const DwGeom g = dw_geom(x, w, bias, p);
  Tensor<T> out({g.n, g.c, g.ho, g.wo});
  std::vector<std::size_t> lo(g.kw), hi(g.kw);
  for (std::size_t kw = 0; kw < g.kw; ++kw) valid_cols(kw, g, p, lo[kw], hi[kw]);
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t c = 0; c < g.c; ++c) {
      const T* xin = x.ptr() + (n * g.c + c) * g.h * g.w;
      T* o = out.ptr() + (n * g.c + c) * g.ho * g.wo;
      const T* wk = w.ptr() + c * g.kh * g.kw;
      for (std::size_t oh = 0; oh < g.ho; ++oh) {
        T* orow = o + oh * g.wo;
        for (std::size_t kh = 0; kh < g.kh; ++kh) {
          const long ih = static_cast<long>(oh * p.stride_h + kh) - static_cast<long>(p.pad_h);
          if (ih < 0 || ih >= static_cast<long>(g.h)) continue;
          const T* xrow = xin + static_cast<std::size_t>(ih) * g.w;
          for (std::size_t kw = 0; kw < g.kw; ++kw) {
            const T wv = wk[kh * g.kw + kw];
            const long off = static_cast<long>(kw) - static_cast<long>(p.pad_w);
            for (std::size_t ow = lo[kw]; ow < hi[kw]; ++ow) {
              orow[ow] += wv * xrow[static_cast<long>(ow * p.stride_w) + off];
            }
          }
        }
        if (bias) {
          const T b = (*bias)[c];
          for (std::size_t ow = 0; ow < g.wo; ++ow) orow[ow] += b;
        }
      }
    }
  }
  return out;
}

template <typename T>
void depthwise_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out,
                        const Conv2dParams& p, Tensor<T>* grad_x, Tensor<T>* grad_w,
                        Tensor<T>* grad_b) {
  const DwGeom g = dw_geom<T>(x, w, nullptr, p);
  if (grad_out.shape() != Shape{g.n, g.c, g.ho, g.wo}) {
    throw DimensionError("depthwise_conv2d backward: grad shape " + shape_str(grad_out.shape()));
  }
  if (grad_x) *grad_x = Tensor<T>(x.shape());
  if (grad_w) *grad_w = Tensor<T>(w.shape());
  if (grad_b) *grad_b = Tensor<T>({g.c});
  std::vector<std::size_t> lo(g.kw), hi(g.kw);
  for (std::size_t kw = 0; kw < g.kw; ++kw) valid_cols(kw, g, p, lo[kw], hi[kw]);
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t c = 0; c < g.c; ++c) {
      const std::size_t in_off = (n * g.c + c) * g.h * g.w;
      const T* xin = x.ptr() + in_off;
      const T* gout = grad_out.ptr() + (n * g.c + c) * g.ho * g.wo;
      const T* wk = w.ptr() + c * g.kh * g.kw;
      T* gwk = grad_w ? grad_w->ptr() + c * g.kh * g.kw : nullptr;
      T* gxin = grad_x ? grad_x->ptr() + in_off : nullptr;
      if (grad_b) {
        T s = 0;
        for (std::size_t i = 0; i < g.ho * g.wo; ++i) s += gout[i];
        (*grad_b)[c] += s;
      }
      for (std::size_t oh = 0; oh < g.ho; ++oh) {
        const T* grow = gout + oh * g.wo;
        for (std::size_t kh = 0; kh < g.kh; ++kh) {
          const long ih = static_cast<long>(oh * p.stride_h + kh) - static_cast<long>(p.pad_h);
          if (ih < 0 || ih >= static_cast<long>(g.h)) continue;
          const std::size_t row = static_cast<std::size_t>(ih) * g.w;
          for (std::size_t kw = 0; kw < g.kw; ++kw) {
            const long off = static_cast<long>(kw) - static_cast<long>(p.pad_w);
            if (gwk) {
              T s = 0;
              for (std::size_t ow = lo[kw]; ow < hi[kw]; ++ow) {
                s += grow[ow] * xin[row + static_cast<long>(ow * p.stride_w) + off];
              }
              gwk[kh * g.kw + kw] += s;
            }
            if (gxin) {
              const T wv = wk[kh * g.kw + kw];
              for (std::size_t ow = lo[kw]; ow < hi[kw]; ++ow) {
                gxin[row + static_cast<long>(ow * p.stride_w) + off] += wv * grow[ow];
              }
            }
          }
        }
      }
    }
  }
}

#define FLEXINET_INSTANTIATE(T)                                                                 \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*,      \
                                    const Conv2dParams&);                                      \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                const Conv2dParams&, Tensor<T>*, Tensor<T>*, Tensor<T>*);      \
  template Tensor<T> depthwise_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*,   \
                                       const Conv2dParams&);                                   \
  template void depthwise_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,       \
                                   const Conv2dParams&, Tensor<T>*, Tensor<T>*, Tensor<T>*);

FLEXINET_INSTANTIATE(float)
FLEXINET_INSTANTIATE(double)
#undef FLEXINET_INSTANTIATE

}  // namespace kernels
}  // namespace flexinet
