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

#include "flexinet/augment.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "flexinet/dsp.hpp"
#include "flexinet/errors.hpp"
#include "flexinet/log.hpp"

namespace flexinet {

std::uint64_t clip_seed(std::uint64_t global_seed, std::uint64_t clip_index, std::uint64_t stream) {
  // splitmix64 finalizer over the xor so neighbouring indices decorrelate
  std::uint64_t z = (global_seed ^ clip_index) + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void FmsConfig::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augment.fms: p must be in [0, 1]");
  if (!(alpha > 0.0)) throw ConfigError("augment.fms: alpha must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("augment.fms: epsilon must be positive");
}

std::vector<std::pair<double, double>> frequency_stats(const TensorF& batch, std::size_t n,
                                                       double epsilon) {
  const auto d = dims4(batch, "frequency_stats");
  std::vector<std::pair<double, double>> out(d.f);
  const double count = static_cast<double>(d.c * d.t);
  for (std::size_t f = 0; f < d.f; ++f) {
    double s = 0, sq = 0;
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t t = 0; t < d.t; ++t) s += batch.at(n, c, f, t);
    const double mu = s / count;
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t t = 0; t < d.t; ++t) {
        const double v = batch.at(n, c, f, t) - mu;
        sq += v * v;
      }
    out[f] = {mu, std::sqrt(sq / count + epsilon)};
  }
  return out;
}

namespace {

double sample_beta(double a, Rng& rng) {
  std::gamma_distribution<double> g(a, 1.0);
  const double x = g(rng), y = g(rng);
  return x + y > 0.0 ? x / (x + y) : 0.5;
}

}  // namespace

TensorF freq_mixstyle(const TensorF& batch, const FmsConfig& cfg, Rng& rng, const FmsDraw* force,
                      FmsDraw* drawn) {
  cfg.validate();
  const auto d = dims4(batch, "freq_mixstyle");
  FmsDraw draw;
  if (force) {
    draw = *force;
    if (draw.applied && (draw.gamma.size() != d.n || draw.partner.size() != d.n)) {
      throw DimensionError("freq_mixstyle: forced draw does not match the batch size");
    }
  } else {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    draw.applied = u(rng) < cfg.p;
    if (draw.applied && d.n >= 2) {
      draw.gamma.resize(d.n);
      for (auto& g : draw.gamma) g = sample_beta(cfg.alpha, rng);
      draw.partner.resize(d.n);
      std::iota(draw.partner.begin(), draw.partner.end(), std::size_t{0});
      std::shuffle(draw.partner.begin(), draw.partner.end(), rng);
    }
  }
  if (draw.applied && d.n < 2) {
    warn("freq_mixstyle: batch of one sample, nothing to mix with; passing through");
    draw.applied = false;
  }
  if (drawn) *drawn = draw;
  if (!draw.applied) return batch;

  std::vector<std::vector<std::pair<double, double>>> stats(d.n);
  for (std::size_t n = 0; n < d.n; ++n) stats[n] = frequency_stats(batch, n, cfg.epsilon);
  TensorF out(batch.shape());
  for (std::size_t n = 0; n < d.n; ++n) {
    const double g = draw.gamma[n];
    const auto& self = stats[n];
    const auto& other = stats[draw.partner[n]];
    for (std::size_t f = 0; f < d.f; ++f) {
      const double mu = g * self[f].first + (1.0 - g) * other[f].first;
      const double sd = g * self[f].second + (1.0 - g) * other[f].second;
      for (std::size_t c = 0; c < d.c; ++c)
        for (std::size_t t = 0; t < d.t; ++t) {
          const double z = (batch.at(n, c, f, t) - self[f].first) / self[f].second;
          out.at(n, c, f, t) = static_cast<float>(z * sd + mu);
        }
    }
  }
  return out;
}

double clip_energy(std::span<const float> samples) {
  double e = 0.0;
  for (float v : samples) e += static_cast<double>(v) * v;
  return e;
}

void AdirConfig::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augment.adir: p must be in [0, 1]");
  if (!(energy_threshold >= 0.0)) throw ConfigError("augment.adir: energy_threshold must be >= 0");
  if (p > 0.0 && dir_bank.empty()) throw ConfigError("augment.adir: p > 0 requires a non-empty DIR bank");
}

std::vector<double> fft_convolve(std::span<const float> x, std::span<const float> h) {
  if (x.empty() || h.empty()) return {};
  const std::size_t len = x.size() + h.size() - 1;
  std::size_t n = 1;
  while (n < len) n <<= 1;
  const std::size_t nc = n / 2 + 1;
  double* a = fftw_alloc_real(n);
  double* b = fftw_alloc_real(n);
  fftw_complex* fa = fftw_alloc_complex(nc);
  fftw_complex* fb = fftw_alloc_complex(nc);
  fftw_plan pa, pb, inv;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    pa = fftw_plan_dft_r2c_1d(static_cast<int>(n), a, fa, FFTW_ESTIMATE);
    pb = fftw_plan_dft_r2c_1d(static_cast<int>(n), b, fb, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), fa, a, FFTW_ESTIMATE);
  }
  std::fill(a, a + n, 0.0);
  std::fill(b, b + n, 0.0);
  std::copy(x.begin(), x.end(), a);
  std::copy(h.begin(), h.end(), b);
  fftw_execute(pa);
  fftw_execute(pb);
  for (std::size_t k = 0; k < nc; ++k) {
    const double re = fa[k][0] * fb[k][0] - fa[k][1] * fb[k][1];
    const double im = fa[k][0] * fb[k][1] + fa[k][1] * fb[k][0];
    fa[k][0] = re;
    fa[k][1] = im;
  }
  fftw_execute(inv);
  std::vector<double> out(len);
  const double norm = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < len; ++i) out[i] = a[i] * norm;
  {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
    fftw_destroy_plan(inv);
  }
  fftw_free(a);
  fftw_free(b);
  fftw_free(fa);
  fftw_free(fb);
  return out;
}

void apply_impulse_response(Waveform& w, const Waveform& h) {
  if (w.samples.empty()) return;
  float peak = 0.0f;
  for (float v : w.samples) peak = std::max(peak, std::abs(v));
  const auto full = fft_convolve(w.samples, h.samples);
  double out_peak = 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i) out_peak = std::max(out_peak, std::abs(full[i]));
  const double g = out_peak > 0.0 ? peak / out_peak : 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = static_cast<float>(full[i] * g);
}

bool adir(Waveform& w, const AdirConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.p <= 0.0) return false;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (!(u(rng) < cfg.p)) return false;
  if (clip_energy(w.samples) <= cfg.energy_threshold) return false;
  std::uniform_int_distribution<std::size_t> pick(0, cfg.dir_bank.size() - 1);
  const Waveform& h = cfg.dir_bank[pick(rng)];
  if (h.sample_rate != w.sample_rate) {
    throw ConfigError("augment.adir: DIR sample rate " + std::to_string(h.sample_rate) +
                      " differs from clip rate " + std::to_string(w.sample_rate));
  }
  apply_impulse_response(w, h);
  return true;
}

Biquad Biquad::peaking(double fs, double f0, double q, double gain_db) {
  const double a = std::pow(10.0, gain_db / 40.0), w0 = 2 * std::numbers::pi * f0 / fs;
  const double alpha = std::sin(w0) / (2 * q), cs = std::cos(w0);
  const double a0 = 1 + alpha / a;
  return {(1 + alpha * a) / a0, -2 * cs / a0, (1 - alpha * a) / a0, -2 * cs / a0, (1 - alpha / a) / a0};
}

Biquad Biquad::bandpass(double fs, double f0, double q) {
  const double w0 = 2 * std::numbers::pi * f0 / fs;
  const double alpha = std::sin(w0) / (2 * q), cs = std::cos(w0);
  const double a0 = 1 + alpha;
  return {alpha / a0, 0.0, -alpha / a0, -2 * cs / a0, (1 - alpha) / a0};
}

Biquad Biquad::lowshelf(double fs, double f0, double gain_db) {
  const double a = std::pow(10.0, gain_db / 40.0), w0 = 2 * std::numbers::pi * f0 / fs;
  const double cs = std::cos(w0), alpha = std::sin(w0) / 2 * std::sqrt(2.0), sa = 2 * std::sqrt(a) * alpha;
  const double a0 = (a + 1) + (a - 1) * cs + sa;
  return {a * ((a + 1) - (a - 1) * cs + sa) / a0, 2 * a * ((a - 1) - (a + 1) * cs) / a0,
          a * ((a + 1) - (a - 1) * cs - sa) / a0, -2 * ((a - 1) + (a + 1) * cs) / a0,
          ((a + 1) + (a - 1) * cs - sa) / a0};
}

Biquad Biquad::highshelf(double fs, double f0, double gain_db) {
  const double a = std::pow(10.0, gain_db / 40.0), w0 = 2 * std::numbers::pi * f0 / fs;
  const double cs = std::cos(w0), alpha = std::sin(w0) / 2 * std::sqrt(2.0), sa = 2 * std::sqrt(a) * alpha;
  const double a0 = (a + 1) - (a - 1) * cs + sa;
  return {a * ((a + 1) + (a - 1) * cs + sa) / a0, -2 * a * ((a - 1) + (a + 1) * cs) / a0,
          a * ((a + 1) + (a - 1) * cs - sa) / a0, 2 * ((a - 1) - (a + 1) * cs) / a0,
          ((a + 1) - (a - 1) * cs - sa) / a0};
}

void Biquad::apply(std::span<float> x) const {
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (auto& v : x) {
    const double x0 = v;
    const double y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x0;
    y2 = y1;
    y1 = y0;
    v = static_cast<float>(y0);
  }
}

std::vector<Waveform> synthetic_dir_bank(int sample_rate, std::size_t length, std::uint64_t seed) {
  std::vector<Waveform> bank;
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double fs = sample_rate;
  for (int k = 0; k < 8; ++k) {
    Waveform h;
    h.sample_rate = sample_rate;
    h.samples.resize(length);
    const double tau = length * (0.08 + 0.04 * k);
    for (std::size_t i = 0; i < length; ++i) {
      h.samples[i] = static_cast<float>(noise(rng) * std::exp(-static_cast<double>(i) / tau));
    }
    const double f0 = std::min(250.0 * std::pow(1.75, k), fs * 0.4);
    Biquad::bandpass(fs, f0, 0.9).apply(h.samples);
    float peak = 0.0f;
    for (float v : h.samples) peak = std::max(peak, std::abs(v));
    for (auto& v : h.samples) v = 0.6f * v / peak;
    h.samples[0] += 1.0f;  // direct path
    bank.push_back(std::move(h));
  }
  return bank;
}

std::vector<Waveform> load_dir_bank(const std::filesystem::path& dir, int sample_rate) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("augment.adir: DIR bank directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Waveform> bank;
  for (const auto& f : files) {
    Waveform h = read_wav(f);
    if (h.sample_rate != sample_rate) h = resample_linear(h, sample_rate);
    bank.push_back(std::move(h));
  }
  if (bank.empty()) throw ConfigError("augment.adir: no .wav files in " + dir.string());
  return bank;
}

TensorF roll_time(const TensorF& x, long shift) {
  if (x.rank() == 0 || x.empty()) return x;
  const std::size_t len = x.shape().back(), rows = x.size() / len;
  const long l = static_cast<long>(len);
  const std::size_t s = static_cast<std::size_t>(((shift % l) + l) % l);
  if (s == 0) return x;
  TensorF out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const float* src = x.ptr() + r * len;
    float* dst = out.ptr() + r * len;
    for (std::size_t t = 0; t < len; ++t) dst[(t + s) % len] = src[t];
  }
  return out;
}

TensorF time_roll(const TensorF& x, std::size_t max_shift, Rng& rng) {
  const long m = static_cast<long>(max_shift);
  std::uniform_int_distribution<long> d(-m, m);
  return roll_time(x, d(rng));
}

Waveform time_roll(const Waveform& w, std::size_t max_shift, Rng& rng) {
  TensorF t({w.samples.size()}, w.samples);
  const long m = static_cast<long>(max_shift);
  std::uniform_int_distribution<long> d(-m, m);
  Waveform out = w;
  out.samples = roll_time(t, d(rng)).storage();
  return out;
}

TensorF mask_frequency(const TensorF& x, std::size_t start, std::size_t width) {
  const auto d = dims4(x, "freq_mask");
  if (start + width > d.f) throw DimensionError("freq_mask: band exceeds the frequency axis");
  if (width == 0) return x;
  TensorF out = x;
  const std::size_t per = d.c * d.f * d.t;
  for (std::size_t n = 0; n < d.n; ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) s += x[n * per + i];
    const auto mean = static_cast<float>(s / static_cast<double>(per));
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t f = start; f < start + width; ++f)
        for (std::size_t t = 0; t < d.t; ++t) out.at(n, c, f, t) = mean;
  }
  return out;
}

TensorF freq_mask(const TensorF& x, std::size_t max_width, Rng& rng) {
  const auto d = dims4(x, "freq_mask");
  if (max_width > d.f) throw DimensionError("freq_mask: max_width exceeds the frequency axis");
  std::uniform_int_distribution<std::size_t> wd(0, max_width);
  const std::size_t width = wd(rng);
  std::uniform_int_distribution<std::size_t> sd(0, d.f - width);
  return mask_frequency(x, sd(rng), width);
}

}  // namespace flexinet
