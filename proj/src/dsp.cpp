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

#include "flexinet/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "flexinet/errors.hpp"
#include "flexinet/log.hpp"

namespace flexinet {

namespace detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

namespace {

// Reflection without repeating the edge sample (numpy "reflect").
std::size_t mirror(long i, std::size_t len) {
  if (len == 1) return 0;
  const long period = 2 * (static_cast<long>(len) - 1);
  long r = i % period;
  if (r < 0) r += period;
  if (r >= static_cast<long>(len)) r = period - r;
  return static_cast<std::size_t>(r);
}

}  // namespace

void MelConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("mel: sample_rate must be positive");
  if (n_fft < 2 || hop == 0 || n_mels == 0) throw ConfigError("mel: n_fft, hop and n_mels must be positive");
  if (!(fmin >= 0.0) || !(fmin < fmax) || fmax > sample_rate / 2.0) {
    throw ConfigError("mel: need 0 <= fmin < fmax <= sample_rate / 2 (got fmin=" +
                      std::to_string(fmin) + ", fmax=" + std::to_string(fmax) + ")");
  }
  if (!(log_floor > 0.0)) throw ConfigError("mel: log_floor must be positive");
  if (clip_samples == 0) throw ConfigError("mel: clip_samples must be positive");
  if (frames() == 0) throw ConfigError("mel: configuration yields zero frames");
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

namespace detail {

struct FftPlan {
  std::size_t n;
  double* in;
  fftw_complex* out;
  fftw_plan plan;

  explicit FftPlan(std::size_t size) : n(size) {
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
};

}  // namespace detail

namespace {

Spectrogram run_stft(std::span<const float> x, std::size_t n_fft, std::size_t hop,
                     const std::vector<double>& window, detail::FftPlan& fft) {
  if (x.empty()) throw std::invalid_argument("stft: empty waveform");
  Spectrogram s;
  s.bins = n_fft / 2 + 1;
  s.frames = x.size() / hop + 1;
  s.data.resize(s.bins * s.frames);
  const long half = static_cast<long>(n_fft / 2);
  for (std::size_t f = 0; f < s.frames; ++f) {
    const long start = static_cast<long>(f * hop) - half;
    for (std::size_t i = 0; i < n_fft; ++i) {
      fft.in[i] = window[i] * x[mirror(start + static_cast<long>(i), x.size())];
    }
    fftw_execute(fft.plan);
    for (std::size_t b = 0; b < s.bins; ++b) {
      s.data[b * s.frames + f] = {fft.out[b][0], fft.out[b][1]};
    }
  }
  return s;
}

}  // namespace

Spectrogram stft(const Waveform& w, const MelConfig& cfg) {
  if (w.samples.empty()) throw std::invalid_argument("stft: empty waveform");
  if (cfg.n_fft < 2 || cfg.hop == 0) throw ConfigError("stft: invalid n_fft/hop");
  detail::FftPlan fft(cfg.n_fft);
  return run_stft(std::span<const float>(w.samples), cfg.n_fft, cfg.hop, hann_window(cfg.n_fft), fft);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  MelFilterbank fb;
  fb.n_mels = cfg.n_mels;
  fb.n_bins = cfg.n_bins();
  fb.weights.assign(fb.n_mels * fb.n_bins, 0.0);
  const double lo = hz_to_mel(cfg.fmin), hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.n_mels + 1));
  }
  const double bin_hz = static_cast<double>(cfg.sample_rate) / static_cast<double>(cfg.n_fft);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    fb.centers_hz.push_back(center);
    double* row = fb.weights.data() + m * fb.n_bins;
    bool any = false;
    for (std::size_t b = 0; b < fb.n_bins; ++b) {
      const double f = b * bin_hz;
      const double up = (f - left) / (center - left);
      const double down = (right - f) / (right - center);
      const double v = std::max(0.0, std::min(up, down));
      row[b] = v;
      any = any || v > 0.0;
    }
    // Filters narrower than the bin spacing fall between bins; they take the
    // nearest bin so that every band carries energy.
    if (!any) {
      const auto nearest = static_cast<std::size_t>(std::lround(center / bin_hz));
      row[std::min(nearest, fb.n_bins - 1)] = 1.0;
    }
    std::size_t first = fb.n_bins, last = 0;
    for (std::size_t b = 0; b < fb.n_bins; ++b) {
      if (row[b] > 0.0) {
        first = std::min(first, b);
        last = b + 1;
      }
    }
    fb.first.push_back(first);
    fb.last.push_back(last);
  }
  return fb;
}

MelFrontend::MelFrontend(const MelConfig& cfg)
    : cfg_(cfg), fb_(mel_filterbank(cfg)), window_(hann_window(cfg.n_fft)),
      fft_(std::make_unique<detail::FftPlan>(cfg.n_fft)) {}

MelFrontend::~MelFrontend() = default;

std::vector<double> MelFrontend::mel_power(std::span<const float> samples) {
  const Spectrogram s = run_stft(samples, cfg_.n_fft, cfg_.hop, window_, *fft_);
  std::vector<double> power(s.data.size());
  for (std::size_t i = 0; i < power.size(); ++i) power[i] = std::norm(s.data[i]);
  std::vector<double> mel(fb_.n_mels * s.frames, 0.0);
  for (std::size_t m = 0; m < fb_.n_mels; ++m) {
    double* dst = mel.data() + m * s.frames;
    for (std::size_t b = fb_.first[m]; b < fb_.last[m]; ++b) {
      const double wgt = fb_.at(m, b);
      const double* src = power.data() + b * s.frames;
      for (std::size_t f = 0; f < s.frames; ++f) dst[f] += wgt * src[f];
    }
  }
  return mel;
}

void MelFrontend::compute(std::span<const float> samples, std::span<float> out) {
  if (samples.size() != cfg_.clip_samples) {
    throw DimensionError("log_mel: expected " + std::to_string(cfg_.clip_samples) + " samples, got " +
                         std::to_string(samples.size()));
  }
  const std::size_t frames = cfg_.frames();
  if (out.size() != fb_.n_mels * frames) throw DimensionError("log_mel: output span has wrong size");
  const auto mel = mel_power(samples);
  const std::size_t all_frames = cfg_.frames_before_trim();
  for (std::size_t m = 0; m < fb_.n_mels; ++m) {
    for (std::size_t f = 0; f < frames; ++f) {
      out[m * frames + f] = static_cast<float>(std::log(mel[m * all_frames + f] + cfg_.log_floor));
    }
  }
}

TensorF MelFrontend::operator()(const Waveform& w) {
  const Waveform clip = conform_clip(w, cfg_);
  TensorF out({1, 1, cfg_.n_mels, cfg_.frames()});
  compute(clip.samples, out.data());
  return out;
}

Waveform conform_clip(const Waveform& w, const MelConfig& cfg) {
  if (w.samples.empty()) throw std::invalid_argument("log_mel: empty waveform");
  Waveform out = w;
  if (w.sample_rate != cfg.sample_rate) {
    warn("log_mel: resampling " + std::to_string(w.sample_rate) + " Hz input to " +
         std::to_string(cfg.sample_rate) + " Hz (linear interpolation)");
    out = resample_linear(w, cfg.sample_rate);
  }
  if (out.samples.size() != cfg.clip_samples) {
    warn("log_mel: clip has " + std::to_string(out.samples.size()) + " samples, " +
         (out.samples.size() < cfg.clip_samples ? "zero-padding" : "cropping") + " to " +
         std::to_string(cfg.clip_samples));
    out.samples.resize(cfg.clip_samples, 0.0f);
  }
  return out;
}

TensorF log_mel(const Waveform& w, const MelConfig& cfg) {
  MelFrontend fe(cfg);
  return fe(w);
}

}  // namespace flexinet
