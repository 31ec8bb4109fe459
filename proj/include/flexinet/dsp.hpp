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

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "flexinet/tensor.hpp"
#include "flexinet/wav.hpp"

namespace flexinet {

namespace detail {
struct FftPlan;
/// FFTW's planner is not thread-safe; every plan creation and destruction takes this lock.
std::mutex& fftw_planner_mutex();
}

/// Log-mel front end parameters. Defaults give 256 x 64 features for a 1 s clip at 32 kHz:
/// centered framing with hop 500 yields 65 frames and the last one is dropped.
struct MelConfig {
  int sample_rate = 32000;
  std::size_t n_mels = 256;
  std::size_t n_fft = 2048;
  std::size_t hop = 500;
  double fmin = 0.0;
  double fmax = 16000.0;
  double log_floor = 1e-5;
  std::size_t clip_samples = 32000;
  bool trim_last_frame = true;

  std::size_t n_bins() const { return n_fft / 2 + 1; }
  std::size_t frames_before_trim() const { return clip_samples / hop + 1; }
  std::size_t frames() const { return frames_before_trim() - (trim_last_frame ? 1 : 0); }
  void validate() const;
};

/// Complex STFT, bin-major: value(bin, frame) = data[bin * frames + frame].
struct Spectrogram {
  std::size_t bins = 0;
  std::size_t frames = 0;
  std::vector<std::complex<double>> data;

  const std::complex<double>& at(std::size_t bin, std::size_t frame) const {
    return data[bin * frames + frame];
  }
};

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

/// Centered STFT with reflection padding of n_fft / 2 on both sides and a Hann window.
/// Frame count is 1 + len / hop; no trimming happens here.
Spectrogram stft(const Waveform& w, const MelConfig& cfg);

/// Triangular HTK-scale filterbank with unit peaks.
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;
  std::vector<double> weights;      // n_mels x n_bins, row-major
  std::vector<double> centers_hz;   // peak frequency of each filter
  std::vector<std::size_t> first;   // first non-zero bin per row
  std::vector<std::size_t> last;    // one past the last non-zero bin per row

  double at(std::size_t mel, std::size_t bin) const { return weights[mel * n_bins + bin]; }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

MelFilterbank mel_filterbank(const MelConfig& cfg);

/// Reusable front end: owns the FFT plan and filterbank.
class MelFrontend {
 public:
  explicit MelFrontend(const MelConfig& cfg);
  ~MelFrontend();
  MelFrontend(const MelFrontend&) = delete;
  MelFrontend& operator=(const MelFrontend&) = delete;

  const MelConfig& config() const { return cfg_; }
  const MelFilterbank& filterbank() const { return fb_; }

  /// Writes n_mels x frames values (row-major) to `out`. The clip must already
  /// have cfg.clip_samples samples at cfg.sample_rate.
  void compute(std::span<const float> samples, std::span<float> out);

  /// Log-mel of one waveform, padded or cropped (with a warning) to the clip length.
  TensorF operator()(const Waveform& w);

  /// Mel power (before the log) for arbitrary-length input; n_mels x frames.
  std::vector<double> mel_power(std::span<const float> samples);

 private:
  MelConfig cfg_;
  MelFilterbank fb_;
  std::vector<double> window_;
  std::unique_ptr<detail::FftPlan> fft_;
};

/// Pads with zeros or crops to cfg.clip_samples, resampling first if the rate differs.
/// Emits a warning whenever the input is altered.
Waveform conform_clip(const Waveform& w, const MelConfig& cfg);

/// Log-mel features, shape 1 x 1 x n_mels x frames.
TensorF log_mel(const Waveform& w, const MelConfig& cfg);

}  // namespace flexinet
