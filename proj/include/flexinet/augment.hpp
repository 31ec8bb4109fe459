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
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "flexinet/tensor.hpp"
#include "flexinet/wav.hpp"

namespace flexinet {

using Rng = std::mt19937_64;

/// Per-clip generator seed: global seed mixed with the clip index (and an
/// optional stream tag such as the epoch).
std::uint64_t clip_seed(std::uint64_t global_seed, std::uint64_t clip_index, std::uint64_t stream = 0);

struct FmsConfig {
  double p = 0.4;
  double alpha = 0.3;
  double epsilon = 1e-6;
  void validate() const;
};

/// What freq_mixstyle drew; lets tests pin gamma and the partner permutation.
struct FmsDraw {
  bool applied = false;
  std::vector<double> gamma;            // per sample
  std::vector<std::size_t> partner;     // permutation of the batch
};

/// Frequency-wise MixStyle on a [N, C, F, T] batch. Statistics are taken per
/// sample and frequency bin over (C, T). `force` skips the random draws.
TensorF freq_mixstyle(const TensorF& batch, const FmsConfig& cfg, Rng& rng,
                      const FmsDraw* force = nullptr, FmsDraw* drawn = nullptr);

/// Per-bin mean and std over (C, T) of sample n: returns F pairs.
std::vector<std::pair<double, double>> frequency_stats(const TensorF& batch, std::size_t n,
                                                       double epsilon);

/// Sum of squared samples.
double clip_energy(std::span<const float> samples);

struct AdirConfig {
  double p = 0.4;
  double energy_threshold = 323.0;
  std::vector<Waveform> dir_bank;
  void validate() const;
};

/// Full linear convolution via FFT, length x.size() + h.size() - 1.
std::vector<double> fft_convolve(std::span<const float> x, std::span<const float> h);

/// Energy-gated device impulse response. The p gate is drawn first, then the
/// energy gate. Returns true when the clip was convolved.
bool adir(Waveform& w, const AdirConfig& cfg, Rng& rng);

/// Convolve with h, truncate to the input length and rescale to the input peak.
void apply_impulse_response(Waveform& w, const Waveform& h);

/// Second-order IIR section (RBJ cookbook forms), direct form I.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  static Biquad peaking(double fs, double f0, double q, double gain_db);
  static Biquad bandpass(double fs, double f0, double q);
  static Biquad lowshelf(double fs, double f0, double gain_db);
  static Biquad highshelf(double fs, double f0, double gain_db);
  void apply(std::span<float> x) const;
};

/// Eight exponentially decaying noise bursts, each band-passed differently.
std::vector<Waveform> synthetic_dir_bank(int sample_rate = 32000, std::size_t length = 512,
                                         std::uint64_t seed = 7);

/// Every *.wav in `dir` (sorted by name), resampled to `sample_rate`.
std::vector<Waveform> load_dir_bank(const std::filesystem::path& dir, int sample_rate);

/// Circular shift of the last axis by `shift` (negative shifts roll left).
TensorF roll_time(const TensorF& x, long shift);
/// Shift drawn uniformly from [-max_shift, max_shift].
TensorF time_roll(const TensorF& x, std::size_t max_shift, Rng& rng);
Waveform time_roll(const Waveform& w, std::size_t max_shift, Rng& rng);

/// Sets bins [start, start + width) of every sample to that sample's mean.
TensorF mask_frequency(const TensorF& x, std::size_t start, std::size_t width);
/// Width ~ U{0..max_width}, start ~ U{0..F - width}.
TensorF freq_mask(const TensorF& x, std::size_t max_width, Rng& rng);

}  // namespace flexinet
