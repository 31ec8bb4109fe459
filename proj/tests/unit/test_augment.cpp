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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <set>

#include "flexinet/augment.hpp"
#include "flexinet/errors.hpp"
#include "flexinet/log.hpp"
#include "flexinet/reference.hpp"
#include "testing.hpp"

namespace flexinet {
namespace {

Waveform scaled_noise(std::size_t n, double rms, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = static_cast<float>(std::clamp(rms * g(rng), -1.0, 1.0));
  return w;
}

TEST(ClipSeed, DeterministicAndDistinct) {
  EXPECT_EQ(clip_seed(42, 7), clip_seed(42, 7));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(clip_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(clip_seed(42, 7, 0), clip_seed(42, 7, 1));
  EXPECT_NE(clip_seed(42, 7), clip_seed(43, 7));
}

TEST(ClipEnergy, SumOfSquares) {
  const std::vector<float> x = {0.5f, -0.5f, 1.0f};
  EXPECT_DOUBLE_EQ(clip_energy(x), 1.5);
}

TEST(FftConvolve, MatchesDirectOracle) {
  std::mt19937_64 rng(1);
  for (auto [n, m] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {7, 3}, {100, 17}, {513, 512}, {2000, 64}}) {
    const auto x = testing::random_tensor<float>({n}, rng);
    const auto h = testing::random_tensor<float>({m}, rng);
    const auto fast = fft_convolve(x.storage(), h.storage());
    const auto slow = reference::direct_convolution(x.storage(), h.storage());
    ASSERT_EQ(fast.size(), n + m - 1);
    for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-9);
  }
}

TEST(Adir, LowEnergyClipsPassThroughBitIdentical) {
  AdirConfig cfg;
  cfg.p = 1.0;
  cfg.dir_bank = synthetic_dir_bank();
  for (int i = 0; i < 30; ++i) {
    const Waveform w = scaled_noise(32000, 0.01 + 0.003 * i, 100 + i);  // RMS <= 0.1
    ASSERT_LE(clip_energy(w.samples), cfg.energy_threshold);
    for (std::uint64_t s = 0; s < 10; ++s) {
      Waveform v = w;
      Rng rng(s);
      EXPECT_FALSE(adir(v, cfg, rng));
      EXPECT_EQ(v.samples, w.samples);
    }
  }
}

TEST(Adir, HighEnergyClipsKeepLengthAndPeak) {
  AdirConfig cfg;
  cfg.p = 1.0;
  cfg.dir_bank = synthetic_dir_bank();
  for (int i = 0; i < 10; ++i) {
    const Waveform w = scaled_noise(32000, 0.15 + 0.01 * i, 200 + i);
    ASSERT_GT(clip_energy(w.samples), cfg.energy_threshold);
    Waveform v = w;
    Rng rng(i);
    EXPECT_TRUE(adir(v, cfg, rng));
    ASSERT_EQ(v.samples.size(), w.samples.size());
    float pw = 0, pv = 0;
    for (std::size_t k = 0; k < w.samples.size(); ++k) {
      pw = std::max(pw, std::abs(w.samples[k]));
      pv = std::max(pv, std::abs(v.samples[k]));
    }
    EXPECT_NEAR(pv, pw, 1e-6);
    EXPECT_NE(v.samples, w.samples);
  }
}

TEST(Adir, ProbabilityGate) {
  AdirConfig cfg;
  cfg.dir_bank = synthetic_dir_bank();
  cfg.p = 0.0;
  Waveform w = scaled_noise(4000, 0.5, 1);
  const auto orig = w.samples;
  Rng rng(1);
  EXPECT_FALSE(adir(w, cfg, rng));
  EXPECT_EQ(w.samples, orig);

  cfg.p = 0.4;
  int applied = 0;
  for (int i = 0; i < 500; ++i) {
    Waveform v = scaled_noise(2000, 0.5, i);
    Rng r(1000 + i);
    applied += adir(v, cfg, r) ? 1 : 0;
  }
  EXPECT_NEAR(applied / 500.0, 0.4, 0.07);
}

TEST(Adir, InvalidConfig) {
  AdirConfig cfg;
  cfg.p = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.p = 0.5;
  cfg.dir_bank.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(DirBank, SyntheticBankShape) {
  const auto bank = synthetic_dir_bank(32000, 512, 7);
  ASSERT_EQ(bank.size(), 8u);
  for (const auto& h : bank) {
    EXPECT_EQ(h.samples.size(), 512u);
    EXPECT_EQ(h.sample_rate, 32000);
  }
  EXPECT_EQ(synthetic_dir_bank(32000, 512, 7)[3].samples, bank[3].samples);
}

TEST(Fms, ZeroProbabilityIsBitIdentical) {
  std::mt19937_64 g(2);
  const auto x = testing::random_tensor<float>({4, 1, 8, 6}, g);
  FmsConfig cfg;
  cfg.p = 0.0;
  Rng rng(3);
  FmsDraw d;
  const auto y = freq_mixstyle(x, cfg, rng, nullptr, &d);
  EXPECT_FALSE(d.applied);
  EXPECT_EQ(y.storage(), x.storage());
}

TEST(Fms, GammaZeroTakesPartnerStatistics) {
  std::mt19937_64 g(4);
  TensorF x({4, 2, 6, 10});
  for (std::size_t n = 0; n < 4; ++n)
    for (std::size_t i = 0; i < 120; ++i) x[n * 120 + i] = static_cast<float>(n + (n + 1) * std::sin(0.7 * i + n));
  FmsConfig cfg;
  cfg.p = 1.0;
  FmsDraw force{true, {0, 0, 0, 0}, {2, 3, 0, 1}};
  Rng rng(5);
  const auto y = freq_mixstyle(x, cfg, rng, &force);
  for (std::size_t n = 0; n < 4; ++n) {
    const auto got = frequency_stats(y, n, cfg.epsilon);
    const auto want = frequency_stats(x, force.partner[n], cfg.epsilon);
    for (std::size_t f = 0; f < 6; ++f) {
      EXPECT_NEAR(got[f].first, want[f].first, 1e-4);
      EXPECT_NEAR(got[f].second, want[f].second, 1e-4);
    }
  }
}

TEST(Fms, GammaOneIsNearIdentity) {
  std::mt19937_64 g(6);
  const auto x = testing::random_tensor<float>({3, 1, 5, 8}, g);
  FmsConfig cfg;
  FmsDraw force{true, {1, 1, 1}, {1, 2, 0}};
  Rng rng(7);
  const auto y = freq_mixstyle(x, cfg, rng, &force);
  EXPECT_LE(testing::max_abs_diff(x, y), 1e-5);
}

TEST(Fms, DrawsArePermutations) {
  std::mt19937_64 g(8);
  const auto x = testing::random_tensor<float>({6, 1, 4, 4}, g);
  FmsConfig cfg;
  cfg.p = 1.0;
  Rng rng(9);
  FmsDraw d;
  freq_mixstyle(x, cfg, rng, nullptr, &d);
  ASSERT_TRUE(d.applied);
  std::vector<std::size_t> sorted = d.partner;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(6);
  std::iota(iota.begin(), iota.end(), std::size_t{0});
  EXPECT_EQ(sorted, iota);
  for (double gm : d.gamma) {
    EXPECT_GE(gm, 0.0);
    EXPECT_LE(gm, 1.0);
  }
}

TEST(Fms, SingleSampleBatchPassesThrough) {
  set_warnings_quiet(true);
  std::mt19937_64 g(10);
  const auto x = testing::random_tensor<float>({1, 1, 4, 4}, g);
  FmsConfig cfg;
  cfg.p = 1.0;
  Rng rng(11);
  EXPECT_EQ(freq_mixstyle(x, cfg, rng).storage(), x.storage());
  set_warnings_quiet(false);
}

TEST(Roll, CircularShift) {
  TensorF x({1, 1, 1, 5}, std::vector<float>{0, 1, 2, 3, 4});
  EXPECT_EQ(roll_time(x, 2).storage(), (std::vector<float>{3, 4, 0, 1, 2}));
  EXPECT_EQ(roll_time(x, -1).storage(), (std::vector<float>{1, 2, 3, 4, 0}));
  EXPECT_EQ(roll_time(x, 5).storage(), x.storage());
}

TEST(Roll, PreservesMultiset) {
  std::mt19937_64 g(12);
  const auto x = testing::random_tensor<float>({1, 1, 3, 16}, g);
  Rng rng(13);
  auto y = time_roll(x, 8, rng);
  auto a = x.storage(), b = y.storage();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(Mask, BandSetToSampleMean) {
  TensorF x({1, 1, 4, 2}, std::vector<float>{1, 1, 2, 2, 3, 3, 6, 6});
  const auto y = mask_frequency(x, 1, 2);
  EXPECT_EQ(y.storage(), (std::vector<float>{1, 1, 3, 3, 3, 3, 6, 6}));
  EXPECT_THROW(mask_frequency(x, 3, 2), DimensionError);
}

TEST(Mask, RandomWidthBounded) {
  std::mt19937_64 g(14);
  const auto x = testing::random_tensor<float>({1, 1, 32, 4}, g, 1.0, 2.0);
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    const auto y = freq_mask(x, 8, rng);
    std::size_t changed_rows = 0;
    for (std::size_t f = 0; f < 32; ++f) changed_rows += y.at(0, 0, f, 0) != x.at(0, 0, f, 0) ? 1 : 0;
    EXPECT_LE(changed_rows, 8u);
  }
}

TEST(Biquad, ShelfDcAndNyquistGains) {
  auto gain_at = [](const Biquad& b, double w) {
    const std::complex<double> z = std::polar(1.0, -w);
    return std::abs((b.b0 + b.b1 * z + b.b2 * z * z) / (1.0 + b.a1 * z + b.a2 * z * z));
  };
  const auto ls = Biquad::lowshelf(32000, 300, 6.0);
  EXPECT_NEAR(20 * std::log10(gain_at(ls, 0.0)), 6.0, 1e-9);
  EXPECT_NEAR(20 * std::log10(gain_at(ls, std::numbers::pi)), 0.0, 1e-6);
  const auto pk = Biquad::peaking(32000, 1000, 1.0, -8.0);
  EXPECT_NEAR(20 * std::log10(gain_at(pk, 2 * std::numbers::pi * 1000 / 32000)), -8.0, 1e-9);
  const auto bp = Biquad::bandpass(32000, 2000, 1.4);
  EXPECT_NEAR(gain_at(bp, 2 * std::numbers::pi * 2000 / 32000), 1.0, 1e-9);
  EXPECT_NEAR(gain_at(bp, 0.0), 0.0, 1e-9);
}

}  // namespace
}  // namespace flexinet
