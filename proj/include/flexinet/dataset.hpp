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

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flexinet/wav.hpp"

namespace flexinet {

enum class Device { A, B, C, S1, S2, S3, S4, S5, S6 };
constexpr std::size_t kNumDevices = 9;

std::string device_name(Device d);
/// Accepts "a".."c", "s1".."s6" in any case.
Device parse_device(const std::string& token);
/// S4, S5 and S6 never appear in training data.
inline bool is_unseen_device(Device d) { return d == Device::S4 || d == Device::S5 || d == Device::S6; }

enum class Split { train, test, unused };
std::string split_name(Split s);
Split parse_split(const std::string& token);

/// TAU Urban Acoustic Scenes class names, index = label.
const std::array<std::string, 10>& scene_names();
int parse_scene(const std::string& token);

struct ClipRecord {
  std::string clip_id;
  std::filesystem::path path;                // empty for in-memory clips
  std::shared_ptr<const Waveform> audio;     // set for in-memory clips
  int scene = 0;
  Device device = Device::A;
  std::string city;
  Split split = Split::train;
};

/// Waveform of a record, from memory or from its WAV file.
Waveform load_audio(const ClipRecord& r);

/// Throws ConfigError if an unseen device is assigned to the training split.
void check_split_discipline(const std::vector<ClipRecord>& records);

/// Reads TAU-style metadata: tab- or comma-separated with a header naming
/// `filename`, `scene_label` and `source_label` (or `device`), optionally
/// `identifier` and `split`. Without a split column, S4-S6 go to test and the
/// rest to train. Paths are resolved relative to `audio_root` (default: the
/// metadata file's directory).
std::vector<ClipRecord> load_tau_metadata(const std::filesystem::path& meta,
                                          const std::filesystem::path& audio_root = {});

struct SplitCounts {
  std::size_t train = 0, test = 0, unused = 0;
};
SplitCounts count_splits(const std::vector<ClipRecord>& records);
/// Official development-set sizes.
constexpr std::size_t kTauTrainClips = 139620;
constexpr std::size_t kTauTestClips = 29680;
/// When the record count reaches the full corpus size, warns unless the split
/// sizes equal the official ones. Returns true when they match.
bool check_full_corpus_counts(const SplitCounts& c);

struct SyntheticCorpusSpec {
  std::size_t train_clips_per_cell = 8;   // per (scene, device) for A, B, C, S1-S3
  std::size_t test_clips_per_cell = 6;    // per (scene, device) for all nine devices
  std::size_t unused_clips_per_cell = 4;  // per scene, device A only
  std::uint64_t seed = 1234;
  int sample_rate = 32000;
  std::size_t clip_samples = 32000;
  void validate() const;
};

/// Colorless scene audio of one clip (deterministic in clip_seed).
Waveform synthesize_scene(int scene, std::uint64_t clip_seed, int sample_rate, std::size_t samples);
/// Applies the fixed EQ, impulse response, gain and noise floor of a device.
void apply_device(Waveform& w, Device d, std::uint64_t clip_seed);

/// In-memory corpus, records ordered by split, device, scene, index.
std::vector<ClipRecord> generate_synthetic_corpus(const SyntheticCorpusSpec& spec);
/// Writes 16-bit WAVs under dir/audio and dir/meta.csv; returns the records.
std::vector<ClipRecord> write_synthetic_corpus(const SyntheticCorpusSpec& spec,
                                               const std::filesystem::path& dir);

struct EvalReport {
  std::array<double, kNumDevices> device_accuracy{};
  std::array<std::size_t, kNumDevices> device_count{};
  std::array<double, 10> scene_accuracy{};
  std::array<std::size_t, 10> scene_count{};
  std::array<std::array<std::size_t, 10>, 10> confusion{};  // [true][predicted]
  double macro_accuracy = 0.0;    // unweighted mean over devices present
  double overall_accuracy = 0.0;  // clip-weighted
  double unseen_accuracy = 0.0;   // mean over S4-S6 present
  std::size_t total = 0;

  std::string to_json() const;
  std::string to_text() const;
};

/// predictions[i] is the predicted class of records[i].
EvalReport evaluate(const std::vector<int>& predictions, const std::vector<ClipRecord>& records);

struct EnergyHistogram {
  std::vector<double> edges;  // bins + 1 values
  std::vector<std::size_t> counts;
  double mean = 0.0;
  std::size_t total = 0;
};

EnergyHistogram energy_histogram(const std::vector<double>& energies, std::size_t bins);
EnergyHistogram energy_histogram(const std::vector<ClipRecord>& records, std::size_t bins);

}  // namespace flexinet
