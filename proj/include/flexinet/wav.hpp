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
#include <span>
#include <vector>

namespace flexinet {

/// Mono audio in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 32000;
};

/// Decodes RIFF/WAVE with 16-bit PCM or 32-bit float samples. Multi-channel
/// input is downmixed by averaging. Throws FormatError on anything else.
Waveform decode_wav(std::span<const std::uint8_t> bytes);
Waveform read_wav(const std::filesystem::path& path);

/// 16-bit PCM mono encoding (round-to-nearest, saturating).
std::vector<std::uint8_t> encode_wav_pcm16(const Waveform& w);
void write_wav_pcm16(const std::filesystem::path& path, const Waveform& w);

/// Linear-interpolation resampling fallback.
Waveform resample_linear(const Waveform& w, int target_rate);

}  // namespace flexinet
