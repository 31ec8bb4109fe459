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

#include "flexinet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "flexinet/augment.hpp"
#include "flexinet/errors.hpp"
#include "flexinet/log.hpp"
#include "json.hpp"

namespace flexinet {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

constexpr std::array<const char*, kNumDevices> kDeviceNames = {"A", "B", "C", "S1", "S2", "S3", "S4", "S5", "S6"};

}  // namespace

std::string device_name(Device d) { return kDeviceNames[static_cast<std::size_t>(d)]; }

Device parse_device(const std::string& token) {
  const std::string t = lower(trim(token));
  for (std::size_t i = 0; i < kNumDevices; ++i) {
    if (t == lower(kDeviceNames[i])) return static_cast<Device>(i);
  }
  throw FormatError("unknown device '" + token + "' (expected a, b, c, s1..s6)");
}

std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::unused: return "unused";
  }
  return "train";
}

Split parse_split(const std::string& token) {
  const std::string t = lower(trim(token));
  if (t == "train") return Split::train;
  if (t == "test" || t == "evaluate") return Split::test;
  if (t == "unused") return Split::unused;
  throw FormatError("unknown split '" + token + "' (expected train, test or unused)");
}

const std::array<std::string, 10>& scene_names() {
  static const std::array<std::string, 10> names = {
      "airport", "bus", "metro", "metro_station", "park", "public_square", "shopping_mall",
      "street_pedestrian", "street_traffic", "tram"};
  return names;
}

int parse_scene(const std::string& token) {
  const std::string t = lower(trim(token));
  const auto& n = scene_names();
  for (std::size_t i = 0; i < n.size(); ++i)
    if (t == n[i]) return static_cast<int>(i);
  throw FormatError("unknown scene label '" + token + "'");
}

Waveform load_audio(const ClipRecord& r) {
  if (r.audio) return *r.audio;
  if (r.path.empty()) throw ConfigError("clip '" + r.clip_id + "' has neither audio nor a path");
  return read_wav(r.path);
}

void check_split_discipline(const std::vector<ClipRecord>& records) {
  for (const auto& r : records) {
    if (r.split == Split::train && is_unseen_device(r.device)) {
      throw ConfigError("clip '" + r.clip_id + "' from unseen device " + device_name(r.device) +
                        " is assigned to the training split");
    }
  }
}

std::vector<ClipRecord> load_tau_metadata(const std::filesystem::path& meta,
                                          const std::filesystem::path& audio_root) {
  std::ifstream in(meta);
  if (!in) throw FormatError("metadata: cannot open " + meta.string());
  const std::filesystem::path root = audio_root.empty() ? meta.parent_path() : audio_root;
  std::vector<ClipRecord> out;
  std::string line;
  std::size_t lineno = 0;
  int col_file = 0, col_scene = 1, col_device = 2, col_id = -1, col_split = -1;
  bool header_done = false, inferred_split = false;
  auto fail = [&](const std::string& msg) {
    throw FormatError(meta.string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, delim);) cols.push_back(trim(c));
    if (!header_done) {
      header_done = true;
      if (lower(cols[0]) == "filename") {
        col_scene = col_device = -1;
        for (std::size_t i = 0; i < cols.size(); ++i) {
          const std::string h = lower(cols[i]);
          if (h == "scene_label" || h == "scene") col_scene = static_cast<int>(i);
          if (h == "source_label" || h == "device") col_device = static_cast<int>(i);
          if (h == "identifier") col_id = static_cast<int>(i);
          if (h == "split") col_split = static_cast<int>(i);
        }
        if (col_scene < 0 || col_device < 0) fail("header lacks scene_label or source_label column");
        continue;
      }
      if (cols.size() >= 4) col_split = 3;
    }
    const int need = std::max({col_file, col_scene, col_device, col_id, col_split});
    if (static_cast<int>(cols.size()) <= need) {
      fail("expected at least " + std::to_string(need + 1) + " columns, got " + std::to_string(cols.size()));
    }
    ClipRecord r;
    const std::string& file = cols[static_cast<std::size_t>(col_file)];
    if (file.empty()) fail("empty filename");
    r.path = root / file;
    r.clip_id = std::filesystem::path(file).stem().string();
    try {
      r.scene = parse_scene(cols[static_cast<std::size_t>(col_scene)]);
      r.device = parse_device(cols[static_cast<std::size_t>(col_device)]);
      if (col_split >= 0) {
        r.split = parse_split(cols[static_cast<std::size_t>(col_split)]);
      } else {
        r.split = is_unseen_device(r.device) ? Split::test : Split::train;
        inferred_split = true;
      }
    } catch (const FormatError& e) {
      fail(e.what());
    }
    if (r.split == Split::train && is_unseen_device(r.device)) {
      fail("device " + device_name(r.device) + " may not appear in the training split");
    }
    std::string ident = col_id >= 0 ? cols[static_cast<std::size_t>(col_id)] : "";
    if (ident.empty()) {
      // airport-lisbon-1000-40000-a.wav -> lisbon
      const std::string stem = r.clip_id;
      const auto a = stem.find('-');
      const auto b = a == std::string::npos ? a : stem.find('-', a + 1);
      ident = a == std::string::npos ? "" : stem.substr(a + 1, b == std::string::npos ? b : b - a - 1);
    }
    r.city = ident.substr(0, ident.find('-'));
    out.push_back(std::move(r));
  }
  if (out.empty()) warn("metadata: " + meta.string() + " contains no records");
  if (inferred_split) warn("metadata: no split column; S4-S6 assigned to test, all other devices to train");
  check_full_corpus_counts(count_splits(out));
  return out;
}

SplitCounts count_splits(const std::vector<ClipRecord>& records) {
  SplitCounts c;
  for (const auto& r : records) {
    if (r.split == Split::train) ++c.train;
    if (r.split == Split::test) ++c.test;
    if (r.split == Split::unused) ++c.unused;
  }
  return c;
}

bool check_full_corpus_counts(const SplitCounts& c) {
  const bool ok = c.train == kTauTrainClips && c.test == kTauTestClips;
  if (c.train + c.test + c.unused >= kTauTrainClips + kTauTestClips && !ok) {
    warn("metadata: full-size corpus but split sizes are train=" + std::to_string(c.train) +
         " test=" + std::to_string(c.test) + " (expected " + std::to_string(kTauTrainClips) + " / " +
         std::to_string(kTauTestClips) + ")");
  }
  return ok;
}

void SyntheticCorpusSpec::validate() const {
  if (sample_rate <= 0) throw ConfigError("data.synthetic: sample_rate must be positive");
  if (clip_samples == 0) throw ConfigError("data.synthetic: clip_samples must be positive");
}

namespace {

struct SceneSignature {
  double tone1, tone2, noise_center, am_rate, pulse_period;
};

SceneSignature signature(int k) {
  SceneSignature s;
  s.tone1 = 150.0 * std::pow(1.5, k);
  s.tone2 = 150.0 * std::pow(1.5, (k + 4) % 10) * 1.12;
  s.noise_center = 400.0 * std::pow(1.4, (3 * k) % 10);
  s.am_rate = 1.5 + 0.8 * k;
  s.pulse_period = 0.12 + 0.04 * ((7 * k) % 10);
  return s;
}

struct DeviceProfile {
  double gain_db;
  double ls_f, ls_g, hs_f, hs_g;
  double p1_f, p1_q, p1_g, p2_f, p2_q, p2_g;
  std::size_t ir_len;
  double ir_mix;
  double noise_rms;
};

// Seen devices stay within a few dB of flat; S4-S6 carry stronger, differently
// placed resonances and a more colored impulse response.
const DeviceProfile& profile(Device d) {
  static const std::array<DeviceProfile, kNumDevices> p = {{
      {0.0, 250, 0.0, 5000, 0.0, 1000, 1.0, 0.0, 3000, 1.0, 0.0, 0, 0.0, 0.001},        // A
      {2.0, 300, 4.0, 4000, -5.0, 1500, 1.0, 3.0, 600, 1.2, -2.0, 96, 0.2, 0.002},      // B
      {-2.0, 200, -4.0, 6000, 3.0, 800, 1.2, -4.0, 2500, 1.5, 2.0, 128, 0.25, 0.002},   // C
      {1.0, 400, 3.0, 3000, -3.0, 2500, 1.5, 4.0, 400, 1.0, -3.0, 64, 0.2, 0.003},      // S1
      {-3.0, 150, -3.0, 7000, -6.0, 600, 0.8, 3.0, 4000, 1.2, 3.0, 160, 0.3, 0.002},    // S2
      {0.0, 500, 5.0, 5000, 4.0, 3000, 2.0, -5.0, 1200, 1.5, -2.0, 80, 0.25, 0.004},    // S3
      {-5.0, 350, 10.0, 2500, -12.0, 1200, 0.8, 10.0, 400, 1.5, -10.0, 384, 0.6, 0.004}, // S4
      {0.0, 250, -10.0, 4500, 10.0, 700, 0.7, -10.0, 2200, 1.2, 10.0, 448, 0.6, 0.006},  // S5
      {-4.0, 600, 8.0, 6000, -12.0, 2000, 1.0, 10.0, 250, 1.0, 8.0, 320, 0.5, 0.005},    // S6
  }};
  return p[static_cast<std::size_t>(d)];
}

Waveform device_ir(Device d, int sample_rate) {
  const auto& p = profile(d);
  Waveform h;
  h.sample_rate = sample_rate;
  Rng rng(0xde71ce00ULL + static_cast<std::uint64_t>(d));
  std::normal_distribution<double> n(0.0, 1.0);
  h.samples.resize(p.ir_len);
  const double tau = static_cast<double>(p.ir_len) / 4.0;
  double e = 0.0;
  for (std::size_t i = 1; i < p.ir_len; ++i) {
    const double v = n(rng) * std::exp(-static_cast<double>(i) / tau);
    h.samples[i] = static_cast<float>(v);
    e += v * v;
  }
  // Tail energy relative to the direct path sets how strongly the IR colors the spectrum.
  const double g = e > 0.0 ? p.ir_mix / std::sqrt(e) : 0.0;
  for (auto& v : h.samples) v = static_cast<float>(v * g);
  h.samples[0] = 1.0f;
  return h;
}

}  // namespace

Waveform synthesize_scene(int scene, std::uint64_t seed, int sample_rate, std::size_t samples) {
  if (scene < 0 || scene >= 10) throw ConfigError("synthesize_scene: scene outside [0, 9]");
  const SceneSignature sig = signature(scene);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double fs = sample_rate, two_pi = 2.0 * std::numbers::pi, nyq = 0.45 * fs;
  const auto jitter = [&](double f, double rel) { return std::min(nyq, f * (1.0 + rel * (2.0 * u(rng) - 1.0))); };

  // Class cues: an amplitude-modulated tone, a pulsed tone and a noise band.
  const double f1 = jitter(sig.tone1, 0.05), f2 = jitter(sig.tone2, 0.05), fc = jitter(sig.noise_center, 0.1);
  const double am_rate = jitter(sig.am_rate, 0.1);
  const double a1 = 0.1 + 0.4 * u(rng), a2 = 0.1 + 0.3 * u(rng), an = 0.3 + 0.7 * u(rng);
  // A distractor borrowed from another class.
  const int other = (scene + 1 + static_cast<int>(u(rng) * 9.0)) % 10;
  const SceneSignature osig = signature(other);
  const double fd = jitter(osig.tone1, 0.05), ad = 0.25 * u(rng), rd = 1.5 + 7.5 * u(rng);
  const double fdn = jitter(osig.noise_center, 0.1), adn = 0.4 * u(rng);
  const double ph1 = two_pi * u(rng), ph2 = two_pi * u(rng), pam = two_pi * u(rng), phd = two_pi * u(rng);
  const double pulse_off = sig.pulse_period * u(rng);

  std::vector<float> band(samples), dband(samples), back(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    band[i] = static_cast<float>(gauss(rng));
    dband[i] = static_cast<float>(gauss(rng));
    back[i] = static_cast<float>(gauss(rng));
  }
  for (int r = 0; r < 2; ++r) {
    Biquad::bandpass(fs, fc, 1.4).apply(band);
    Biquad::bandpass(fs, std::min(fdn, nyq), 1.4).apply(dband);
  }
  // Shared background with a random per-clip spectral tilt.
  Biquad::lowshelf(fs, 300.0, 6.0 + 12.0 * (u(rng) - 0.5)).apply(back);
  Biquad::highshelf(fs, 4000.0, -6.0 + 12.0 * (u(rng) - 0.5)).apply(back);
  const auto rms = [](const std::vector<float>& v) {
    double e = 0.0;
    for (float x : v) e += static_cast<double>(x) * x;
    return std::sqrt(e / static_cast<double>(std::max<std::size_t>(v.size(), 1)));
  };
  const double nb = 1.0 / std::max(rms(band), 1e-12), nd = 1.0 / std::max(rms(dband), 1e-12);
  const double nbg = 1.0 / std::max(rms(back), 1e-12);

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(samples);
  const double ramp = 0.01;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double am = 0.5 * (1.0 + std::sin(two_pi * am_rate * t + pam));
    const double phase = std::fmod(t + pulse_off, sig.pulse_period) / sig.pulse_period;
    const double gate = phase < 0.5 ? std::min(1.0, std::min(phase, 0.5 - phase) * sig.pulse_period / ramp) : 0.0;
    const double env_n = 0.6 + 0.4 * std::sin(two_pi * 0.5 * am_rate * t + pam + 1.0);
    const double amd = 0.5 * (1.0 + std::sin(two_pi * rd * t + phd));
    const double v = a1 * am * std::sin(two_pi * f1 * t + ph1) + a2 * gate * std::sin(two_pi * f2 * t + ph2) +
                     an * env_n * nb * band[i] + ad * amd * std::sin(two_pi * fd * t + phd) +
                     adn * nd * dband[i] + 0.5 * nbg * back[i];
    w.samples[i] = static_cast<float>(v);
  }
  const double level = rms(w.samples);
  // Loudness: RMS log-uniform in [0.03, 0.25]; the ADIR threshold 323 sits at RMS 0.1.
  const double target = 0.03 * std::pow(0.25 / 0.03, u(rng));
  const double g = level > 0.0 ? target / level : 0.0;
  for (auto& s : w.samples) s = static_cast<float>(s * g);
  return w;
}

void apply_device(Waveform& w, Device d, std::uint64_t seed) {
  const auto& p = profile(d);
  const double fs = w.sample_rate;
  if (p.ls_g != 0.0) Biquad::lowshelf(fs, p.ls_f, p.ls_g).apply(w.samples);
  if (p.hs_g != 0.0) Biquad::highshelf(fs, p.hs_f, p.hs_g).apply(w.samples);
  if (p.p1_g != 0.0) Biquad::peaking(fs, p.p1_f, p.p1_q, p.p1_g).apply(w.samples);
  if (p.p2_g != 0.0) Biquad::peaking(fs, p.p2_f, p.p2_q, p.p2_g).apply(w.samples);
  if (p.ir_len > 0) {
    const auto full = fft_convolve(w.samples, device_ir(d, w.sample_rate).samples);
    for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = static_cast<float>(full[i]);
  }
  const double g = std::pow(10.0, p.gain_db / 20.0);
  Rng rng(seed ^ 0x5eed0f0015e0ULL);
  std::normal_distribution<double> n(0.0, p.noise_rms);
  for (auto& s : w.samples) s = static_cast<float>(std::clamp(s * g + n(rng), -1.0, 1.0));
}

std::vector<ClipRecord> generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  static const std::array<const char*, 6> cities = {"lyon", "oslo", "porto", "riga", "turin", "graz"};
  std::vector<ClipRecord> out;
  std::uint64_t index = 0;
  auto make = [&](Split split, Device d, int scene, std::size_t i) {
    ClipRecord r;
    r.split = split;
    r.device = d;
    r.scene = scene;
    r.city = cities[(i + static_cast<std::size_t>(scene)) % cities.size()];
    std::ostringstream id;
    id << scene_names()[static_cast<std::size_t>(scene)] << '-' << r.city << '-' << split_name(split) << '-'
       << std::setw(4) << std::setfill('0') << i << '-' << lower(device_name(d));
    r.clip_id = id.str();
    const std::uint64_t s = clip_seed(spec.seed, index++);
    auto w = std::make_shared<Waveform>(synthesize_scene(scene, s, spec.sample_rate, spec.clip_samples));
    apply_device(*w, d, s);
    r.audio = std::move(w);
    out.push_back(std::move(r));
  };
  for (std::size_t di = 0; di < kNumDevices; ++di) {
    const auto d = static_cast<Device>(di);
    if (is_unseen_device(d)) continue;
    for (int k = 0; k < 10; ++k)
      for (std::size_t i = 0; i < spec.train_clips_per_cell; ++i) make(Split::train, d, k, i);
  }
  for (std::size_t di = 0; di < kNumDevices; ++di)
    for (int k = 0; k < 10; ++k)
      for (std::size_t i = 0; i < spec.test_clips_per_cell; ++i) make(Split::test, static_cast<Device>(di), k, i);
  for (int k = 0; k < 10; ++k)
    for (std::size_t i = 0; i < spec.unused_clips_per_cell; ++i) make(Split::unused, Device::A, k, i);
  check_split_discipline(out);
  return out;
}

std::vector<ClipRecord> write_synthetic_corpus(const SyntheticCorpusSpec& spec, const std::filesystem::path& dir) {
  auto records = generate_synthetic_corpus(spec);
  std::filesystem::create_directories(dir / "audio");
  std::ofstream meta(dir / "meta.csv", std::ios::binary);
  if (!meta) throw FormatError("cannot write " + (dir / "meta.csv").string());
  meta << "filename\tscene_label\tidentifier\tsource_label\tsplit\n";
  for (auto& r : records) {
    const std::string rel = "audio/" + r.clip_id + ".wav";
    write_wav_pcm16(dir / rel, *r.audio);
    meta << rel << '\t' << scene_names()[static_cast<std::size_t>(r.scene)] << '\t' << r.city << "-0\t"
         << lower(device_name(r.device)) << '\t' << split_name(r.split) << '\n';
    r.path = dir / rel;
  }
  if (!meta) throw FormatError("write failed for " + (dir / "meta.csv").string());
  return records;
}

EvalReport evaluate(const std::vector<int>& predictions, const std::vector<ClipRecord>& records) {
  if (records.empty()) throw ConfigError("evaluate: empty record set");
  if (predictions.size() != records.size()) {
    throw DimensionError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(records.size()) + " records");
  }
  EvalReport rep;
  std::array<std::size_t, kNumDevices> dev_ok{};
  std::array<std::size_t, 10> scene_ok{};
  std::size_t ok = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const int p = predictions[i];
    if (p < 0 || p >= 10) throw std::out_of_range("evaluate: prediction outside [0, 9]");
    const bool hit = p == r.scene;
    const auto d = static_cast<std::size_t>(r.device);
    const auto s = static_cast<std::size_t>(r.scene);
    ++rep.device_count[d];
    ++rep.scene_count[s];
    ++rep.confusion[s][static_cast<std::size_t>(p)];
    if (hit) {
      ++dev_ok[d];
      ++scene_ok[s];
      ++ok;
    }
  }
  rep.total = records.size();
  rep.overall_accuracy = static_cast<double>(ok) / static_cast<double>(rep.total);
  double macro = 0.0, unseen = 0.0;
  std::size_t present = 0, unseen_present = 0;
  for (std::size_t d = 0; d < kNumDevices; ++d) {
    if (rep.device_count[d] == 0) continue;
    rep.device_accuracy[d] = static_cast<double>(dev_ok[d]) / static_cast<double>(rep.device_count[d]);
    macro += rep.device_accuracy[d];
    ++present;
    if (is_unseen_device(static_cast<Device>(d))) {
      unseen += rep.device_accuracy[d];
      ++unseen_present;
    }
  }
  rep.macro_accuracy = macro / static_cast<double>(present);
  rep.unseen_accuracy = unseen_present ? unseen / static_cast<double>(unseen_present) : 0.0;
  for (std::size_t s = 0; s < 10; ++s) {
    if (rep.scene_count[s]) {
      rep.scene_accuracy[s] = static_cast<double>(scene_ok[s]) / static_cast<double>(rep.scene_count[s]);
    }
  }
  return rep;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json dev;
  for (std::size_t d = 0; d < kNumDevices; ++d) {
    if (device_count[d] == 0) continue;
    dev[device_name(static_cast<Device>(d))] = {{"accuracy", device_accuracy[d]}, {"clips", device_count[d]}};
  }
  j["devices"] = dev;
  nlohmann::ordered_json sc;
  for (std::size_t s = 0; s < 10; ++s) {
    sc[scene_names()[s]] = {{"accuracy", scene_accuracy[s]}, {"clips", scene_count[s]}};
  }
  j["scenes"] = sc;
  j["macro_accuracy"] = macro_accuracy;
  j["overall_accuracy"] = overall_accuracy;
  j["unseen_accuracy"] = unseen_accuracy;
  j["total"] = total;
  j["confusion"] = confusion;
  return j.dump(2);
}

std::string EvalReport::to_text() const {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  for (std::size_t d = 0; d < kNumDevices; ++d) o << std::setw(7) << device_name(static_cast<Device>(d));
  o << std::setw(8) << "ACC" << '\n';
  for (std::size_t d = 0; d < kNumDevices; ++d) {
    if (device_count[d] == 0) {
      o << std::setw(7) << "-";
    } else {
      o << std::setw(7) << 100.0 * device_accuracy[d];
    }
  }
  o << std::setw(8) << 100.0 * macro_accuracy << "\n\n";
  for (std::size_t s = 0; s < 10; ++s) {
    o << std::left << std::setw(18) << scene_names()[s] << std::right << std::setw(7) << 100.0 * scene_accuracy[s]
      << "  |";
    for (std::size_t p = 0; p < 10; ++p) o << std::setw(5) << confusion[s][p];
    o << '\n';
  }
  o << "\noverall " << 100.0 * overall_accuracy << "  unseen(S4-S6) " << 100.0 * unseen_accuracy << "  clips "
    << total << '\n';
  return o.str();
}

EnergyHistogram energy_histogram(const std::vector<double>& energies, std::size_t bins) {
  if (bins == 0) throw ConfigError("energy_histogram: bins must be positive");
  EnergyHistogram h;
  h.total = energies.size();
  if (energies.empty()) return h;
  double mx = 0.0, sum = 0.0;
  for (double e : energies) {
    mx = std::max(mx, e);
    sum += e;
  }
  h.mean = sum / static_cast<double>(energies.size());
  if (mx <= 0.0) {
    h.edges = {0.0, 0.0};
    h.counts = {energies.size()};
    return h;
  }
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = mx * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double e : energies) {
    auto b = static_cast<std::size_t>(e / mx * static_cast<double>(bins));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

EnergyHistogram energy_histogram(const std::vector<ClipRecord>& records, std::size_t bins) {
  std::vector<double> e;
  e.reserve(records.size());
  for (const auto& r : records) e.push_back(clip_energy(load_audio(r).samples));
  return energy_histogram(e, bins);
}

}  // namespace flexinet
