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

#include <fstream>
#include <set>

#include "flexinet/augment.hpp"
#include "flexinet/dataset.hpp"
#include "flexinet/errors.hpp"
#include "flexinet/log.hpp"
#include "json.hpp"
#include "testing.hpp"

namespace flexinet {
namespace {

ClipRecord rec(int scene, Device d, Split s = Split::test) {
  ClipRecord r;
  r.clip_id = "c" + std::to_string(scene) + device_name(d);
  r.scene = scene;
  r.device = d;
  r.split = s;
  return r;
}

SyntheticCorpusSpec small_spec() {
  SyntheticCorpusSpec s;
  s.train_clips_per_cell = 1;
  s.test_clips_per_cell = 1;
  s.unused_clips_per_cell = 1;
  return s;
}

TEST(Labels, ParseAndName) {
  EXPECT_EQ(parse_device("S4"), Device::S4);
  EXPECT_EQ(parse_device(" a "), Device::A);
  EXPECT_EQ(device_name(Device::S6), "S6");
  EXPECT_THROW(parse_device("d"), FormatError);
  EXPECT_EQ(parse_split("evaluate"), Split::test);
  EXPECT_THROW(parse_split("dev"), FormatError);
  EXPECT_EQ(parse_scene("street_traffic"), 8);
  EXPECT_EQ(scene_names()[0], "airport");
  EXPECT_THROW(parse_scene("beach"), FormatError);
  EXPECT_TRUE(is_unseen_device(Device::S5));
  EXPECT_FALSE(is_unseen_device(Device::S3));
}

TEST(Evaluate, MacroIsMeanOverDevicesPresent) {
  // A: 2/2 correct, B: 1/2, S4: 0/1.
  std::vector<ClipRecord> r = {rec(0, Device::A), rec(1, Device::A), rec(2, Device::B), rec(3, Device::B),
                               rec(4, Device::S4)};
  const auto e = evaluate({0, 1, 2, 0, 9}, r);
  EXPECT_DOUBLE_EQ(e.device_accuracy[0], 1.0);
  EXPECT_DOUBLE_EQ(e.device_accuracy[1], 0.5);
  EXPECT_DOUBLE_EQ(e.macro_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(e.overall_accuracy, 0.6);
  EXPECT_DOUBLE_EQ(e.unseen_accuracy, 0.0);
  EXPECT_EQ(e.confusion[3][0], 1u);
  EXPECT_EQ(e.total, 5u);
  const auto j = nlohmann::json::parse(e.to_json());
  EXPECT_DOUBLE_EQ(j["macro_accuracy"].get<double>(), 0.5);
  EXPECT_NE(e.to_text().find("ACC"), std::string::npos);
}

TEST(Evaluate, RejectsBadInput) {
  std::vector<ClipRecord> r = {rec(0, Device::A)};
  EXPECT_THROW(evaluate({}, {}), ConfigError);
  EXPECT_THROW(evaluate({0, 1}, r), DimensionError);
  EXPECT_THROW(evaluate({10}, r), std::out_of_range);
}

TEST(Energy, HistogramBinsAndEdges) {
  const auto h = energy_histogram({0.0, 1.0, 2.0, 3.0, 4.0}, 4);
  EXPECT_EQ(h.edges, (std::vector<double>{0, 1, 2, 3, 4}));
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{1, 1, 1, 2}));
  EXPECT_DOUBLE_EQ(h.mean, 2.0);
  const auto z = energy_histogram({0.0, 0.0}, 3);
  EXPECT_EQ(z.counts, (std::vector<std::size_t>{2}));
  EXPECT_THROW(energy_histogram(std::vector<double>{1.0}, 0), ConfigError);
}

TEST(Synthetic, CountsAndSplitDiscipline) {
  const auto records = generate_synthetic_corpus(small_spec());
  const auto c = count_splits(records);
  EXPECT_EQ(c.train, 10u * 6);
  EXPECT_EQ(c.test, 10u * 9);
  EXPECT_EQ(c.unused, 10u);
  std::set<std::string> ids;
  for (const auto& r : records) {
    ids.insert(r.clip_id);
    if (r.split == Split::train) EXPECT_FALSE(is_unseen_device(r.device)) << r.clip_id;
    ASSERT_TRUE(r.audio);
    EXPECT_EQ(r.audio->samples.size(), 32000u);
  }
  EXPECT_EQ(ids.size(), records.size());
  EXPECT_NO_THROW(check_split_discipline(records));
}

TEST(Synthetic, Deterministic) {
  const auto a = generate_synthetic_corpus(small_spec());
  const auto b = generate_synthetic_corpus(small_spec());
  for (std::size_t i = 0; i < a.size(); i += 17) EXPECT_EQ(a[i].audio->samples, b[i].audio->samples);
  auto other = small_spec();
  other.seed = 99;
  EXPECT_NE(generate_synthetic_corpus(other)[0].audio->samples, a[0].audio->samples);
}

TEST(Synthetic, SamplesBoundedAndLoudnessStraddlesAdirGate) {
  SyntheticCorpusSpec s = small_spec();
  s.test_clips_per_cell = 2;
  const auto records = generate_synthetic_corpus(s);
  std::size_t loud = 0;
  for (const auto& r : records) {
    for (float v : r.audio->samples) ASSERT_LE(std::abs(v), 1.0f);
    loud += clip_energy(r.audio->samples) > 323.0 ? 1 : 0;
  }
  const double frac = static_cast<double>(loud) / static_cast<double>(records.size());
  EXPECT_GT(frac, 0.15);
  EXPECT_LT(frac, 0.85);
}

TEST(Synthetic, DevicesColorTheSameScene) {
  const Waveform base = synthesize_scene(3, 7, 32000, 32000);
  Waveform a = base, s5 = base;
  apply_device(a, Device::A, 7);
  apply_device(s5, Device::S5, 7);
  double diff = 0;
  for (std::size_t i = 0; i < base.samples.size(); ++i) diff += std::abs(a.samples[i] - s5.samples[i]);
  EXPECT_GT(diff / 32000.0, 1e-3);
}

TEST(SplitDiscipline, UnseenDeviceInTrainRejected) {
  std::vector<ClipRecord> r = {rec(0, Device::A, Split::train), rec(1, Device::S6, Split::train)};
  EXPECT_THROW(check_split_discipline(r), ConfigError);
}

TEST(TauMetadata, WrittenCorpusReadsBack) {
  testing::TempDir dir("corpus");
  const auto written = write_synthetic_corpus(small_spec(), dir.path());
  const auto loaded = load_tau_metadata(dir / "meta.csv");
  ASSERT_EQ(loaded.size(), written.size());
  for (std::size_t i = 0; i < loaded.size(); i += 23) {
    EXPECT_EQ(loaded[i].scene, written[i].scene);
    EXPECT_EQ(loaded[i].device, written[i].device);
    EXPECT_EQ(loaded[i].split, written[i].split);
    const auto w = load_audio(loaded[i]);
    ASSERT_EQ(w.samples.size(), written[i].audio->samples.size());
    for (std::size_t k = 0; k < w.samples.size(); k += 997) EXPECT_NEAR(w.samples[k], written[i].audio->samples[k], 1.0 / 32000);
  }
}

TEST(TauMetadata, InfersSplitWithoutColumn) {
  set_warnings_quiet(true);
  testing::TempDir dir("meta");
  std::ofstream(dir / "meta.csv") << "filename,scene_label,source_label\n"
                                     "audio/park-lyon-1-a.wav,park,a\n"
                                     "audio/bus-oslo-2-s5.wav,bus,s5\n";
  const auto r = load_tau_metadata(dir / "meta.csv");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].split, Split::train);
  EXPECT_EQ(r[1].split, Split::test);
  EXPECT_EQ(r[0].scene, parse_scene("park"));
  EXPECT_EQ(r[0].path, dir / "audio/park-lyon-1-a.wav");
  set_warnings_quiet(false);
}

TEST(TauMetadata, ErrorsNameFileAndLine) {
  testing::TempDir dir("meta");
  std::ofstream(dir / "bad.csv") << "filename\tscene_label\tsource_label\n"
                                    "a.wav\tpark\ta\n"
                                    "b.wav\tbeach\ta\n";
  try {
    load_tau_metadata(dir / "bad.csv");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.csv:3"), std::string::npos) << e.what();
  }
  std::ofstream(dir / "nohdr.csv") << "a.wav\tpark\ta\n";
  // Without a header the TAU column order is assumed.
  EXPECT_EQ(load_tau_metadata(dir / "nohdr.csv").size(), 1u);
  EXPECT_THROW(load_tau_metadata(dir / "missing.csv"), FormatError);
}

TEST(TauMetadata, FullCorpusCountsChecked) {
  set_warnings_quiet(true);
  EXPECT_TRUE(check_full_corpus_counts({kTauTrainClips, kTauTestClips, 0}));
  EXPECT_FALSE(check_full_corpus_counts({kTauTrainClips + 5, kTauTestClips - 5, 0}));
  set_warnings_quiet(false);
}

}  // namespace
}  // namespace flexinet
