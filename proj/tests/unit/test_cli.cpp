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
#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "flexinet/wav.hpp"
#include "flexinet/container.hpp"
#include "flexinet/dataset.hpp"
#include "json.hpp"
#include "testing.hpp"

namespace flexinet {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + FLEXINET_CLI_PATH + std::string(" ") + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

const char* kTiny =
    "--set data.synthetic.train_clips_per_cell=1 data.synthetic.test_clips_per_cell=1 "
    "data.synthetic.unused_clips_per_cell=0 train.epochs=1 train.batch_size=16";

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate --out x").code, 1);
  EXPECT_EQ(run("count").code, 1);  // --out missing
}

TEST(Cli, CountPrintsFrozenValues) {
  testing::TempDir dir("cli");
  const auto r = run("count --out " + (dir / "c").string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("sm-a: 12915 params"), std::string::npos) << r.out;
  EXPECT_EQ(read_json(dir / "c" / "complexity.json")["params"], 12915);
  const auto d = run("count --set arch.preset=sm-d --out " + (dir / "d").string());
  EXPECT_NE(d.out.find("131627"), std::string::npos) << d.out;
}

TEST(Cli, ConfigErrorsExitOne) {
  testing::TempDir dir("cli");
  auto r = run("count --set train.epoch=3 --out " + (dir / "o").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("train.epoch"), std::string::npos) << r.out;
  std::ofstream(dir / "bad.json") << "{ nope";
  EXPECT_EQ(run("count --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()).code, 1);
  EXPECT_EQ(run("count --config " + (dir / "absent.json").string() + " --out " + (dir / "o").string()).code, 1);
  EXPECT_EQ(run("eval --model " + (dir / "none.flxn").string() + " --out " + (dir / "o").string()).code, 1);
  EXPECT_EQ(run("count --out " + (dir / "o").string(), "FLEXINET_SEED=abc").code, 1);
}

TEST(Cli, SeedFromEnvironmentIsResolved) {
  testing::TempDir dir("cli");
  ASSERT_EQ(run("count --set train.seed=3 --out " + dir.path().string(), "FLEXINET_SEED=77").code, 0);
  EXPECT_EQ(read_json(dir / "resolved_config.json")["train"]["seed"], 77);
}

TEST(Cli, FeaturesAreIdempotentAndReportCorruptFiles) {
  testing::TempDir dir("cli");
  fs::create_directories(dir / "in" / "sub");
  write_wav_pcm16(dir / "in" / "a.wav", synthesize_scene(1, 1, 32000, 32000));
  write_wav_pcm16(dir / "in" / "sub" / "b.wav", synthesize_scene(2, 2, 16000, 16000));
  std::ofstream(dir / "in" / "broken.wav") << "RIFF....WAVEjunk";
  const std::string args = "features --input " + (dir / "in").string() + " --out ";
  const auto r1 = run(args + (dir / "o1").string());
  EXPECT_EQ(r1.code, 1) << r1.out;
  EXPECT_NE(slurp(dir / "o1" / "failures.txt").find("broken.wav"), std::string::npos);
  ASSERT_TRUE(fs::exists(dir / "o1" / "sub" / "b.flxf"));
  EXPECT_EQ(load_features(dir / "o1" / "a.flxf").shape(), (Shape{1, 1, 256, 64}));
  run(args + (dir / "o2").string());
  EXPECT_EQ(slurp(dir / "o1" / "a.flxf"), slurp(dir / "o2" / "a.flxf"));
  EXPECT_EQ(slurp(dir / "o1" / "sub" / "b.flxf"), slurp(dir / "o2" / "sub" / "b.flxf"));
  fs::remove(dir / "in" / "broken.wav");
  EXPECT_EQ(run(args + (dir / "o3").string()).code, 0);
}

TEST(Cli, TrainQuantizeEvalPipeline) {
  testing::TempDir dir("cli");
  const std::string tiny = kTiny;
  auto r = run("train " + tiny + " --out " + (dir / "train").string());
  ASSERT_EQ(r.code, 0) << r.out;
  ASSERT_TRUE(fs::exists(dir / "train" / "model.flxn"));
  EXPECT_TRUE(fs::exists(dir / "train" / "metrics.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "train" / "eval_test.json"));

  SyntheticCorpusSpec s;
  s.train_clips_per_cell = 1;
  s.test_clips_per_cell = 1;
  s.unused_clips_per_cell = 0;
  std::ofstream list(dir / "calib.txt");
  for (const auto& rec : generate_synthetic_corpus(s))
    if (rec.split == Split::train) list << rec.clip_id << "\n";
  list.close();

  const std::string model = (dir / "train" / "model.flxn").string();
  EXPECT_EQ(run("quantize --model " + model + " --out " + (dir / "q0").string()).code, 1);
  r = run("quantize " + tiny + " --model " + model + " --calibration " + (dir / "calib.txt").string() + " --out " +
          (dir / "q").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto rep = read_json(dir / "q" / "quantize_report.json");
  EXPECT_EQ(rep["param_count"], 12915);
  EXPECT_EQ(container_kind(dir / "q" / "model_int8.flxn"), kInt8ModelKind);

  r = run("eval " + tiny + " --model " + (dir / "q" / "model_int8.flxn").string() + " --split test --out " +
          (dir / "e").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(read_json(dir / "e" / "eval.json")["total"], 90);
  EXPECT_EQ(run("eval " + tiny + " --model " + model + " --split unused --out " + (dir / "e2").string()).code, 1);
}

TEST(Cli, DistillFitWritesFusion) {
  testing::TempDir dir("cli");
  const std::string tiny = kTiny;
  ASSERT_EQ(run("make-teachers " + tiny + " --out " + (dir / "t").string()).code, 0);
  const auto r = run("distill-fit " + tiny + " --logits " + (dir / "t" / "teachers.txt").string() + " --out " +
                     (dir / "f").string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "f" / "fusion.json"));
  EXPECT_EQ(run("distill-fit " + tiny + " --out " + (dir / "g").string()).code, 1);
}

}  // namespace
}  // namespace flexinet
