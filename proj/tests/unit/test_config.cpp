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

#include <cstdlib>
#include <fstream>

#include "flexinet/config.hpp"
#include "flexinet/errors.hpp"
#include "testing.hpp"

namespace flexinet {
namespace {

// Scoped FLEXINET_SEED.
class SeedEnv {
 public:
  explicit SeedEnv(const char* v) {
    if (v) setenv("FLEXINET_SEED", v, 1);
    else unsetenv("FLEXINET_SEED");
  }
  ~SeedEnv() { unsetenv("FLEXINET_SEED"); }
};

TEST(Config, DefaultsRoundTripThroughJson) {
  SeedEnv env(nullptr);
  const RunConfig d = load_run_config(std::nullopt, {});
  const RunConfig r = run_config_from_json(to_json(d));
  EXPECT_EQ(to_json(r), to_json(d));
  EXPECT_EQ(d.arch.name, "sm-a");
  EXPECT_EQ(d.train.seed, 42u);
}

TEST(Config, OverridesParseJsonValues) {
  SeedEnv env(nullptr);
  const auto c = load_run_config(std::nullopt, {"train.epochs=3", "augment.fms.enabled=true",
                                                "augment.fms.p=0.25", "data.source=synthetic",
                                                "distill.schedule=[1.0, 0.5]"});
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_TRUE(c.augment.fms_enabled);
  EXPECT_DOUBLE_EQ(c.augment.fms.p, 0.25);
  ASSERT_TRUE(c.distill.kd.schedule);
  EXPECT_DOUBLE_EQ(c.distill.kd.schedule->second, 0.5);
}

TEST(Config, UnknownKeysRejectedWithPath) {
  SeedEnv env(nullptr);
  try {
    load_run_config(std::nullopt, {"train.epoch=3"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("train.epoch"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_run_config(std::nullopt, {"nonsense"}), ConfigError);
}

TEST(Config, TypeMismatchesRejected) {
  SeedEnv env(nullptr);
  EXPECT_THROW(load_run_config(std::nullopt, {"train.epochs=\"ten\""}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"train.epochs=2.5"}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"train.epochs=-1"}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"augment.fms.enabled=3"}), ConfigError);
  EXPECT_NO_THROW(load_run_config(std::nullopt, {"train.learning_rate=1"}));
}

TEST(Config, ValidationCatchesBadValues) {
  SeedEnv env(nullptr);
  EXPECT_THROW(load_run_config(std::nullopt, {"train.epochs=0"}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"augment.adir.p=1.5"}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"distill.enabled=true"}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"data.source=cloud"}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"data.source=tau"}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"quant.start_fraction=0.95"}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, {"distill.fusion=median"}), ConfigError);
}

TEST(Config, PresetResetsArch) {
  SeedEnv env(nullptr);
  const auto c = load_run_config(std::nullopt, {"arch.preset=sm-c", "arch.resnorm_placement=none"});
  EXPECT_EQ(c.arch.name, "sm-c");
  EXPECT_EQ(c.arch.stages.size(), reference_config("sm-c").stages.size());
  EXPECT_EQ(c.arch.resnorm_placement, ResNormPlacement::none);
  EXPECT_THROW(load_run_config(std::nullopt, {"arch.preset=sm-q"}), ConfigError);
}

TEST(Config, FileThenOverridesThenEnv) {
  testing::TempDir dir("cfg");
  std::ofstream(dir / "c.json") << "{\n  // comment\n  \"train\": {\"epochs\": 7, \"seed\": 5},\n"
                                   "  \"augment\": {\"adir\": {\"enabled\": true}}\n}\n";
  {
    SeedEnv env(nullptr);
    const auto c = load_run_config(dir / "c.json", {"train.epochs=9"});
    EXPECT_EQ(c.train.epochs, 9u);
    EXPECT_EQ(c.train.seed, 5u);
    EXPECT_TRUE(c.augment.adir_enabled);
  }
  {
    SeedEnv env("1234");
    EXPECT_EQ(load_run_config(dir / "c.json", {"train.seed=8"}).train.seed, 1234u);
  }
  {
    SeedEnv env("12x");
    EXPECT_THROW(load_run_config(dir / "c.json", {}), ConfigError);
  }
}

TEST(Config, MalformedFileIsConfigError) {
  SeedEnv env(nullptr);
  testing::TempDir dir("cfg");
  std::ofstream(dir / "bad.json") << "{ \"train\": ";
  EXPECT_ANY_THROW(load_run_config(dir / "bad.json", {}));
  EXPECT_ANY_THROW(load_run_config(dir / "missing.json", {}));
}

TEST(Config, ResolvedConfigWritten) {
  SeedEnv env(nullptr);
  testing::TempDir dir("cfg");
  const auto c = load_run_config(std::nullopt, {"train.epochs=4"});
  write_resolved_config(c, dir / "out");
  std::ifstream in(dir / "out" / "resolved_config.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["train"]["epochs"], 4);
  EXPECT_EQ(run_config_from_json(j).train.epochs, 4u);
}

TEST(Config, FusionModeNames) {
  EXPECT_EQ(parse_fusion_mode("fitted"), FusionMode::fitted);
  EXPECT_EQ(parse_fusion_mode("averaged"), FusionMode::uniform);
  EXPECT_EQ(to_string(FusionMode::none), "none");
}

}  // namespace
}  // namespace flexinet
