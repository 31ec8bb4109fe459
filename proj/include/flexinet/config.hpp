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
#include <string>
#include <vector>

#include "flexinet/augment.hpp"
#include "flexinet/dataset.hpp"
#include "flexinet/distill.hpp"
#include "flexinet/dsp.hpp"
#include "flexinet/model.hpp"
#include "json.hpp"

namespace flexinet {

struct AugmentConfig {
  bool fms_enabled = false;
  FmsConfig fms;
  bool adir_enabled = false;
  double adir_p = 0.4;
  double adir_energy_threshold = 323.0;
  std::string dir_bank = "synthetic";  // "synthetic" or a directory of WAVs
  bool roll_enabled = true;
  double roll_fraction = 0.1;  // max shift as a fraction of the frame count
  bool mask_enabled = true;
  std::size_t mask_width = 32;  // max masked mel bins
};

enum class FusionMode { fitted, uniform, none };
std::string to_string(FusionMode m);
FusionMode parse_fusion_mode(const std::string& s);

struct DistillConfig {
  bool enabled = false;
  std::string logits;         // teacher logits file
  FusionMode fusion = FusionMode::fitted;
  std::string fusion_params;  // fitted alpha/beta file, used when fusion = fitted
  std::optional<std::size_t> num_teachers;  // checked against the logits file when set
  KdConfig kd;
};

struct QuantConfig {
  bool enabled = false;
  double start_fraction = 0.75;   // fake-quant from this fraction of the epochs
  double freeze_fraction = 0.9;   // observers frozen from here on
  std::size_t calibration_clips = 256;  // used by `quantize` on a float model
};

struct TrainConfig {
  std::size_t epochs = 250;
  std::size_t batch_size = 256;
  double learning_rate = 1e-2;
  double min_learning_rate = 0.0;
  double weight_decay = 0.0;
  std::size_t warmup_epochs = 0;
  std::uint64_t seed = 42;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  std::size_t eval_every = 0;        // 0: no per-epoch test evaluation
};

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "tau"
  std::string root;                  // audio root for "tau"
  std::string metadata;              // metadata CSV for "tau"
  SyntheticCorpusSpec synthetic;
};

struct RunConfig {
  ArchConfig arch = reference_config("sm-a");
  MelConfig features;
  AugmentConfig augment;
  DistillConfig distill;
  QuantConfig quant;
  TrainConfig train;
  DataConfig data;

  void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Expects a complete document (as produced by to_json); unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json arch_to_json(const ArchConfig& a);
ArchConfig arch_from_json(const nlohmann::json& j);

/// Recursively merges `patch` into `base`. Keys absent from `base` are rejected
/// with ConfigError naming the dotted path. An `arch.preset` entry first resets
/// the arch section to that reference layout.
void merge_config(nlohmann::json& base, const nlohmann::json& patch, const std::string& path = "");

/// Applies one `dotted.key=value` override. The value is parsed as JSON and
/// falls back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Defaults <- config file (optional) <- overrides <- FLEXINET_SEED, then validation.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides);

/// Writes `resolved_config.json` into `out_dir`.
void write_resolved_config(const RunConfig& c, const std::filesystem::path& out_dir);

}  // namespace flexinet
