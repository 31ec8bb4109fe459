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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flexinet/config.hpp"
#include "flexinet/dataset.hpp"
#include "flexinet/distill.hpp"

// Command implementations behind the `flexinet` executable. Each writes
// resolved_config.json into its output directory. User and configuration errors
// surface as ConfigError or FormatError.
namespace flexinet {

/// Records of the configured corpus (generated in memory for the synthetic source).
std::vector<ClipRecord> load_corpus(const DataConfig& data);
std::vector<ClipRecord> select_split(const std::vector<ClipRecord>& records, Split split);

struct FeaturesSummary {
  std::size_t written = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // path, reason
};

/// One feature file per WAV under in_dir (recursive, sorted), mirrored into
/// out_dir with the extension ".flxf". Unreadable files go to failures.txt.
FeaturesSummary cmd_features(const RunConfig& cfg, const std::filesystem::path& in_dir,
                             const std::filesystem::path& out_dir);

/// Trains on the train split and writes model.flxn, metrics.jsonl and checkpoints/.
void cmd_train(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Fits fusion weights on the train split and writes fusion.json and fit_report.json.
FusionFit cmd_distill_fit(const RunConfig& cfg, const std::filesystem::path& logits,
                          const std::filesystem::path& out_dir);

/// Converts a float model to int8 (model_int8.flxn, quantize_report.json). The
/// calibration list holds clip ids of the configured corpus or WAV paths, one per line.
void cmd_quantize(const RunConfig& cfg, const std::filesystem::path& model,
                  const std::optional<std::filesystem::path>& calibration_list,
                  const std::filesystem::path& out_dir);

/// Evaluates a float or int8 model on a split; writes eval.json and eval.txt.
EvalReport cmd_eval(const RunConfig& cfg, const std::filesystem::path& model, Split split,
                    const std::filesystem::path& out_dir);

/// Writes the synthetic corpus (audio/ and meta.csv) described by data.synthetic.
void cmd_generate(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Writes synthetic three-teacher logits for the train split to teachers.txt.
void cmd_make_teachers(const RunConfig& cfg, const std::filesystem::path& out_dir, std::uint64_t seed);

/// Clip-energy histogram of the corpus; writes energy.json.
EnergyHistogram cmd_energy(const RunConfig& cfg, const std::filesystem::path& out_dir, std::size_t bins);

}  // namespace flexinet
