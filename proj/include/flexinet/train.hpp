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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flexinet/config.hpp"
#include "flexinet/dataset.hpp"
#include "flexinet/distill.hpp"
#include "flexinet/int8_model.hpp"
#include "flexinet/model.hpp"
#include "json.hpp"

namespace flexinet {

/// Log-mel features of a record set, [1, 1, F, T] per clip, in record order.
struct FeatureSet {
  std::vector<ClipRecord> records;
  std::vector<TensorF> features;
  std::size_t size() const { return records.size(); }
};

FeatureSet compute_features(std::vector<ClipRecord> records, const MelConfig& cfg);
/// Stacks features[idx[i]] into [B, 1, F, T].
TensorF stack_batch(const FeatureSet& set, const std::vector<std::size_t>& idx);
std::vector<int> labels_of(const FeatureSet& set, const std::vector<std::size_t>& idx);

/// Argmax per row; ties go to the lowest class index.
std::vector<int> argmax_rows(const TensorF& logits);
std::vector<int> predict(FlexiNet<float>& model, const FeatureSet& set, std::size_t batch_size = 64);
std::vector<int> predict(const QuantizedModel& model, const FeatureSet& set, std::size_t batch_size = 64);

/// Resets observers and runs eval-mode forwards over up to `max_clips` clips.
void calibrate(FlexiNet<float>& model, const FeatureSet& set, std::size_t max_clips,
               std::size_t batch_size = 64);

/// Adam with decoupled weight decay on convolution and head weights.
class Adam {
 public:
  Adam(std::vector<NamedParam<float>> params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(double lr, double weight_decay);
  std::size_t steps() const { return t_; }

 private:
  std::vector<NamedParam<float>> params_;
  std::vector<std::vector<double>> m_, v_;
  double b1_, b2_, eps_;
  std::size_t t_ = 0;
};

/// Linear warmup then cosine decay from lr to min_lr over total_steps.
double cosine_lr(double lr, double min_lr, std::size_t step, std::size_t total_steps, std::size_t warmup_steps);

struct EpochMetrics {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double resnorm_lambda = 0.0;
  bool fake_quant = false;
  bool observing = false;
  double kd_lambda = 1.0;
  std::optional<double> test_macro_accuracy;
  double seconds = 0.0;
  std::vector<double> step_losses;  // per optimizer step

  nlohmann::json to_json() const;
};

/// Teacher targets for KD: fused logits per training clip.
struct KdTargets {
  std::map<std::string, Logits10> fused;
  FusionParams params;
};

/// Fuses every training clip's teacher logits. Fitted mode uses `fitted` when given,
/// otherwise fits on the training clips.
KdTargets make_kd_targets(const TeacherLogits& teachers, const FeatureSet& train, FusionMode mode,
                          const std::optional<FusionParams>& fitted);

struct TrainCallbacks {
  std::function<void(const EpochMetrics&)> on_epoch;
  /// Called after epochs listed by train.checkpoint_every and after the last one.
  std::function<void(FlexiNet<float>&, std::size_t epoch)> on_checkpoint;
};

struct TrainResult {
  std::unique_ptr<FlexiNet<float>> model;
  std::vector<EpochMetrics> history;
  bool qat = false;
};

/// Trains from scratch. Throws ConfigError if an S4-S6 clip would enter a batch.
TrainResult train_model(const RunConfig& cfg, const FeatureSet& train, const FeatureSet* test,
                        const KdTargets* kd, const TrainCallbacks& callbacks = {});

}  // namespace flexinet
