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
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "flexinet/autograd.hpp"

namespace flexinet {

constexpr std::size_t kNumClasses = 10;

using Logits10 = std::array<double, kNumClasses>;

/// Raw teacher outputs per clip, K x 10 each, stored teacher-major.
class TeacherLogits {
 public:
  TeacherLogits() = default;
  TeacherLogits(std::vector<std::string> teacher_ids, std::vector<std::string> class_names);

  std::size_t num_teachers() const { return teacher_ids_.size(); }
  std::size_t size() const { return clip_ids_.size(); }
  const std::vector<std::string>& teacher_ids() const { return teacher_ids_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<std::string>& clip_ids() const { return clip_ids_; }

  /// Values must be finite; K x 10 entries. Re-adding a clip id is an error.
  void add(const std::string& clip_id, std::vector<double> values);
  bool contains(const std::string& clip_id) const { return index_.count(clip_id) != 0; }
  /// Pointer to K x 10 values; throws std::out_of_range for unknown ids.
  const double* row(const std::string& clip_id) const;

 private:
  std::vector<std::string> teacher_ids_;
  std::vector<std::string> class_names_;
  std::vector<std::string> clip_ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
};

/// Text format:
///   #flexinet-teacher-logits 1
///   #K <k>
///   #classes <10 names>
///   #teachers <k ids>
///   <clip_id> <k * 10 floats, teacher 0 first>
/// A file whose first non-blank character is '{' is read as the JSON variant
/// {"format": "flexinet-teacher-logits", "K": k, "classes": [...], "teachers": [...],
///  "records": [{"clip_id": "...", "logits": [[10 floats] x k]}]}.
TeacherLogits read_teacher_logits(const std::filesystem::path& path);
void write_teacher_logits(const std::filesystem::path& path, const TeacherLogits& t);
void write_teacher_logits_json(const std::filesystem::path& path, const TeacherLogits& t);

struct FusionParams {
  std::vector<double> alpha;
  Logits10 beta{};

  static FusionParams uniform(std::size_t k);
  void validate(std::size_t k) const;
};

void save_fusion(const std::filesystem::path& path, const FusionParams& p);
FusionParams load_fusion(const std::filesystem::path& path);

/// h[i] = sum_k alpha[k] * logits[k * 10 + i] + beta[i].
Logits10 fuse(const double* logits, std::size_t k, const FusionParams& p);
Logits10 fuse(const std::vector<double>& logits, const FusionParams& p);

/// Mean softmax cross-entropy of fused logits; `logits` holds M x K x 10 values.
double fusion_cross_entropy(const std::vector<double>& logits, const std::vector<int>& labels,
                            std::size_t k, const FusionParams& p);

struct FusionFitOptions {
  bool fit_bias = true;
  std::size_t max_iterations = 200;
  double gradient_tolerance = 1e-10;
};

struct FusionFit {
  FusionParams params;
  double cross_entropy = 0.0;
  double uniform_cross_entropy = 0.0;
  std::size_t iterations = 0;
};

/// Minimizes the fused cross-entropy with damped Newton steps from the uniform
/// average, accepting only steps that lower the objective.
FusionFit fit_fusion(const std::vector<double>& logits, const std::vector<int>& labels,
                     std::size_t k, const FusionFitOptions& opt = {});

/// Gathers M x K x 10 logits for `clip_ids` in order.
std::vector<double> gather_logits(const TeacherLogits& t, const std::vector<std::string>& clip_ids);

struct KdConfig {
  double lambda = 0.5;
  double temperature = 2.0;
  /// Optional linear schedule of lambda from first to second over training.
  std::optional<std::pair<double, double>> schedule;

  void validate() const;
  /// progress in [0, 1].
  double lambda_at(double progress) const;
};

/// T^2 * mean_n CE(softmax(s / T), softmax(t / T)) where t is a constant target.
template <typename T>
Var<T> soft_cross_entropy(Tape<T>& tape, const Var<T>& student, const Tensor<T>& teacher,
                          T temperature);

/// lambda * CE(student, labels) + (1 - lambda) * soft_cross_entropy(student, teacher).
template <typename T>
Var<T> kd_loss(Tape<T>& tape, const Var<T>& student, const std::vector<int>& labels,
               const Tensor<T>& teacher, T lambda, T temperature);

struct KdLossValue {
  double total = 0.0;
  double label = 0.0;
  double kd = 0.0;
  std::vector<double> grad;  // d total / d student, N x 10
};

/// Standalone evaluation of kd_loss with its gradient, in double.
KdLossValue kd_loss_value(const std::vector<double>& student, const std::vector<int>& labels,
                          const std::vector<double>& teacher, double lambda, double temperature);

/// Knobs of one synthetic teacher. Logits are margin * onehot(predicted) +
/// noise + bias, where predicted differs from the label with flip_prob.
struct SyntheticTeacher {
  std::string id;
  double margin = 4.0;
  double noise = 1.0;
  double flip_prob = 0.1;
  Logits10 bias{};
  /// Predictions are shifted towards this class with extra probability.
  int favored_class = -1;
  double favor_prob = 0.0;
};

/// Good, medium and biased teachers used by the tests and the CLI tool.
std::vector<SyntheticTeacher> default_synthetic_teachers();

/// Deterministic per clip id (independent of clip order).
TeacherLogits make_synthetic_teacher_logits(const std::vector<std::string>& clip_ids,
                                            const std::vector<int>& labels,
                                            const std::vector<SyntheticTeacher>& teachers,
                                            std::uint64_t seed);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& s);

}  // namespace flexinet
