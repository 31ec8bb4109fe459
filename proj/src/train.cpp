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

#include "flexinet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

#include "flexinet/augment.hpp"
#include "flexinet/errors.hpp"
#include "flexinet/log.hpp"

namespace flexinet {

FeatureSet compute_features(std::vector<ClipRecord> records, const MelConfig& cfg) {
  FeatureSet set;
  MelFrontend fe(cfg);
  set.features.reserve(records.size());
  for (const auto& r : records) set.features.push_back(fe(load_audio(r)));
  set.records = std::move(records);
  return set;
}

TensorF stack_batch(const FeatureSet& set, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw DimensionError("stack_batch: empty batch");
  const Shape& s = set.features.at(idx[0]).shape();
  const std::size_t per = numel(s);
  TensorF out({idx.size(), s[1], s[2], s[3]});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const TensorF& f = set.features.at(idx[i]);
    if (f.shape() != s) throw DimensionError("stack_batch: mixed feature shapes");
    std::copy(f.ptr(), f.ptr() + per, out.ptr() + i * per);
  }
  return out;
}

std::vector<int> labels_of(const FeatureSet& set, const std::vector<std::size_t>& idx) {
  std::vector<int> y;
  y.reserve(idx.size());
  for (auto i : idx) y.push_back(set.records.at(i).scene);
  return y;
}

std::vector<int> argmax_rows(const TensorF& logits) {
  if (logits.rank() != 2) throw DimensionError("argmax_rows: expected [N, K] logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = logits.ptr() + i * k;
    out[i] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> batches_in_order(std::size_t n, std::size_t batch) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; s += batch) {
    std::vector<std::size_t> idx(std::min(batch, n - s));
    std::iota(idx.begin(), idx.end(), s);
    out.push_back(std::move(idx));
  }
  return out;
}

}  // namespace

std::vector<int> predict(FlexiNet<float>& model, const FeatureSet& set, std::size_t batch_size) {
  std::vector<int> out;
  out.reserve(set.size());
  for (const auto& idx : batches_in_order(set.size(), batch_size)) {
    const auto p = argmax_rows(model.predict_logits(stack_batch(set, idx)));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<int> predict(const QuantizedModel& model, const FeatureSet& set, std::size_t batch_size) {
  std::vector<int> out;
  out.reserve(set.size());
  for (const auto& idx : batches_in_order(set.size(), batch_size)) {
    const auto p = argmax_rows(model.predict_logits(stack_batch(set, idx)));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void calibrate(FlexiNet<float>& model, const FeatureSet& set, std::size_t max_clips, std::size_t batch_size) {
  const std::size_t n = std::min(max_clips, set.size());
  if (n == 0) throw ConfigError("calibration: no clips available");
  model.observers().clear();
  for (const auto& idx : batches_in_order(n, batch_size)) {
    Tape<float> tape;
    model.forward(tape, Var<float>(stack_batch(set, idx), false), ForwardOptions{false, true, false});
  }
}

Adam::Adam(std::vector<NamedParam<float>> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), b1_(beta1), b2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.var.value().size(), 0.0);
    v_.emplace_back(p.var.value().size(), 0.0);
  }
}

void Adam::step(double lr, double weight_decay) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.var.has_grad()) continue;
    const bool decay = weight_decay > 0.0 && p.name.size() > 7 && p.name.ends_with(".weight");
    TensorF& w = p.var.value_mut();
    const TensorF& g = p.var.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j];
      m[j] = b1_ * m[j] + (1.0 - b1_) * gj;
      v[j] = b2_ * v[j] + (1.0 - b2_) * gj * gj;
      double wj = w[j];
      if (decay) wj -= lr * weight_decay * wj;
      wj -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
      w[j] = static_cast<float>(wj);
    }
  }
}

double cosine_lr(double lr, double min_lr, std::size_t step, std::size_t total_steps, std::size_t warmup_steps) {
  if (step < warmup_steps) return lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  const std::size_t span = total_steps > warmup_steps ? total_steps - warmup_steps : 1;
  const double t = std::min(1.0, static_cast<double>(step - warmup_steps) / static_cast<double>(span));
  return min_lr + 0.5 * (lr - min_lr) * (1.0 + std::cos(std::numbers::pi * t));
}

nlohmann::json EpochMetrics::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["lr"] = learning_rate;
  j["loss"] = loss;
  j["train_acc"] = train_accuracy;
  j["resnorm_lambda"] = resnorm_lambda;
  j["kd_lambda"] = kd_lambda;
  j["fake_quant"] = fake_quant;
  j["observing"] = observing;
  j["test_macro_acc"] = test_macro_accuracy ? nlohmann::json(*test_macro_accuracy) : nlohmann::json(nullptr);
  j["seconds"] = seconds;
  j["step_losses"] = step_losses;
  return nlohmann::json::parse(j.dump());
}

KdTargets make_kd_targets(const TeacherLogits& teachers, const FeatureSet& train, FusionMode mode,
                          const std::optional<FusionParams>& fitted) {
  const std::size_t k = teachers.num_teachers();
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& r : train.records) {
    if (!teachers.contains(r.clip_id)) {
      throw ConfigError("distill: teacher logits lack training clip '" + r.clip_id + "'");
    }
    ids.push_back(r.clip_id);
    labels.push_back(r.scene);
  }
  KdTargets out;
  switch (mode) {
    case FusionMode::uniform: out.params = FusionParams::uniform(k); break;
    case FusionMode::fitted:
      out.params = fitted ? *fitted : fit_fusion(gather_logits(teachers, ids), labels, k).params;
      break;
    case FusionMode::none: throw ConfigError("distill: fusion mode 'none' cannot produce KD targets");
  }
  out.params.validate(k);
  for (const auto& id : ids) out.fused[id] = fuse(teachers.row(id), k, out.params);
  return out;
}

TrainResult train_model(const RunConfig& cfg, const FeatureSet& train, const FeatureSet* test, const KdTargets* kd,
                        const TrainCallbacks& callbacks) {
  if (train.size() == 0) throw ConfigError("train: the training split is empty");
  check_split_discipline(train.records);
  const auto& tc = cfg.train;
  const std::uint64_t seed = tc.seed;

  TrainResult result;
  result.model = std::make_unique<FlexiNet<float>>(cfg.arch, clip_seed(seed, 0, 101));
  FlexiNet<float>& model = *result.model;
  Adam opt(model.parameters());

  const std::size_t epochs = tc.epochs, n = train.size(), bs = std::min(tc.batch_size, n);
  const std::size_t nb = (n + bs - 1) / bs, total_steps = epochs * nb;
  const bool quant = cfg.quant.enabled;
  const auto frac_epoch = [&](double f) { return static_cast<std::size_t>(std::floor(f * static_cast<double>(epochs))); };
  const std::size_t fq_start = quant ? frac_epoch(cfg.quant.start_fraction) : epochs;
  const std::size_t freeze = quant ? std::max(fq_start + 1, frac_epoch(cfg.quant.freeze_fraction)) : epochs;
  // Observers watch the epoch before fake-quant starts so that ranges exist when it does.
  const std::size_t obs_start = fq_start > 0 ? fq_start - 1 : 0;
  result.qat = quant;

  const auto& ag = cfg.augment;
  AdirConfig adir_cfg;
  std::unique_ptr<MelFrontend> fe;
  if (ag.adir_enabled) {
    adir_cfg.p = ag.adir_p;
    adir_cfg.energy_threshold = ag.adir_energy_threshold;
    adir_cfg.dir_bank = ag.dir_bank == "synthetic" ? synthetic_dir_bank(cfg.features.sample_rate)
                                                   : load_dir_bank(ag.dir_bank, cfg.features.sample_rate);
    adir_cfg.validate();
    fe = std::make_unique<MelFrontend>(cfg.features);
  }
  const auto max_shift =
      static_cast<std::size_t>(std::lround(ag.roll_fraction * static_cast<double>(cfg.features.frames())));

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochMetrics em;
    em.epoch = epoch;
    em.fake_quant = quant && epoch >= fq_start;
    em.observing = quant && epoch >= obs_start && epoch < freeze;
    if (quant && epoch == obs_start) model.observers().clear();
    const double progress = epochs > 1 ? static_cast<double>(epoch) / static_cast<double>(epochs - 1) : 1.0;
    em.kd_lambda = kd ? cfg.distill.kd.lambda_at(progress) : 1.0;

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle_rng(clip_seed(seed, epoch, 7));
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);
    const std::uint64_t epoch_seed = seed ^ (0x9e3779b97f4a7c15ULL * (epoch + 1));

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      std::vector<std::size_t> idx(perm.begin() + static_cast<long>(b * bs),
                                   perm.begin() + static_cast<long>(std::min(n, (b + 1) * bs)));
      for (auto i : idx) {
        const auto& r = train.records[i];
        if (is_unseen_device(r.device) || r.split != Split::train) {
          throw ConfigError("train: clip '" + r.clip_id + "' (device " + device_name(r.device) +
                            ") reached batch assembly");
        }
      }
      TensorF batch = stack_batch(train, idx);
      const std::size_t per = batch.size() / idx.size();
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const std::size_t g = idx[j];
        Rng crng(clip_seed(epoch_seed, g, 3));
        TensorF f = train.features[g];
        if (ag.adir_enabled) {
          Waveform w = conform_clip(load_audio(train.records[g]), cfg.features);
          if (adir(w, adir_cfg, crng)) f = (*fe)(w);
        }
        if (ag.roll_enabled && max_shift > 0) f = time_roll(f, max_shift, crng);
        if (ag.mask_enabled && ag.mask_width > 0) f = freq_mask(f, ag.mask_width, crng);
        std::copy(f.ptr(), f.ptr() + per, batch.ptr() + j * per);
      }
      if (ag.fms_enabled) {
        Rng brng(clip_seed(epoch_seed, b, 4));
        batch = freq_mixstyle(batch, ag.fms, brng);
      }
      const std::vector<int> labels = labels_of(train, idx);

      Tape<float> tape;
      Var<float> x(std::move(batch), false);
      Var<float> logits = model.forward(tape, x, ForwardOptions{true, em.observing, em.fake_quant});
      Var<float> loss;
      if (kd) {
        TensorF teacher({idx.size(), kNumClasses});
        for (std::size_t j = 0; j < idx.size(); ++j) {
          const auto& row = kd->fused.at(train.records[idx[j]].clip_id);
          for (std::size_t c = 0; c < kNumClasses; ++c) teacher[j * kNumClasses + c] = static_cast<float>(row[c]);
        }
        loss = kd_loss(tape, logits, labels, teacher, static_cast<float>(em.kd_lambda),
                       static_cast<float>(cfg.distill.kd.temperature));
      } else {
        loss = ops::softmax_cross_entropy(tape, logits, labels);
      }
      model.zero_grad();
      tape.backward(loss);
      em.learning_rate = cosine_lr(tc.learning_rate, tc.min_learning_rate, step, total_steps, tc.warmup_epochs * nb);
      opt.step(em.learning_rate, tc.weight_decay);
      ++step;

      const double lv = loss.value()[0];
      if (!std::isfinite(lv)) throw std::runtime_error("train: loss became non-finite at epoch " + std::to_string(epoch));
      em.step_losses.push_back(lv);
      loss_sum += lv * static_cast<double>(idx.size());
      const auto pred = argmax_rows(logits.value());
      for (std::size_t j = 0; j < idx.size(); ++j) correct += pred[j] == labels[j];
    }
    em.loss = loss_sum / static_cast<double>(n);
    em.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    em.resnorm_lambda = cfg.arch.resnorm_placement == ResNormPlacement::none ? 0.0 : model.resnorm_lambda().value()[0];
    if (test && test->size() > 0 && tc.eval_every > 0 && ((epoch + 1) % tc.eval_every == 0 || epoch + 1 == epochs)) {
      em.test_macro_accuracy = evaluate(predict(model, *test), test->records).macro_accuracy;
    }
    em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (callbacks.on_epoch) callbacks.on_epoch(em);
    const bool last = epoch + 1 == epochs;
    if (callbacks.on_checkpoint && (last || (tc.checkpoint_every > 0 && (epoch + 1) % tc.checkpoint_every == 0))) {
      callbacks.on_checkpoint(model, epoch);
    }
    result.history.push_back(std::move(em));
  }
  return result;
}

}  // namespace flexinet
