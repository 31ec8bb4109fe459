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

#include <cmath>

#include "flexinet/container.hpp"
#include "flexinet/errors.hpp"
#include "flexinet/train.hpp"
#include "testing.hpp"

namespace flexinet {
namespace {

struct Data {
  FeatureSet train, test;
};

const Data& data() {
  static const Data d = [] {
    SyntheticCorpusSpec s;
    s.train_clips_per_cell = 1;
    s.test_clips_per_cell = 1;
    s.unused_clips_per_cell = 0;
    std::vector<ClipRecord> tr, te;
    for (auto& r : generate_synthetic_corpus(s)) (r.split == Split::train ? tr : te).push_back(r);
    return Data{compute_features(tr, MelConfig{}), compute_features(te, MelConfig{})};
  }();
  return d;
}

RunConfig small_cfg(std::size_t epochs = 2) {
  RunConfig c;
  c.train.epochs = epochs;
  c.train.batch_size = 16;
  c.augment.fms_enabled = true;
  c.augment.adir_enabled = true;
  return c;
}

std::vector<float> flat_weights(FlexiNet<float>& m) {
  std::vector<float> out;
  for (auto& [name, t] : m.state()) out.insert(out.end(), t->storage().begin(), t->storage().end());
  return out;
}

TEST(Train, SameSeedIsBitIdentical) {
  const auto a = train_model(small_cfg(), data().train, nullptr, nullptr);
  const auto b = train_model(small_cfg(), data().train, nullptr, nullptr);
  EXPECT_EQ(flat_weights(*a.model), flat_weights(*b.model));
  EXPECT_EQ(a.history.back().step_losses, b.history.back().step_losses);
  auto other = small_cfg();
  other.train.seed = 43;
  const auto c = train_model(other, data().train, nullptr, nullptr);
  EXPECT_NE(flat_weights(*a.model), flat_weights(*c.model));
}

TEST(Train, KdWithLambdaOneMatchesPlainTraining) {
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& r : data().train.records) ids.push_back(r.clip_id), labels.push_back(r.scene);
  const auto teachers = make_synthetic_teacher_logits(ids, labels, default_synthetic_teachers(), 3);
  const auto kd = make_kd_targets(teachers, data().train, FusionMode::fitted, std::nullopt);
  auto cfg = small_cfg();
  cfg.distill.kd.lambda = 1.0;
  const auto plain = train_model(cfg, data().train, nullptr, nullptr);
  const auto with_kd = train_model(cfg, data().train, nullptr, &kd);
  ASSERT_EQ(plain.history.size(), with_kd.history.size());
  for (std::size_t e = 0; e < plain.history.size(); ++e) {
    EXPECT_EQ(plain.history[e].step_losses, with_kd.history[e].step_losses);
  }
  EXPECT_EQ(flat_weights(*plain.model), flat_weights(*with_kd.model));
}

TEST(Train, LossDropsOnTrainingData) {
  auto cfg = small_cfg(8);
  cfg.augment.fms_enabled = false;
  cfg.augment.adir_enabled = false;
  const auto r = train_model(cfg, data().train, nullptr, nullptr);
  EXPECT_LT(r.history.back().loss, r.history.front().loss);
  EXPECT_GT(r.history.back().train_accuracy, 0.2);
}

TEST(Train, UnseenDeviceNeverReachesABatch) {
  FeatureSet bad = data().train;
  bad.records[3].device = Device::S5;
  EXPECT_THROW(train_model(small_cfg(1), bad, nullptr, nullptr), ConfigError);
  EXPECT_THROW(train_model(small_cfg(1), FeatureSet{}, nullptr, nullptr), ConfigError);
}

TEST(Train, QatScheduleAndConversion) {
  auto cfg = small_cfg(4);
  cfg.quant.enabled = true;
  cfg.quant.start_fraction = 0.5;
  cfg.quant.freeze_fraction = 0.75;
  const auto r = train_model(cfg, data().train, nullptr, nullptr);
  ASSERT_EQ(r.history.size(), 4u);
  EXPECT_FALSE(r.history[0].observing);
  EXPECT_TRUE(r.history[1].observing);
  EXPECT_FALSE(r.history[1].fake_quant);
  EXPECT_TRUE(r.history[2].fake_quant);
  EXPECT_TRUE(r.history[2].observing);
  EXPECT_FALSE(r.history[3].observing);
  EXPECT_TRUE(r.history[3].fake_quant);
  EXPECT_TRUE(r.qat);
  const auto q = convert_int8(*r.model);
  const auto pf = predict(*r.model, data().test);
  const auto pq = predict(q, data().test);
  EXPECT_EQ(pf.size(), pq.size());
}

TEST(Train, EvalEveryReportsMacro) {
  auto cfg = small_cfg(2);
  cfg.train.eval_every = 1;
  std::size_t seen = 0;
  TrainCallbacks cb;
  cb.on_epoch = [&](const EpochMetrics& m) {
    ++seen;
    EXPECT_TRUE(m.test_macro_accuracy.has_value());
    EXPECT_TRUE(m.to_json().contains("loss"));
  };
  std::size_t checkpoints = 0;
  cb.on_checkpoint = [&](FlexiNet<float>&, std::size_t) { ++checkpoints; };
  train_model(cfg, data().train, &data().test, nullptr, cb);
  EXPECT_EQ(seen, 2u);
  EXPECT_EQ(checkpoints, 1u);
}

TEST(Schedule, CosineWithWarmup) {
  EXPECT_DOUBLE_EQ(cosine_lr(1.0, 0.0, 0, 100, 0), 1.0);
  EXPECT_NEAR(cosine_lr(1.0, 0.0, 50, 100, 0), 0.5, 1e-12);
  EXPECT_NEAR(cosine_lr(1.0, 0.1, 100, 100, 0), 0.1, 1e-12);
  EXPECT_LT(cosine_lr(1.0, 0.0, 0, 100, 10), 0.2);
  EXPECT_NEAR(cosine_lr(1.0, 0.0, 9, 100, 10), 1.0, 1e-12);
}

TEST(Adam, MinimizesQuadratic) {
  Var<float> w = Var<float>::parameter(TensorF({3}, std::vector<float>{3, -2, 1}));
  Adam opt({{"w", w}});
  for (int i = 0; i < 500; ++i) {
    Tape<float> tape;
    w.zero_grad();
    tape.backward(ops::sum(tape, ops::mul(tape, w, w)));
    opt.step(0.05, 0.0);
  }
  for (float v : w.value().storage()) EXPECT_NEAR(v, 0.0f, 0.05f);
  EXPECT_EQ(opt.steps(), 500u);
}

TEST(Predict, ArgmaxTiesGoLow) {
  TensorF l({2, 10});
  l[3] = l[7] = 1.0f;
  l[10 + 9] = 2.0f;
  EXPECT_EQ(argmax_rows(l), (std::vector<int>{3, 9}));
}

TEST(Kd, TargetsFollowFusionMode) {
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (const auto& r : data().train.records) ids.push_back(r.clip_id), labels.push_back(r.scene);
  const auto t = make_synthetic_teacher_logits(ids, labels, default_synthetic_teachers(), 4);
  const auto uni = make_kd_targets(t, data().train, FusionMode::uniform, std::nullopt);
  const double* row = t.row(ids[0]);
  EXPECT_NEAR(uni.fused.at(ids[0])[2], (row[2] + row[12] + row[22]) / 3.0, 1e-12);
  EXPECT_THROW(make_kd_targets(t, data().train, FusionMode::none, std::nullopt), ConfigError);
  FusionParams given;
  given.alpha = {1.0, 0.0, 0.0};
  const auto fixed = make_kd_targets(t, data().train, FusionMode::fitted, given);
  EXPECT_EQ(fixed.fused.at(ids[0])[5], row[5]);
}

TEST(Features, ShapesAndBatching) {
  const auto& d = data();
  EXPECT_EQ(d.train.features[0].shape(), (Shape{1, 1, 256, 64}));
  const auto b = stack_batch(d.train, {2, 0});
  EXPECT_EQ(b.shape(), (Shape{2, 1, 256, 64}));
  EXPECT_EQ(b[0], d.train.features[2][0]);
  EXPECT_EQ(labels_of(d.train, {2, 0}), (std::vector<int>{d.train.records[2].scene, d.train.records[0].scene}));
}

}  // namespace
}  // namespace flexinet
