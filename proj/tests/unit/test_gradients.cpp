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

#include "grad_suite.hpp"

namespace flexinet {
namespace {

TEST(Gradients, EveryOpPassesFiniteDifferences) {
  for (const auto& r : testing::run_gradient_suite(11)) {
    EXPECT_GE(r.shapes, 5u) << r.op;
    EXPECT_LT(r.worst, 1e-3) << r.op;
  }
}

TEST(Gradients, WholeModelDoublePrecision) {
  // A tiny network, every parameter checked against central differences.
  ArchConfig cfg;
  cfg.stem_channels = 2;
  cfg.stages = {{1, 3, 1}, {1, 4, 2}};
  FlexiNet<double> net(cfg, 5);
  std::mt19937_64 rng(3);
  const auto x = testing::random_tensor<double>({2, 1, 16, 8}, rng);
  std::vector<Var<double>> params;
  for (auto& p : net.parameters()) params.push_back(p.var);
  const double err = testing::gradient_check(params, [&](Tape<double>& t, std::vector<Var<double>>&) {
    return ops::softmax_cross_entropy(t, net.forward(t, Var<double>(x), {.training = true}), {1, 4});
  });
  EXPECT_LT(err, 1e-3);
}

TEST(Gradients, KdZeroLambdaSelfTeacherHasZeroGradient) {
  std::mt19937_64 rng(4);
  const auto s = testing::random_tensor<double>({6, 10}, rng, -3, 3);
  const std::vector<double> sv(s.storage().begin(), s.storage().end());
  const auto v = kd_loss_value(sv, {0, 1, 2, 3, 4, 5}, sv, 0.0, 2.0);
  for (double g : v.grad) EXPECT_EQ(g, 0.0);

  Tape<double> tape;
  Var<double> x = Var<double>::parameter(s);
  tape.backward(kd_loss(tape, x, {0, 1, 2, 3, 4, 5}, s, 0.0, 2.0));
  for (double g : x.grad().storage()) EXPECT_EQ(g, 0.0);
}

TEST(Gradients, KdValueMatchesTape) {
  std::mt19937_64 rng(5);
  const auto s = testing::random_tensor<double>({3, 10}, rng, -2, 2);
  const auto t = testing::random_tensor<double>({3, 10}, rng, -2, 2);
  const std::vector<int> labels = {2, 9, 0};
  Tape<double> tape;
  Var<double> x = Var<double>::parameter(s);
  const auto loss = kd_loss(tape, x, labels, t, 0.3, 2.5);
  tape.backward(loss);
  const auto v = kd_loss_value({s.storage().begin(), s.storage().end()}, labels,
                               {t.storage().begin(), t.storage().end()}, 0.3, 2.5);
  EXPECT_NEAR(loss.value()[0], v.total, 1e-12);
  for (std::size_t i = 0; i < v.grad.size(); ++i) EXPECT_NEAR(x.grad()[i], v.grad[i], 1e-12);
}

}  // namespace
}  // namespace flexinet
