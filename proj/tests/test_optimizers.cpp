/*
 * Copyright 2026 The clipbias Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "clipbias/optimizers.hpp"
#include "support.hpp"

namespace clipbias {
namespace {

OptimizerConfig config(double x0, std::uint64_t steps, std::uint64_t seed) {
  OptimizerConfig cfg;
  cfg.x0 = RealVector{x0};
  cfg.steps = steps;
  cfg.seed = seed;
  return cfg;
}

TEST(FullBatch, ExampleTwoIsStationary) {
  const auto p = make_example2();
  for (double x0 : {-2.0, -0.7, 0.0, 1.3, 2.0}) {
    const auto tr = clipped_gd_full_batch(p, 0.01, ClipThreshold(1.0), 500, RealVector{x0});
    for (const auto& x : tr.iterates) ASSERT_EQ(x, RealVector{x0});
    EXPECT_TRUE(is_stationary(tr));
  }
}

TEST(FullBatch, ExampleOneDriftsToClippedFixedPoint) {
  // Solving (2 clip(x + 3, 1) + clip(x - 9, 1)) / 3 = 0 by hand gives -2.5.
  const auto tr = clipped_gd_full_batch(make_example1(), 0.001, ClipThreshold(1.0), 100000,
                                        RealVector{1.0});
  EXPECT_NEAR(tr.final_point()[0], -2.5, 0.01);
  EXPECT_TRUE(is_stationary(tr));
}

TEST(FullBatch, DisabledClippingIsGradientDescent) {
  testing::Gen gen(51);
  std::vector<RealVector> centers;
  for (int i = 0; i < 7; ++i) centers.push_back(gen.vector(3, 4.0));
  const QuadraticProblem p(centers);
  const auto tr = clipped_gd_full_batch(p, 0.1, ClipThreshold::disabled(), 2000, RealVector::zeros(3));
  EXPECT_LT(norm(tr.final_point() - p.optimum()), 1e-10);
}

TEST(FullBatch, LengthsAreConsistent) {
  const auto tr = clipped_gd_full_batch(make_example1(), 0.1, ClipThreshold(1.0), 17, RealVector{0.0});
  EXPECT_EQ(tr.steps(), 17u);
  EXPECT_EQ(tr.iterates.size(), 18u);
  EXPECT_EQ(tr.gradients.size(), 18u);
  EXPECT_EQ(tr.objective.size(), 18u);
  EXPECT_EQ(tr.noise_norms.size(), 17u);
}

TEST(ClippedSgd, RejectsNoiseAndBadConfig) {
  auto cfg = config(0.0, 10, 1);
  cfg.sigma = 1.0;
  EXPECT_THROW(clipped_sgd(make_example1(), cfg), InvalidInput);
  cfg = config(0.0, 10, 1);
  cfg.x0 = RealVector{0.0, 0.0};
  EXPECT_THROW(clipped_sgd(make_example1(), cfg), DimensionMismatch);
  cfg = config(0.0, 0, 1);
  EXPECT_THROW(clipped_sgd(make_example1(), cfg), InvalidInput);
  cfg = config(0.0, 10, 1);
  cfg.k = 1.0;
  EXPECT_THROW(dp_sgd(make_example1(), cfg), InvalidInput);
}

void expect_same(const Trajectory& a, const Trajectory& b) {
  ASSERT_EQ(a.iterates, b.iterates);
  ASSERT_EQ(a.clipped_means, b.clipped_means);
  ASSERT_EQ(a.objective, b.objective);
}

TEST(Reductions, BitExact) {
  const auto p = make_synthetic_mixture(4, {.n = 200, .dim = 3});
  auto cfg = config(0.0, 300, 9);
  cfg.x0 = RealVector::zeros(3);
  cfg.batch = 5;
  const auto base = clipped_sgd(p, cfg);
  expect_same(base, dp_sgd(p, cfg));
  expect_same(base, dp_sgd_perturbed(p, cfg));
  cfg.sigma = 0.7;
  expect_same(dp_sgd(p, cfg), dp_sgd_perturbed(p, cfg));
  // Same seed, same problem: identical output.
  expect_same(dp_sgd(p, cfg), dp_sgd(p, cfg));
  cfg.seed = 10;
  EXPECT_NE(dp_sgd(p, cfg).iterates, base.iterates);
}

TEST(DpSgd, CalibratedSigmaIsApplied) {
  auto cfg = config(1.5, 50, 2);
  const PrivacyBudget b{.epsilon = 1.0, .delta = 1e-5, .n = 2, .steps = 50, .batch = 1};
  const auto tr = dp_sgd(make_example2(), cfg, b);
  EXPECT_DOUBLE_EQ(tr.sigma, calibrate_sigma(b, cfg.clip));
  cfg.sigma = tr.sigma;
  expect_same(tr, dp_sgd(make_example2(), cfg));
}

TEST(OptimizersProperty, MovementBound) {
  testing::Gen gen(52);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = make_synthetic_mixture(trial, {.n = 50, .dim = gen.index(1, 4)});
    OptimizerConfig cfg;
    cfg.x0 = gen.vector(p.dim(), 3.0);
    cfg.alpha = gen.uniform(0.001, 0.5);
    cfg.clip = ClipThreshold(gen.uniform(0.1, 3.0));
    cfg.steps = 200;
    cfg.batch = gen.index(1, 8);
    cfg.sigma = trial % 2 ? gen.uniform(0.0, 2.0) : 0.0;
    cfg.k = trial % 3 ? gen.uniform(0.0, 4.0) : 0.0;
    cfg.seed = trial;
    const auto tr = dp_sgd_perturbed(p, cfg);
    for (std::size_t t = 0; t < tr.steps(); ++t) {
      ASSERT_LE(norm(tr.clipped_means[t]), cfg.clip.value() * (1 + 1e-12));
      const double step = norm(tr.iterates[t + 1] - tr.iterates[t]);
      ASSERT_LE(step, cfg.alpha * (cfg.clip.value() + tr.noise_norms[t]) * (1 + 1e-12) + 1e-15);
    }
  }
}

TEST(OptimizersProperty, DescentInequalityHoldsPathwise) {
  // With sigma = 0 the smoothness argument holds for every realization.
  for (const auto& p : {make_example1(), make_example2(), make_synthetic_mixture(7, {.n = 300})}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      OptimizerConfig cfg;
      cfg.steps = 2500;
      cfg.alpha = 1.0 / std::sqrt(2500.0);
      cfg.x0 = RealVector::zeros(p.dim());
      cfg.seed = seed;
      const auto tr = clipped_sgd(p, cfg);
      const auto check = descent_check(tr, p.meta(cfg.x0));
      EXPECT_TRUE(check.holds) << check.mean_inner << " > " << check.bound;
    }
  }
}

TEST(StepSize, Examples) {
  PrivacyBudget b{.epsilon = 1.0, .delta = std::exp(-1.0), .n = 1, .steps = 1, .batch = 1};
  EXPECT_NEAR(step_size_theorem5(1.0, 1.0, b, ClipThreshold(1.0), 1), 1.0, 1e-15);
  b.n = 10;
  EXPECT_NEAR(step_size_theorem5(4.0, 1.0, b, ClipThreshold(1.0), 1), 0.2, 1e-15);
  const double a = step_size_theorem5(4.0, 1.0, b, ClipThreshold(1.0), 3);
  b.n = 20;
  EXPECT_NEAR(step_size_theorem5(4.0, 1.0, b, ClipThreshold(1.0), 3), a / 2, 1e-15);
}

TEST(Perturbed, ExampleOnePullsTowardOptimum) {
  // Twenty seeds keep this quick; the 100-run version lives in the acceptance suite.
  const auto p = make_example1();
  double mean_k0 = 0.0;
  double mean_k10 = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto cfg = config(1.0, 20000, s);
    cfg.sigma = 1.0;
    mean_k0 += dp_sgd(p, cfg).final_point()[0] / 20;
    cfg.k = 10.0;
    mean_k10 += dp_sgd_perturbed(p, cfg).final_point()[0] / 20;
  }
  EXPECT_LT(std::abs(mean_k10 - 1.0), std::abs(mean_k0 - 1.0));
}

}  // namespace
}  // namespace clipbias
