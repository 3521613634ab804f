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

#include <gtest/gtest.h>

#include "clipbias/privacy.hpp"
#include "support.hpp"

namespace clipbias {
namespace {

TEST(Privacy, CalibrateExamples) {
  PrivacyBudget b;
  b.delta = std::exp(-1.0);
  EXPECT_NEAR(calibrate_sigma(b, ClipThreshold(1.0)), 1.0, 1e-15);

  PrivacyBudget b2{.epsilon = 1.0, .delta = 1e-5, .n = 1000, .steps = 100, .batch = 10};
  const double s = calibrate_sigma(b2, ClipThreshold(2.0));
  EXPECT_NEAR(s * s, 4.0 * 100.0 * std::log(1e5) / 1e6, 1e-15);
  EXPECT_NEAR(s * s, 4.605e-3, 1e-6);
  EXPECT_NEAR(calibrate_sigma(b2, ClipThreshold(4.0)), 2.0 * s, 1e-15);
}

TEST(Privacy, ValidatesBudget) {
  PrivacyBudget b;
  b.delta = 1.0;
  EXPECT_THROW(calibrate_sigma(b, ClipThreshold(1.0)), InvalidInput);
  b.delta = 0.0;
  EXPECT_THROW(calibrate_sigma(b, ClipThreshold(1.0)), InvalidInput);
  PrivacyBudget big{.n = 10, .batch = 11};
  EXPECT_THROW(check_epsilon_regime(big), InvalidInput);
  PrivacyBudget no_steps{.steps = 0};
  EXPECT_THROW(check_epsilon_regime(no_steps), InvalidInput);
}

TEST(Privacy, RegimeExamples) {
  EXPECT_TRUE(check_epsilon_regime({.epsilon = 1.0, .n = 50, .steps = 1, .batch = 50}));
  PrivacyBudget b{.epsilon = 1.0, .n = 100, .steps = 10, .batch = 10};
  EXPECT_FALSE(check_epsilon_regime(b));
  b.epsilon = 0.05;
  EXPECT_TRUE(check_epsilon_regime(b));
}

TEST(PrivacyProperty, Monotonicity) {
  testing::Gen gen(41);
  for (int trial = 0; trial < 200; ++trial) {
    PrivacyBudget b{.epsilon = gen.uniform(0.1, 5.0),
                    .delta = gen.uniform(1e-9, 0.5),
                    .n = gen.index(10, 100000),
                    .steps = gen.index(1, 10000),
                    .batch = 1};
    const ClipThreshold c(gen.uniform(0.1, 5.0));
    const double s = calibrate_sigma(b, c);
    ASSERT_GT(calibrate_sigma(b, ClipThreshold(c.value() * 1.5)), s);
    auto more = b;
    more.steps += 1;
    ASSERT_GT(calibrate_sigma(more, c), s);
    more = b;
    more.delta *= 0.5;
    ASSERT_GT(calibrate_sigma(more, c), s);
    more = b;
    more.n += 1;
    ASSERT_LT(calibrate_sigma(more, c), s);
    more = b;
    more.epsilon *= 1.1;
    ASSERT_LT(calibrate_sigma(more, c), s);
  }
}

TEST(PrivacyProperty, CalibrationIdentity) {
  testing::Gen gen(42);
  for (int trial = 0; trial < 1000; ++trial) {
    PrivacyBudget b{.epsilon = gen.uniform(0.01, 10.0),
                    .delta = gen.uniform(1e-12, 0.9),
                    .n = gen.index(1, 1000000),
                    .steps = gen.index(1, 100000),
                    .batch = 1,
                    .v = gen.uniform(0.1, 10.0)};
    const double c = gen.uniform(0.01, 10.0);
    const double s = calibrate_sigma(b, ClipThreshold(c));
    const double n = static_cast<double>(b.n);
    const double ratio = s * s * n * n * b.epsilon * b.epsilon /
                         (b.v * c * c * static_cast<double>(b.steps) * std::log(1.0 / b.delta));
    ASSERT_NEAR(ratio, 1.0, 1e-12);
  }
}

}  // namespace
}  // namespace clipbias
