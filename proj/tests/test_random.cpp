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
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "clipbias/monte_carlo.hpp"
#include "clipbias/random.hpp"

namespace clipbias {
namespace {

// Known-answer vectors of Random123's Philox4x64-10.
TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x64_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x16554d9eca36314cULL);
  EXPECT_EQ(out[1], 0xdb20fe9d672d0fdcULL);
  EXPECT_EQ(out[2], 0xd7e772cee186176bULL);
  EXPECT_EQ(out[3], 0x7e68b68aec7ba23bULL);
}

TEST(Philox, KnownAnswerPi) {
  const auto out = philox4x64_10({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
                                  0x082efa98ec4e6c89ULL},
                                 {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
  EXPECT_EQ(out[0], 0xa528f45403e61d95ULL);
  EXPECT_EQ(out[1], 0x38c72dbd566e9788ULL);
  EXPECT_EQ(out[2], 0xa5a1610e72fd18b5ULL);
  EXPECT_EQ(out[3], 0x57bd43b5e52b7fe6ULL);
}

TEST(DrawCursor, IsAPureFunctionOfStreamAndIndex) {
  const SeededStream s{42, 7};
  DrawCursor a(s, 123), b(s, 123), other(s, 124);
  for (int i = 0; i < 10; ++i) {
    const double x = a.next_normal();
    EXPECT_EQ(x, b.next_normal());
  }
  EXPECT_NE(DrawCursor(s, 123).next_u64(), other.next_u64());
  EXPECT_NE(DrawCursor(s, 0).next_u64(), DrawCursor(s.child(1), 0).next_u64());
  EXPECT_NE(DrawCursor({1, 7}, 0).next_u64(), DrawCursor({2, 7}, 0).next_u64());
}

TEST(DrawCursor, UniformAndNormalMoments) {
  const SeededStream s{9, 1};
  const auto u = monte_carlo_mean(200000, [&](std::uint64_t i) { return DrawCursor(s, i).next_uniform(); }, 1);
  EXPECT_NEAR(u.mean, 0.5, 3 * u.std_error + 1e-12);
  const auto z = monte_carlo_mean(200000, [&](std::uint64_t i) { return DrawCursor(s, i).next_normal(); }, 1);
  EXPECT_LT(std::abs(z.mean), 4 * z.std_error);
  const auto z2 = monte_carlo_mean(200000, [&](std::uint64_t i) {
    const double x = DrawCursor(s, i).next_normal();
    return x * x;
  }, 1);
  EXPECT_NEAR(z2.mean, 1.0, 4 * z2.std_error);
}

TEST(MonteCarlo, IndependentOfWorkerCount) {
  const SeededStream s{5, 5};
  auto f = [&](std::uint64_t i) { return std::exp(DrawCursor(s, i).next_normal()); };
  const auto one = monte_carlo_mean(50000, f, 1);
  for (unsigned w : {2u, 3u, 8u}) {
    const auto many = monte_carlo_mean(50000, f, w);
    EXPECT_EQ(one.mean, many.mean);
    EXPECT_EQ(one.std_error, many.std_error);
  }
}

TEST(MonteCarlo, StandardErrorOfConstantIsZero) {
  const auto e = monte_carlo_mean(1000, [](std::uint64_t) { return 2.5; });
  EXPECT_EQ(e.mean, 2.5);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_EQ(e.samples, 1000u);
}

}  // namespace
}  // namespace clipbias
