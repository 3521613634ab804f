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

// Exact Wasserstein-1 distance between finite distributions on the real
// line: W = integral |F_a(t) - F_b(t)| dt, evaluated on the merged sorted
// support. This equals the optimal transport cost under |x - y| because
// the quantile (monotone) coupling is optimal in one dimension.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "clipbias/error.hpp"

namespace clipbias {

inline double wasserstein1_1d(std::span<const double> values_a, std::span<const double> weights_a,
                              std::span<const double> values_b, std::span<const double> weights_b) {
  if (values_a.size() != weights_a.size() || values_b.size() != weights_b.size())
    throw InvalidInput("value and weight counts differ");
  if (values_a.empty() || values_b.empty()) throw InvalidInput("empty distribution");
  auto sorted = [](std::span<const double> v, std::span<const double> w) {
    std::vector<std::pair<double, double>> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], w[i]);
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto a = sorted(values_a, weights_a);
  const auto b = sorted(values_b, weights_b);

  // Walk both supports in order, keeping each CDF as its own running sum so
  // identical inputs produce identical partial sums.
  double fa = 0.0, fb = 0.0, total = 0.0;
  std::size_t i = 0, j = 0;
  double here = std::min(a[0].first, b[0].first);
  while (i < a.size() || j < b.size()) {
    while (i < a.size() && a[i].first == here) fa += a[i++].second;
    while (j < b.size() && b[j].first == here) fb += b[j++].second;
    if (i == a.size() && j == b.size()) break;
    const double next = std::min(i < a.size() ? a[i].first : b[j].first,
                                 j < b.size() ? b[j].first : a[i].first);
    total += std::abs(fa - fb) * (next - here);
    here = next;
  }
  return total;
}

}  // namespace clipbias
