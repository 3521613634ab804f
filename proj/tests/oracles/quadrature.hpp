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

// Test-only quadrature oracle for E[max(-c, min(c, X))], X ~ N(m, s^2).

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace clipbias::oracle {

inline double censored_mean_by_quadrature(double m, double s, double c) {
  auto integrand = [&](double z) {
    const double x = m + s * z;
    return std::clamp(x, -c, c) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  };
  // Split at the clip kinks so each piece is smooth.
  const double k1 = (-c - m) / s;
  const double k2 = (c - m) / s;
  double pts[] = {-40.0, std::clamp(k1, -40.0, 40.0), std::clamp(k2, -40.0, 40.0), 40.0};
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (pts[i + 1] > pts[i])
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, pts[i], pts[i + 1], 15, 1e-14);
  }
  return total;
}

}  // namespace clipbias::oracle
