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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "clipbias/error.hpp"

namespace clipbias {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Upper tail 1 - Phi(x), accurate far into the tail.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// P(a < Z < b) for standard normal Z, picking the tail that avoids
// cancellation.
inline double normal_interval(double a, double b) {
  if (a > 0.0) return normal_sf(a) - normal_sf(b);
  return normal_cdf(b) - normal_cdf(a);
}

// E[max(-c, min(c, X))] for X ~ N(mean, sd^2). sd = 0 gives the clamped mean.
inline double censored_normal_clip_mean(double mean, double sd, double c) {
  if (!(sd >= 0.0)) throw InvalidInput("standard deviation must be >= 0");
  if (!(c > 0.0)) throw InvalidInput("clip threshold must be > 0");
  if (std::isinf(c)) return mean;
  if (sd == 0.0) return std::clamp(mean, -c, c);
  const double a = (-c - mean) / sd;
  const double b = (c - mean) / sd;
  return c * (normal_sf(b) - normal_cdf(a)) + mean * normal_interval(a, b) +
         sd * (normal_pdf(a) - normal_pdf(b));
}

// P(|scale * Z| < radius) for Z ~ N(0, I_dim), via the chi-square CDF.
inline double gaussian_norm_below(double scale, std::size_t dim, double radius) {
  if (!(radius > 0.0)) throw InvalidInput("radius must be > 0");
  if (scale == 0.0) return 1.0;
  const double t = radius / scale;
  return boost::math::gamma_p(0.5 * static_cast<double>(dim), 0.5 * t * t);
}

}  // namespace clipbias
