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

// Gaussian-mechanism noise calibration for DP-SGD. The constants u and v
// come from an external privacy accountant and are plain configuration
// here; sigma is "calibrated under the configured v", not a verified
// guarantee.

#pragma once

#include <cmath>
#include <cstdint>

#include "clipbias/error.hpp"
#include "clipbias/vec_core.hpp"

namespace clipbias {

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-5;
  std::uint64_t n = 1;      // dataset size
  std::uint64_t steps = 1;  // T
  std::uint64_t batch = 1;  // m
  double u = 1.0;           // regime constant
  double v = 1.0;           // calibration constant

  void validate() const {
    if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
    if (n == 0) throw InvalidInput("dataset size must be >= 1");
    if (steps == 0) throw InvalidInput("iteration count must be >= 1");
    if (batch == 0 || batch > n) throw InvalidInput("batch size must lie in [1, n]");
    if (!(u > 0.0) || !(v > 0.0)) throw InvalidInput("constants u, v must be > 0");
  }
};

// sigma = sqrt(v c^2 T ln(1/delta) / (n^2 eps^2)); per-coordinate standard
// deviation of the noise added to the averaged clipped gradient.
inline double calibrate_sigma(const PrivacyBudget& b, ClipThreshold c) {
  b.validate();
  const double n = static_cast<double>(b.n);
  const double var = b.v * c.value() * c.value() * static_cast<double>(b.steps) *
                     std::log(1.0 / b.delta) / (n * n * b.epsilon * b.epsilon);
  return std::sqrt(var);
}

// epsilon <= u q^2 T with q = m / n.
inline bool check_epsilon_regime(const PrivacyBudget& b) {
  b.validate();
  const double q = static_cast<double>(b.batch) / static_cast<double>(b.n);
  return b.epsilon <= b.u * q * q * static_cast<double>(b.steps);
}

}  // namespace clipbias
