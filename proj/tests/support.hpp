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

// Random instance generators for property tests. They draw from std::mt19937_64,
// independent of the library's counter-based streams.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "clipbias/noise_models.hpp"
#include "clipbias/vec_core.hpp"

namespace clipbias::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

  RealVector vector(std::size_t dim, double scale = 1.0) {
    std::vector<double> x(dim);
    for (double& v : x) v = scale * normal();
    return RealVector(std::move(x));
  }

  std::vector<double> weights(std::size_t n) {
    std::vector<double> w(n);
    double total = 0.0;
    for (double& x : w) total += (x = uniform(0.05, 1.0));
    for (double& x : w) x /= total;
    return w;
  }

  Empirical empirical(std::size_t dim, std::size_t atoms, double scale) {
    std::vector<RealVector> a;
    for (std::size_t i = 0; i < atoms; ++i) a.push_back(vector(dim, scale));
    return Empirical(std::move(a), weights(atoms));
  }

  // {+xi_i, -xi_i} pairs with equal weights; zero atom allowed once.
  Empirical symmetric_empirical(std::size_t dim, std::size_t pairs, double scale) {
    std::vector<RealVector> a;
    std::vector<double> w = weights(pairs);
    std::vector<double> ww;
    for (std::size_t i = 0; i < pairs; ++i) {
      RealVector x = vector(dim, scale);
      a.push_back(x);
      a.push_back(-x);
      ww.push_back(0.5 * w[i]);
      ww.push_back(0.5 * w[i]);
    }
    return Empirical(std::move(a), std::move(ww));
  }

  // p(xi) >= p(-xi) whenever <xi, v> > 0.
  Empirical positively_skewed(const RealVector& v, std::size_t pairs, double scale) {
    std::vector<RealVector> a;
    std::vector<double> w;
    double total = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
      RealVector x = vector(v.dim(), scale);
      if (inner(x, v) < 0.0) x = -x;
      const double hi = uniform(0.1, 1.0);
      const double lo = hi * uniform(0.0, 1.0);
      a.push_back(x);
      w.push_back(hi);
      total += hi;
      if (lo > 0.0) {
        a.push_back(-x);
        w.push_back(lo);
        total += lo;
      }
    }
    for (double& x : w) x /= total;
    return Empirical(std::move(a), std::move(w));
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace clipbias::testing
