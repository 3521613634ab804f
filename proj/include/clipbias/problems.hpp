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

// Finite-sum objectives with per-sample gradient oracles.

#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clipbias/error.hpp"
#include "clipbias/noise_models.hpp"
#include "clipbias/random.hpp"
#include "clipbias/vec_core.hpp"

namespace clipbias {

// f(x) = (1/n) sum_i f(x, s_i) with gradient oracles. Sample indices are
// zero-based.
template <typename P>
concept FiniteSumProblem = requires(const P& p, const RealVector& x, std::size_t i) {
  { p.n() } -> std::convertible_to<std::size_t>;
  { p.dim() } -> std::convertible_to<std::size_t>;
  { p.value(x) } -> std::convertible_to<double>;
  { p.full_gradient(x) } -> std::convertible_to<RealVector>;
  { p.per_sample_gradient(x, i) } -> std::convertible_to<RealVector>;
  { p.noise_residuals(x) } -> std::convertible_to<Empirical>;
};

struct ProblemMeta {
  double smoothness = 1.0;  // G
  double gap = 0.0;         // D_f(x0) = f(x0) - min f
  RealVector optimum;
};

// f(x) = (1/n) sum_i 1/2 |x - a_i|^2. G = 1, x* = mean(a), and the noise
// residuals mean(a) - a_i do not depend on x.
class QuadraticProblem {
 public:
  static constexpr bool kTranslationInvariantResiduals = true;

  explicit QuadraticProblem(std::vector<RealVector> centers)
      : centers_(std::move(centers)), mean_(RealVector::zeros(1)) {
    if (centers_.empty()) throw InvalidInput("problem needs at least one center");
    const std::size_t d = centers_.front().dim();
    std::vector<double> m(d, 0.0);
    for (const auto& a : centers_) {
      if (a.dim() != d) throw DimensionMismatch(d, a.dim());
      for (std::size_t j = 0; j < d; ++j) m[j] += a[j];
    }
    for (double& x : m) x /= static_cast<double>(centers_.size());
    mean_ = RealVector(std::move(m));
    min_value_ = value(mean_);
  }

  std::size_t n() const { return centers_.size(); }
  std::size_t dim() const { return mean_.dim(); }
  const std::vector<RealVector>& centers() const { return centers_; }
  const RealVector& optimum() const { return mean_; }
  const RealVector& center(std::size_t i) const { return centers_.at(i); }

  double value(const RealVector& x) const {
    check_dim(x);
    double s = 0.0;
    for (const auto& a : centers_) {
      for (std::size_t j = 0; j < x.dim(); ++j) {
        const double r = x[j] - a[j];
        s += 0.5 * r * r;
      }
    }
    return s / static_cast<double>(centers_.size());
  }

  double min_value() const { return min_value_; }

  RealVector full_gradient(const RealVector& x) const {
    check_dim(x);
    return x - mean_;
  }

  RealVector per_sample_gradient(const RealVector& x, std::size_t i) const {
    check_dim(x);
    if (i >= centers_.size()) throw InvalidInput("sample index out of range");
    return x - centers_[i];
  }

  // Writes x - a_i into out without allocating.
  void per_sample_gradient_into(std::span<const double> x, std::size_t i,
                                std::span<double> out) const {
    const auto& a = centers_[i];
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = x[j] - a[j];
  }

  Empirical noise_residuals(const RealVector& x) const {
    check_dim(x);
    std::vector<RealVector> atoms;
    atoms.reserve(centers_.size());
    for (const auto& a : centers_) atoms.push_back(mean_ - a);
    return Empirical::uniform(std::move(atoms));
  }

  ProblemMeta meta(const RealVector& x0) const {
    return {1.0, value(x0) - min_value_, mean_};
  }

 private:
  void check_dim(const RealVector& x) const {
    if (x.dim() != dim()) throw DimensionMismatch(dim(), x.dim());
  }

  std::vector<RealVector> centers_;
  RealVector mean_;
  double min_value_ = 0.0;
};

static_assert(FiniteSumProblem<QuadraticProblem>);

// a = (-3, -3, 9): x* = 1, but every per-sample gradient is clipped there.
inline QuadraticProblem make_example1() {
  return QuadraticProblem({RealVector{-3.0}, RealVector{-3.0}, RealVector{9.0}});
}

// a = (-3, 3): every x in [-2, 2] is stationary for clipped GD with c = 1.
inline QuadraticProblem make_example2() {
  return QuadraticProblem({RealVector{-3.0}, RealVector{3.0}});
}

inline QuadraticProblem make_single(RealVector center) {
  return QuadraticProblem({std::move(center)});
}

struct SyntheticMixtureOptions {
  std::size_t n = 10000;
  std::size_t dim = 10;
  std::vector<double> mean_scales = {6.0, 2.0, 1.0};  // N(0,36I), N(0,4I), N(0,I)
  std::vector<double> proportions = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
};

// Centers z_i = mu_{k(i)} + N(0, I) with component means mu_k ~ N(0, s_k^2 I)
// and k(i) drawn from the configured proportions.
inline QuadraticProblem make_synthetic_mixture(std::uint64_t seed,
                                               const SyntheticMixtureOptions& opt = {}) {
  if (opt.mean_scales.size() != opt.proportions.size() || opt.mean_scales.empty())
    throw InvalidInput("mixture scales and proportions must match");
  const SeededStream root{seed, 0x6D6978ULL};
  const SeededStream means_stream = root.child(1);
  const SeededStream assign_stream = root.child(2);
  const SeededStream noise_stream = root.child(3);

  std::vector<RealVector> mus;
  for (std::size_t k = 0; k < opt.mean_scales.size(); ++k) {
    DrawCursor cur(means_stream, k);
    std::vector<double> mu(opt.dim);
    for (double& x : mu) x = opt.mean_scales[k] * cur.next_normal();
    mus.emplace_back(std::move(mu));
  }
  std::vector<double> cumulative;
  double total = 0.0;
  for (double w : opt.proportions) {
    if (!(w > 0.0)) throw InvalidInput("mixture proportions must be > 0");
    cumulative.push_back(total += w);
  }

  std::vector<RealVector> centers;
  centers.reserve(opt.n);
  for (std::size_t i = 0; i < opt.n; ++i) {
    DrawCursor pick(assign_stream, i);
    const double u = pick.next_uniform() * total;
    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                 cumulative.begin()),
        cumulative.size() - 1);
    DrawCursor cur(noise_stream, i);
    std::vector<double> z(opt.dim);
    for (std::size_t j = 0; j < opt.dim; ++j) z[j] = mus[k][j] + cur.next_normal();
    centers.emplace_back(std::move(z));
  }
  return QuadraticProblem(std::move(centers));
}

// Constructors by name: example1, example2, synthetic-mixture, single.
inline QuadraticProblem make_problem(std::string_view name, std::uint64_t seed = 0) {
  if (name == "example1") return make_example1();
  if (name == "example2") return make_example2();
  if (name == "synthetic-mixture" || name == "synthetic") return make_synthetic_mixture(seed);
  if (name == "single") return make_single(RealVector{0.0});
  throw InvalidInput("unknown problem '" + std::string(name) + "'");
}

}  // namespace clipbias
