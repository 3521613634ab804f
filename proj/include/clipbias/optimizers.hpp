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

// Clipped SGD, DP-SGD and DP-SGD with pre-clipping perturbation, plus the
// deterministic full-batch clipped gradient descent used for the
// divergence examples.
//
// One step of the general loop:
//   S_t  = m indices drawn uniformly with replacement
//   g_t  = (1/m) sum_{i in S_t} clip(grad f(x_t, s_i) + k zeta_{t,i}, c)
//   x_{t+1} = x_t - alpha (g_t + Z_t),   Z_t ~ N(0, sigma^2 I)
// Batch indices, zeta and Z come from separate child streams keyed by t,
// so disabling k or sigma leaves every other variate untouched.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "clipbias/error.hpp"
#include "clipbias/privacy.hpp"
#include "clipbias/problems.hpp"
#include "clipbias/random.hpp"
#include "clipbias/vec_core.hpp"

namespace clipbias {

struct OptimizerConfig {
  double alpha = 0.001;
  ClipThreshold clip = ClipThreshold(1.0);
  std::uint64_t steps = 1000;
  std::size_t batch = 1;
  double sigma = 0.0;  // privacy noise std, 0 disables
  double k = 0.0;      // pre-clipping noise scale, 0 disables
  std::uint64_t seed = 0;
  RealVector x0 = RealVector::zeros(1);

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("alpha must be > 0");
    if (steps == 0) throw InvalidInput("steps must be >= 1");
    if (batch == 0) throw InvalidInput("batch size must be >= 1");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be >= 0");
    if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidInput("k must be >= 0");
  }
};

// iterates, gradients and objective have steps + 1 entries (x_0 .. x_T);
// clipped_means and noise_norms have steps entries (g_1 .. g_T).
struct Trajectory {
  std::vector<RealVector> iterates;
  std::vector<RealVector> gradients;
  std::vector<double> objective;
  std::vector<RealVector> clipped_means;
  std::vector<double> noise_norms;  // |Z_t|
  double alpha = 0.0;
  double clip = 0.0;
  double sigma = 0.0;
  double k = 0.0;
  std::size_t batch = 1;
  bool full_batch = false;

  std::uint64_t steps() const { return clipped_means.size(); }
  const RealVector& final_point() const { return iterates.back(); }
};

namespace detail {

inline constexpr std::uint64_t kBatchTag = 0x6261746368ULL;    // "batch"
inline constexpr std::uint64_t kZetaTag = 0x7A657461ULL;       // "zeta"
inline constexpr std::uint64_t kPrivacyTag = 0x70726976ULL;    // "priv"

template <FiniteSumProblem P>
void record_point(const P& p, const RealVector& x, Trajectory& tr) {
  tr.iterates.push_back(x);
  tr.gradients.push_back(p.full_gradient(x));
  tr.objective.push_back(p.value(x));
}

template <FiniteSumProblem P>
Trajectory run_stochastic(const P& p, const OptimizerConfig& cfg) {
  cfg.validate();
  if (cfg.x0.dim() != p.dim()) throw DimensionMismatch(p.dim(), cfg.x0.dim());
  const std::size_t d = p.dim();
  const double c = cfg.clip.value();
  const SeededStream root{cfg.seed, 0};
  const SeededStream batch_stream = root.child(kBatchTag);
  const SeededStream zeta_stream = root.child(kZetaTag);
  const SeededStream privacy_stream = root.child(kPrivacyTag);

  Trajectory tr;
  tr.alpha = cfg.alpha;
  tr.clip = c;
  tr.sigma = cfg.sigma;
  tr.k = cfg.k;
  tr.batch = cfg.batch;
  tr.iterates.reserve(cfg.steps + 1);
  tr.clipped_means.reserve(cfg.steps);

  std::vector<double> x(cfg.x0.values().begin(), cfg.x0.values().end());
  std::vector<double> g(d), acc(d), z(d);
  const std::vector<double> zero(d, 0.0);
  const double inv_m = 1.0 / static_cast<double>(cfg.batch);
  record_point(p, cfg.x0, tr);

  for (std::uint64_t t = 0; t < cfg.steps; ++t) {
    DrawCursor pick(batch_stream, t);
    std::optional<DrawCursor> zeta;
    if (cfg.k > 0.0) zeta.emplace(zeta_stream, t);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const auto i = static_cast<std::size_t>(pick.next_index(p.n()));
      if constexpr (requires { p.per_sample_gradient_into(std::span<const double>(x), i, std::span<double>(g)); }) {
        p.per_sample_gradient_into(x, i, g);
      } else {
        const RealVector gi = p.per_sample_gradient(RealVector(x), i);
        std::copy(gi.values().begin(), gi.values().end(), g.begin());
      }
      if (zeta)
        for (double& gj : g) gj += cfg.k * zeta->next_normal();
      add_clipped(zero, g, c, 1.0, acc);
    }
    for (double& a : acc) a *= inv_m;
    tr.clipped_means.emplace_back(acc);

    double znorm = 0.0;
    if (cfg.sigma > 0.0) {
      DrawCursor priv(privacy_stream, t);
      for (double& zj : z) zj = cfg.sigma * priv.next_normal();
      for (std::size_t j = 0; j < d; ++j) x[j] -= cfg.alpha * (acc[j] + z[j]);
      znorm = stable_norm(z);
    } else {
      for (std::size_t j = 0; j < d; ++j) x[j] -= cfg.alpha * acc[j];
    }
    tr.noise_norms.push_back(znorm);
    record_point(p, RealVector(x), tr);
  }
  return tr;
}

}  // namespace detail

// SGD with per-sample clipping; requires sigma = 0 and k = 0.
template <FiniteSumProblem P>
Trajectory clipped_sgd(const P& p, const OptimizerConfig& cfg) {
  if (cfg.sigma != 0.0 || cfg.k != 0.0)
    throw InvalidInput("clipped_sgd takes sigma = 0 and k = 0");
  return detail::run_stochastic(p, cfg);
}

// DP-SGD with the explicitly configured sigma.
template <FiniteSumProblem P>
Trajectory dp_sgd(const P& p, const OptimizerConfig& cfg) {
  if (cfg.k != 0.0) throw InvalidInput("dp_sgd takes k = 0; use dp_sgd_perturbed");
  return detail::run_stochastic(p, cfg);
}

// DP-SGD with sigma calibrated from the budget.
template <FiniteSumProblem P>
Trajectory dp_sgd(const P& p, OptimizerConfig cfg, const PrivacyBudget& budget) {
  cfg.sigma = calibrate_sigma(budget, cfg.clip);
  return dp_sgd(p, cfg);
}

template <FiniteSumProblem P>
Trajectory dp_sgd_perturbed(const P& p, const OptimizerConfig& cfg) {
  return detail::run_stochastic(p, cfg);
}

template <FiniteSumProblem P>
Trajectory dp_sgd_perturbed(const P& p, OptimizerConfig cfg, const PrivacyBudget& budget) {
  cfg.sigma = calibrate_sigma(budget, cfg.clip);
  return detail::run_stochastic(p, cfg);
}

// x_{t+1} = x_t - alpha (1/n) sum_i clip(grad f(x_t, s_i), c). No randomness.
template <FiniteSumProblem P>
Trajectory clipped_gd_full_batch(const P& p, double alpha, ClipThreshold clip,
                                 std::uint64_t steps, const RealVector& x0) {
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be > 0");
  if (x0.dim() != p.dim()) throw DimensionMismatch(p.dim(), x0.dim());
  const std::size_t d = p.dim();
  Trajectory tr;
  tr.alpha = alpha;
  tr.clip = clip.value();
  tr.batch = p.n();
  tr.full_batch = true;
  std::vector<double> x(x0.values().begin(), x0.values().end());
  std::vector<double> acc(d);
  const std::vector<double> zero(d, 0.0);
  const double inv_n = 1.0 / static_cast<double>(p.n());
  detail::record_point(p, x0, tr);
  for (std::uint64_t t = 0; t < steps; ++t) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const RealVector xv(x);
    for (std::size_t i = 0; i < p.n(); ++i) {
      const RealVector gi = p.per_sample_gradient(xv, i);
      add_clipped(zero, gi.values(), clip.value(), 1.0, acc);
    }
    for (double& a : acc) a *= inv_n;
    tr.clipped_means.emplace_back(acc);
    tr.noise_norms.push_back(0.0);
    for (std::size_t j = 0; j < d; ++j) x[j] -= alpha * acc[j];
    detail::record_point(p, RealVector(x), tr);
  }
  return tr;
}

// alpha = sqrt(D_f d ln(1/delta)) / (n eps c sqrt(G)).
inline double step_size_theorem5(double gap, double smoothness, const PrivacyBudget& b,
                                 ClipThreshold c, std::size_t dim) {
  b.validate();
  if (!(gap >= 0.0) || !(smoothness > 0.0)) throw InvalidInput("need D_f >= 0 and G > 0");
  return std::sqrt(gap * static_cast<double>(dim) * std::log(1.0 / b.delta)) /
         (static_cast<double>(b.n) * b.epsilon * c.value() * std::sqrt(smoothness));
}

// Stationarity rule: the largest per-step move over the last `window`
// steps is below 10 * alpha * tol.
inline bool is_stationary(const Trajectory& tr, std::size_t window = 100, double tol = 1e-3) {
  if (tr.iterates.size() < window + 1) return false;
  const std::size_t end = tr.iterates.size() - 1;
  double worst = 0.0;
  for (std::size_t t = end - window; t < end; ++t)
    worst = std::max(worst, norm(tr.iterates[t + 1] - tr.iterates[t]));
  return worst < 10.0 * tr.alpha * tol;
}

struct DescentCheck {
  double mean_inner = 0.0;  // (1/T) sum <grad f(x_t), g_t>
  double bound = 0.0;       // D_f / (alpha T) + G alpha c^2 / 2
  bool holds = false;
};

// Realized form of the clipped-SGD descent inequality. With alpha = 1/sqrt(T)
// the bound is D_f/sqrt(T) + G c^2 / (2 sqrt(T)).
inline DescentCheck descent_check(const Trajectory& tr, const ProblemMeta& meta) {
  const double steps = static_cast<double>(tr.steps());
  double s = 0.0;
  for (std::size_t t = 0; t < tr.steps(); ++t) s += inner(tr.gradients[t], tr.clipped_means[t]);
  DescentCheck out;
  out.mean_inner = s / steps;
  out.bound = meta.gap / (tr.alpha * steps) + 0.5 * meta.smoothness * tr.alpha * tr.clip * tr.clip;
  out.holds = out.mean_inner <= out.bound;
  return out;
}

}  // namespace clipbias
