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

// Analytical quantities of clipped gradient methods evaluated on concrete
// distributions: expected clipped inner products, the symmetric-noise lower
// bounds, the exact clipping bias b = E_p[s] - E_q[s] and its Wasserstein
// bound, all in terms of the score s(xi) = <v, clip(v + xi, c)>.
//
// Finite (empirical) models are summed exactly; anything with a Gaussian
// part is estimated by Monte Carlo and carries a standard error.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clipbias/error.hpp"
#include "clipbias/monte_carlo.hpp"
#include "clipbias/noise_models.hpp"
#include "clipbias/optimizers.hpp"
#include "clipbias/problems.hpp"
#include "clipbias/special.hpp"
#include "clipbias/vec_core.hpp"
#include "clipbias/wasserstein.hpp"

namespace clipbias {

inline constexpr double kDefaultThresholdFraction = 0.25;
inline constexpr std::uint64_t kDefaultMcSamples = 100000;

struct Expectation {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = true;
};

struct VectorExpectation {
  RealVector value;
  std::vector<double> std_error;
  bool exact = true;
};

struct BoundReport {
  double estimate = 0.0;
  double std_error = 0.0;
  double lower_bound = 0.0;
  double prob_term = 0.0;
  double z = kDefaultThresholdFraction;
  bool exact = true;
  bool holds = false;  // estimate >= lower_bound - 3 std_error
};

// min(y^2, 3/4 c y).
inline double h_c(double y, double c) {
  if (!(y >= 0.0)) throw InvalidInput("h_c takes y >= 0");
  return std::min(y * y, 0.75 * c * y);
}

namespace detail {

inline void check_dims(const RealVector& v, std::size_t model_dim) {
  if (v.dim() != model_dim) throw DimensionMismatch(model_dim, v.dim());
}

inline double check_fraction(double z) {
  if (!(z > 0.0 && z < 1.0)) throw InvalidInput("threshold fraction z must lie in (0, 1)");
  return z;
}

// Unwraps k = 0 perturbations and zero-scale Gaussians to an empirical model.
inline std::optional<Empirical> as_empirical(const NoiseModel& m) {
  if (const auto* e = m.get_if<Empirical>()) return *e;
  if (const auto* p = m.get_if<Perturbed>())
    if (p->k == 0.0) return as_empirical(*p->base);
  if (const auto* g = m.get_if<IsotropicGaussian>())
    if (g->scale == 0.0) return Empirical::point_mass(RealVector::zeros(g->dim));
  return std::nullopt;
}

inline bool model_is_symmetric(const NoiseModel& m) {
  if (const auto* e = m.get_if<Empirical>()) return e->is_symmetric();
  if (m.get_if<IsotropicGaussian>() != nullptr) return true;
  if (const auto* p = m.get_if<Perturbed>()) return model_is_symmetric(*p->base);
  if (const auto* s = m.get_if<SphericalMixture>()) {
    return std::all_of(s->components().begin(), s->components().end(),
                       [](const SphericalComponent& c) { return c.center.is_zero(); });
  }
  return false;
}

// s(y) = <v, clip(y, c)> for a stochastic gradient y (rather than noise).
inline double point_score(std::span<const double> v, std::span<const double> y, double c) {
  double sq = 0.0, vy = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    sq += y[j] * y[j];
    vy += v[j] * y[j];
  }
  const double n = std::sqrt(sq);
  return n <= c ? vy : vy / n * c;
}

}  // namespace detail

// Scores s(xi) of every atom, in atom order.
inline std::vector<double> pushforward_scores(const RealVector& v, const Empirical& p, ClipThreshold c) {
  detail::check_dims(v, p.dim());
  std::vector<double> s(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) s[i] = clip_score(v.values(), p.atoms()[i].values(), c.value());
  return s;
}

inline double expected_score(const RealVector& v, const Empirical& p, ClipThreshold c) {
  detail::check_dims(v, p.dim());
  double e = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    e += p.weights()[i] * clip_score(v.values(), p.atoms()[i].values(), c.value());
  return e;
}

// E_{xi ~ model} <v, clip(v + xi, c)>.
inline Expectation expected_clipped_inner(const RealVector& v, const NoiseModel& model, ClipThreshold c,
                                          const SeededStream& stream = {},
                                          std::uint64_t mc_samples = kDefaultMcSamples) {
  detail::check_dims(v, model.dim());
  if (auto e = detail::as_empirical(model)) return {expected_score(v, *e, c), 0.0, true};
  const auto est = monte_carlo_mean(mc_samples, [&](std::uint64_t i) {
    std::vector<double> xi(model.dim());
    model.sample_into(stream, i, xi);
    return clip_score(v.values(), xi, c.value());
  });
  return {est.mean, est.std_error, false};
}

// E_{xi ~ model} clip(v + xi, c).
inline VectorExpectation expected_clipped_gradient(const RealVector& v, const NoiseModel& model,
                                                   ClipThreshold c, const SeededStream& stream = {},
                                                   std::uint64_t mc_samples = kDefaultMcSamples) {
  detail::check_dims(v, model.dim());
  const std::size_t d = v.dim();
  if (auto e = detail::as_empirical(model)) {
    std::vector<double> acc(d, 0.0);
    for (std::size_t i = 0; i < e->size(); ++i)
      add_clipped(v.values(), e->atoms()[i].values(), c.value(), e->weights()[i], acc);
    return {RealVector(std::move(acc)), std::vector<double>(d, 0.0), true};
  }
  const auto est = monte_carlo_vector_mean(mc_samples, d, [&](std::uint64_t i, std::span<double> out) {
    std::vector<double> xi(d);
    model.sample_into(stream, i, xi);
    add_clipped(v.values(), xi, c.value(), 1.0, out);
  });
  return {RealVector(est.mean), est.std_error, false};
}

// Symmetric-noise lower bound with threshold fraction z:
//   |v| <= (1-z)c :  |v|^2        P(|xi| < zc)
//   |v| >  (1-z)c :  (1-z)c |v|   P(|xi| < zc)
// z = 1/4 gives min(|v|^2, 3/4 c |v|) P(|xi| < c/4).
inline BoundReport theorem2_bound(const RealVector& v, const NoiseModel& model, ClipThreshold c,
                                  double z = kDefaultThresholdFraction, const SeededStream& stream = {},
                                  std::uint64_t mc_samples = kDefaultMcSamples) {
  detail::check_dims(v, model.dim());
  detail::check_fraction(z);
  if (!detail::model_is_symmetric(model))
    throw SymmetryViolation("lower bound requires a symmetric noise model");
  BoundReport r;
  r.z = z;
  const auto prob = prob_norm_below(model, z * c.value(), stream.child(1), mc_samples);
  r.prob_term = prob.value;
  const double y = norm(v);
  const double knee = (1.0 - z) * c.value();
  r.lower_bound = (y <= knee ? y * y : knee * y) * prob.value;
  const auto e = expected_clipped_inner(v, model, c, stream, mc_samples);
  r.estimate = e.value;
  r.std_error = e.std_error;
  r.exact = e.exact && prob.exact;
  r.holds = r.estimate >= r.lower_bound - 3.0 * r.std_error;
  return r;
}

// Lower bound for stochastic gradients drawn from a mixture of spherical
// components centred at u_i with weights w_i, sum w_i u_i = v and
// <u_i, v> >= 0:
//   |v| sum_i w_i min(|u_i|, (1-z)c) cos(v, u_i) P_i(|eta| < zc).
// The estimate is E <v, clip(y, c)> with y drawn from the mixture.
inline BoundReport theorem3_bound(const RealVector& v, const SphericalMixture& mixture, ClipThreshold c,
                                  double z = kDefaultThresholdFraction, const SeededStream& stream = {},
                                  std::uint64_t mc_samples = kDefaultMcSamples) {
  detail::check_dims(v, mixture.dim());
  detail::check_fraction(z);
  if (norm(mixture.mean() - v) > 1e-9)
    throw PreconditionViolation("mixture mean sum w_i u_i must equal v");
  for (const auto& comp : mixture.components())
    if (inner(comp.center, v) < 0.0)
      throw PreconditionViolation("every component center must satisfy <u_i, v> >= 0");

  BoundReport r;
  r.z = z;
  const double y = norm(v);
  const double knee = (1.0 - z) * c.value();
  double sum = 0.0;
  double prob_avg = 0.0;
  for (const auto& comp : mixture.components()) {
    const double p = gaussian_norm_below(comp.radial_scale, mixture.dim(), z * c.value());
    prob_avg += comp.weight * p;
    const double un = norm(comp.center);
    if (un == 0.0 || y == 0.0) continue;
    sum += comp.weight * std::min(un, knee) * cosine(v, comp.center) * p;
  }
  r.prob_term = prob_avg;
  r.lower_bound = y * sum;

  const bool finite = std::all_of(mixture.components().begin(), mixture.components().end(),
                                  [](const SphericalComponent& s) { return s.radial_scale == 0.0; });
  if (finite) {
    double e = 0.0;
    for (const auto& comp : mixture.components())
      e += comp.weight * detail::point_score(v.values(), comp.center.values(), c.value());
    r.estimate = e;
  } else {
    const NoiseModel model(mixture);
    const auto est = monte_carlo_mean(mc_samples, [&](std::uint64_t i) {
      std::vector<double> g(v.dim());
      model.sample_into(stream, i, g);
      return detail::point_score(v.values(), g, c.value());
    });
    r.estimate = est.mean;
    r.std_error = est.std_error;
    r.exact = false;
  }
  r.holds = r.estimate >= r.lower_bound - 3.0 * r.std_error;
  return r;
}

// b = sum_xi s(xi) (p(xi) - q(xi)), exact.
inline double clipping_bias(const RealVector& v, const Empirical& p, const Empirical& q, ClipThreshold c) {
  if (p.dim() != q.dim()) throw DimensionMismatch(p.dim(), q.dim());
  return expected_score(v, p, c) - expected_score(v, q, c);
}

// Optimal transport cost between p and q under
// d(a, b) = |<v, clip(v+a, c)> - <v, clip(v+b, c)>|. The cost only sees
// the scores, so the problem is one-dimensional transport of the two
// pushforward distributions.
inline double wasserstein_clip(const RealVector& v, ClipThreshold c, const Empirical& p, const Empirical& q) {
  if (p.dim() != q.dim()) throw DimensionMismatch(p.dim(), q.dim());
  const auto sp = pushforward_scores(v, p, c);
  const auto sq = pushforward_scores(v, q, c);
  return wasserstein1_1d(sp, p.weights(), sq, q.weights());
}

struct Theorem6Report {
  double estimate = 0.0;
  double std_error = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;  // estimate - lower_bound
  double noise_variance = 0.0;
  bool exact = true;
};

// E over xi ~ model, zeta ~ N(0, I) of <v, clip(v + xi + k zeta, c)>
// against |v| min(|v|, 3/4 c) P(|k zeta| < c/4). The gap is expected to
// exceed -O(var(xi) / k^2). One-dimensional models are evaluated exactly
// through the censored normal mean.
inline Theorem6Report theorem6_gap(const RealVector& v, const Empirical& model, ClipThreshold c, double k,
                                   const SeededStream& stream = {},
                                   std::uint64_t mc_samples = kDefaultMcSamples) {
  detail::check_dims(v, model.dim());
  if (!(k > 0.0)) throw InvalidInput("theorem6_gap requires k > 0");
  Theorem6Report r;
  r.noise_variance = model.variance();
  const double y = norm(v);
  r.lower_bound = y * std::min(y, 0.75 * c.value()) * gaussian_norm_below(k, model.dim(), 0.25 * c.value());
  if (model.dim() == 1) {
    double e = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i)
      e += model.weights()[i] * v[0] * censored_normal_clip_mean(v[0] + model.atoms()[i][0], k, c.value());
    r.estimate = e;
  } else {
    const auto e = expected_clipped_inner(v, perturb(NoiseModel(model), k), c, stream, mc_samples);
    r.estimate = e.value;
    r.std_error = e.std_error;
    r.exact = false;
  }
  r.gap = r.estimate - r.lower_bound;
  return r;
}

// Right-hand side of the DP-SGD convergence bound:
//   (v/2 + 3/2) c sqrt(D_f G d ln(1/delta)) / (n eps) + mean_t W_t.
inline double theorem5_rhs(double gap, double smoothness, const PrivacyBudget& b, ClipThreshold c,
                           std::size_t dim, double mean_wasserstein) {
  b.validate();
  return (0.5 * b.v + 1.5) * c.value() *
             std::sqrt(gap * smoothness * static_cast<double>(dim) * std::log(1.0 / b.delta)) /
             (static_cast<double>(b.n) * b.epsilon) +
         mean_wasserstein;
}

struct LedgerRecord {
  std::uint64_t step = 0;
  double grad_norm = 0.0;
  double prob_term = 0.0;
  double lhs = 0.0;               // P(|xi| < zc) min(|grad|, (1-z)c) |grad|
  double expected_p = 0.0;        // E_p <grad, g>
  double expected_sym = 0.0;      // E_q <grad, g>, q symmetrized
  double bias = 0.0;              // b_t
  double w_bound = std::nan("");  // W(q, p), NaN when not computed
  double realized = 0.0;          // <grad f(x_t), g_t>
  double variance = 0.0;          // Var of <grad, g_t> given x_t
};

struct BiasLedger {
  std::vector<LedgerRecord> records;
  double z = kDefaultThresholdFraction;
  double gap = 0.0;          // D_f
  double smoothness = 1.0;   // G
  double mean_lhs = 0.0;
  double mean_bias = 0.0;
  double mean_realized = 0.0;
  double bound = 0.0;        // D_f / sqrt(T) + G c^2 / (2 sqrt(T))
  double std_error = 0.0;    // of the realized-vs-expected martingale
  double slack = 0.0;        // bound - mean_bias + 3 SE - mean_lhs
  bool holds = false;
};

struct LedgerOptions {
  double z = kDefaultThresholdFraction;
  bool compute_wasserstein = true;
};

// Per-step bias ledger for a clipped SGD trajectory with
// alpha = 1/sqrt(T), q_t = symmetrize(p_t). Checks
//   (1/T) sum lhs_t <= D_f/sqrt(T) + G c^2/(2 sqrt(T)) - (1/T) sum b_t + 3 SE
// where SE covers the gap between realized inner products and their exact
// conditional expectations.
template <FiniteSumProblem P>
BiasLedger corollary1_ledger(const P& problem, const Trajectory& tr, const LedgerOptions& opt = {}) {
  detail::check_fraction(opt.z);
  if (tr.sigma != 0.0 || tr.k != 0.0)
    throw PreconditionViolation("ledger applies to clipped SGD trajectories (sigma = 0, k = 0)");
  const double steps = static_cast<double>(tr.steps());
  if (tr.steps() == 0) throw PreconditionViolation("trajectory has no steps");
  if (std::abs(tr.alpha * std::sqrt(steps) - 1.0) > 1e-9)
    throw PreconditionViolation("ledger requires alpha = 1/sqrt(T)");

  const ClipThreshold c(tr.clip);
  const auto meta = problem.meta(tr.iterates.front());
  BiasLedger L;
  L.z = opt.z;
  L.gap = meta.gap;
  L.smoothness = meta.smoothness;
  L.records.reserve(tr.steps());

  std::optional<Empirical> p;
  std::optional<Empirical> q;
  double prob = 0.0;
  double sum_var = 0.0;
  const double knee = (1.0 - opt.z) * c.value();
  const double m = tr.full_batch ? std::numeric_limits<double>::infinity() : static_cast<double>(tr.batch);

  for (std::uint64_t t = 0; t < tr.steps(); ++t) {
    const RealVector& x = tr.iterates[t];
    bool fresh = !p.has_value();
    if constexpr (!requires { P::kTranslationInvariantResiduals; }) fresh = true;
    if (fresh) {
      p = problem.noise_residuals(x);
      q = symmetrize(*p);
      prob = prob_norm_below(NoiseModel(*q), opt.z * c.value()).value;
    }
    const RealVector& grad = tr.gradients[t];
    LedgerRecord r;
    r.step = t;
    r.grad_norm = norm(grad);
    r.prob_term = prob;
    r.lhs = prob * std::min(r.grad_norm, knee) * r.grad_norm;

    const auto sp = pushforward_scores(grad, *p, c);
    double ep = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) ep += p->weights()[i] * sp[i];
    double var = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) var += p->weights()[i] * (sp[i] - ep) * (sp[i] - ep);
    const auto sq = pushforward_scores(grad, *q, c);
    double eq = 0.0;
    for (std::size_t i = 0; i < sq.size(); ++i) eq += q->weights()[i] * sq[i];

    r.expected_p = ep;
    r.expected_sym = eq;
    r.bias = ep - eq;
    r.variance = std::isinf(m) ? 0.0 : var / m;
    r.realized = inner(grad, tr.clipped_means[t]);
    if (opt.compute_wasserstein) r.w_bound = wasserstein1_1d(sq, q->weights(), sp, p->weights());

    L.mean_lhs += r.lhs;
    L.mean_bias += r.bias;
    L.mean_realized += r.realized;
    sum_var += r.variance;
    L.records.push_back(r);
  }
  L.mean_lhs /= steps;
  L.mean_bias /= steps;
  L.mean_realized /= steps;
  L.bound = meta.gap / std::sqrt(steps) + meta.smoothness * c.value() * c.value() / (2.0 * std::sqrt(steps));
  L.std_error = std::sqrt(sum_var) / steps;
  L.slack = L.bound - L.mean_bias + 3.0 * L.std_error - L.mean_lhs;
  L.holds = L.slack >= 0.0;
  return L;
}

}  // namespace clipbias
