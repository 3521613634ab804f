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

// Gradient-noise distributions: isotropic Gaussian, finite empirical,
// spherical mixtures and the pre-clipping perturbation xi + k * zeta.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "clipbias/error.hpp"
#include "clipbias/monte_carlo.hpp"
#include "clipbias/random.hpp"
#include "clipbias/special.hpp"
#include "clipbias/vec_core.hpp"

namespace clipbias {

inline constexpr double kWeightSumTolerance = 1e-12;

struct IsotropicGaussian {
  double scale = 1.0;
  std::size_t dim = 1;

  IsotropicGaussian(double scale_, std::size_t dim_) : scale(scale_), dim(dim_) {
    if (!(scale >= 0.0) || !std::isfinite(scale))
      throw InvalidInput("gaussian scale must be finite and >= 0");
    if (dim == 0) throw InvalidInput("gaussian dim must be >= 1");
  }
};

// Finite distribution over atoms. Atoms are kept in construction order;
// merged() gives the canonical sorted form with coincident atoms combined.
class Empirical {
 public:
  Empirical(std::vector<RealVector> atoms, std::vector<double> weights)
      : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    if (atoms_.empty()) throw InvalidInput("empirical model needs at least one atom");
    if (atoms_.size() != weights_.size())
      throw InvalidInput("atom and weight counts differ");
    const std::size_t d = atoms_.front().dim();
    double total = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (atoms_[i].dim() != d) throw DimensionMismatch(d, atoms_[i].dim());
      if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i]))
        throw InvalidInput("empirical weights must be positive and finite");
      total += weights_[i];
      cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance)
      throw InvalidInput("empirical weights must sum to 1");
  }

  static Empirical uniform(std::vector<RealVector> atoms) {
    const double w = 1.0 / static_cast<double>(atoms.size());
    std::vector<double> weights(atoms.size(), w);
    return Empirical(std::move(atoms), std::move(weights));
  }

  static Empirical point_mass(RealVector atom) {
    return Empirical({std::move(atom)}, {1.0});
  }

  std::size_t dim() const { return atoms_.front().dim(); }
  std::size_t size() const { return atoms_.size(); }
  const std::vector<RealVector>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }

  // Index of the atom selected by a uniform variate u in [0, 1).
  std::size_t locate(double u) const {
    const double target = u * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    const auto i = static_cast<std::size_t>(it - cumulative_.begin());
    return std::min(i, atoms_.size() - 1);
  }

  Empirical merged() const {
    std::vector<std::size_t> order(atoms_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return lex_less(atoms_[a], atoms_[b]);
    });
    std::vector<RealVector> atoms;
    std::vector<double> weights;
    for (std::size_t i : order) {
      if (!atoms.empty() && atoms.back() == atoms_[i]) {
        weights.back() += weights_[i];
      } else {
        atoms.push_back(atoms_[i]);
        weights.push_back(weights_[i]);
      }
    }
    return Empirical(std::move(atoms), std::move(weights));
  }

  RealVector mean() const {
    std::vector<double> m(dim(), 0.0);
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      for (std::size_t j = 0; j < dim(); ++j) m[j] += weights_[i] * atoms_[i][j];
    return RealVector(std::move(m));
  }

  // Total variance E|xi - E xi|^2.
  double variance() const {
    const RealVector m = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const double r = norm(atoms_[i] - m);
      s += weights_[i] * r * r;
    }
    return s;
  }

  // p(A) = p(-A): every atom's reflection carries the same total weight.
  bool is_symmetric(double tol = kWeightSumTolerance) const {
    const Empirical m = merged();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const RealVector reflected = -m.atoms_[i];
      const auto it = std::lower_bound(
          m.atoms_.begin(), m.atoms_.end(), reflected,
          [](const RealVector& a, const RealVector& b) { return lex_less(a, b); });
      if (it == m.atoms_.end() || !(*it == reflected)) return false;
      const double w = m.weights_[static_cast<std::size_t>(it - m.atoms_.begin())];
      if (std::abs(w - m.weights_[i]) > tol) return false;
    }
    return true;
  }

  friend bool operator==(const Empirical& a, const Empirical& b) {
    return a.atoms_ == b.atoms_ && a.weights_ == b.weights_;
  }

 private:
  static bool lex_less(const RealVector& a, const RealVector& b) {
    return std::lexicographical_compare(a.values().begin(), a.values().end(),
                                        b.values().begin(), b.values().end());
  }

  std::vector<RealVector> atoms_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

struct SphericalComponent {
  double weight;
  RealVector center;
  double radial_scale;
};

// Mixture of spherical Gaussians center_i + radial_scale_i * N(0, I).
class SphericalMixture {
 public:
  explicit SphericalMixture(std::vector<SphericalComponent> components)
      : components_(std::move(components)) {
    if (components_.empty()) throw InvalidInput("mixture needs at least one component");
    const std::size_t d = components_.front().center.dim();
    double total = 0.0;
    for (const auto& comp : components_) {
      if (comp.center.dim() != d) throw DimensionMismatch(d, comp.center.dim());
      if (!(comp.weight > 0.0)) throw InvalidInput("mixture weights must be > 0");
      if (!(comp.radial_scale >= 0.0) || !std::isfinite(comp.radial_scale))
        throw InvalidInput("radial scale must be finite and >= 0");
      total += comp.weight;
      cumulative_.push_back(total);
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance)
      throw InvalidInput("mixture weights must sum to 1");
  }

  std::size_t dim() const { return components_.front().center.dim(); }
  const std::vector<SphericalComponent>& components() const { return components_; }

  std::size_t locate(double u) const {
    const double target = u * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()),
                    components_.size() - 1);
  }

  RealVector mean() const {
    std::vector<double> m(dim(), 0.0);
    for (const auto& comp : components_)
      for (std::size_t j = 0; j < dim(); ++j) m[j] += comp.weight * comp.center[j];
    return RealVector(std::move(m));
  }

 private:
  std::vector<SphericalComponent> components_;
  std::vector<double> cumulative_;
};

class NoiseModel;

// Distribution of xi + k * zeta with xi ~ base and zeta ~ N(0, I) independent.
struct Perturbed {
  std::shared_ptr<const NoiseModel> base;
  double k = 0.0;
};

class NoiseModel {
 public:
  using Variant = std::variant<IsotropicGaussian, Empirical, SphericalMixture, Perturbed>;

  NoiseModel(IsotropicGaussian g) : v_(std::move(g)) {}
  NoiseModel(Empirical e) : v_(std::move(e)) {}
  NoiseModel(SphericalMixture m) : v_(std::move(m)) {}
  NoiseModel(Perturbed p) : v_(std::move(p)) {
    if (!std::get<Perturbed>(v_).base) throw InvalidInput("perturbed model without base");
  }

  const Variant& variant() const { return v_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

  std::size_t dim() const {
    return std::visit(
        [](const auto& m) -> std::size_t {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, IsotropicGaussian>) return m.dim;
          else if constexpr (std::is_same_v<T, Perturbed>) return m.base->dim();
          else return m.dim();
        },
        v_);
  }

  // True when every expectation over the model is a finite weighted sum.
  bool is_finite() const {
    if (std::holds_alternative<Empirical>(v_)) return true;
    if (const auto* p = std::get_if<Perturbed>(&v_)) return p->k == 0.0 && p->base->is_finite();
    if (const auto* g = std::get_if<IsotropicGaussian>(&v_)) return g->scale == 0.0;
    return false;
  }

  // Writes draw number `draw` of `stream` into out (size dim()).
  void sample_into(const SeededStream& stream, std::uint64_t draw, std::span<double> out) const {
    std::visit([&](const auto& m) { sample_one(m, stream, draw, out); }, v_);
  }

 private:
  static constexpr std::uint64_t kPerturbTag = 0x7A657461;  // "zeta"

  static void sample_one(const IsotropicGaussian& g, const SeededStream& s,
                         std::uint64_t draw, std::span<double> out) {
    if (g.scale == 0.0) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    DrawCursor cur(s, draw);
    for (double& x : out) x = g.scale * cur.next_normal();
  }

  static void sample_one(const Empirical& e, const SeededStream& s, std::uint64_t draw,
                         std::span<double> out) {
    DrawCursor cur(s, draw);
    const auto& atom = e.atoms()[e.locate(cur.next_uniform())];
    std::copy(atom.values().begin(), atom.values().end(), out.begin());
  }

  static void sample_one(const SphericalMixture& m, const SeededStream& s,
                         std::uint64_t draw, std::span<double> out) {
    DrawCursor cur(s, draw);
    const auto& comp = m.components()[m.locate(cur.next_uniform())];
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = comp.center[j] + comp.radial_scale * cur.next_normal();
  }

  static void sample_one(const Perturbed& p, const SeededStream& s, std::uint64_t draw,
                         std::span<double> out) {
    p.base->sample_into(s, draw, out);
    if (p.k == 0.0) return;
    DrawCursor cur(s.child(kPerturbTag), draw);
    for (double& x : out) x += p.k * cur.next_normal();
  }

  Variant v_;
};

inline std::vector<RealVector> sample(const NoiseModel& model, const SeededStream& stream,
                                      std::size_t count) {
  std::vector<RealVector> out;
  out.reserve(count);
  std::vector<double> buf(model.dim());
  for (std::size_t i = 0; i < count; ++i) {
    model.sample_into(stream, i, buf);
    out.emplace_back(buf);
  }
  return out;
}

// 1/2 (p(xi) + p(-xi)), in canonical merged form. Each canonical atom
// receives at most two contributions, which keeps the reflected weights
// bit-identical and makes the operation exactly idempotent.
inline Empirical symmetrize(const Empirical& p) {
  const Empirical m = p.merged();
  std::vector<RealVector> atoms;
  std::vector<double> weights;
  atoms.reserve(2 * m.size());
  weights.reserve(2 * m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    atoms.push_back(m.atoms()[i]);
    weights.push_back(0.5 * m.weights()[i]);
    atoms.push_back(-m.atoms()[i]);
    weights.push_back(0.5 * m.weights()[i]);
  }
  return Empirical(std::move(atoms), std::move(weights)).merged();
}

inline NoiseModel perturb(const NoiseModel& model, double k) {
  if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidInput("perturbation scale k must be >= 0");
  return NoiseModel(Perturbed{std::make_shared<const NoiseModel>(model), k});
}

inline NoiseModel perturb(const NoiseModel& model, double k, std::size_t dim) {
  if (model.dim() != dim) throw DimensionMismatch(model.dim(), dim);
  return perturb(model, k);
}

struct ProbabilityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = true;
};

namespace detail {

inline double empirical_norm_below(const Empirical& e, double radius) {
  double p = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (norm(e.atoms()[i]) < radius) p += e.weights()[i];
  return p;
}

}  // namespace detail

// P(|xi| < radius). Exact for empirical models, isotropic Gaussians (chi
// distribution CDF) and one-dimensional Gaussian perturbations of empirical
// models; Monte Carlo otherwise.
inline ProbabilityEstimate prob_norm_below(const NoiseModel& model, double radius,
                                           const SeededStream& stream = {},
                                           std::uint64_t mc_samples = 100000) {
  if (!(radius > 0.0)) throw InvalidInput("radius must be > 0");
  if (const auto* e = model.get_if<Empirical>())
    return {detail::empirical_norm_below(*e, radius), 0.0, true};
  if (const auto* g = model.get_if<IsotropicGaussian>())
    return {gaussian_norm_below(g->scale, g->dim, radius), 0.0, true};
  if (const auto* p = model.get_if<Perturbed>()) {
    if (p->k == 0.0) return prob_norm_below(*p->base, radius, stream, mc_samples);
    const auto* base = p->base->get_if<Empirical>();
    if (base != nullptr && base->dim() == 1) {
      double prob = 0.0;
      for (std::size_t i = 0; i < base->size(); ++i) {
        const double a = base->atoms()[i][0];
        prob += base->weights()[i] * normal_interval((-radius - a) / p->k, (radius - a) / p->k);
      }
      return {prob, 0.0, true};
    }
  }
  const auto est = monte_carlo_mean(mc_samples, [&](std::uint64_t i) {
    std::vector<double> x(model.dim());
    model.sample_into(stream, i, x);
    return detail::stable_norm(x) < radius ? 1.0 : 0.0;
  });
  return {est.mean, est.std_error, false};
}

}  // namespace clipbias
