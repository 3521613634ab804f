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

// Dense real vectors, the l2 clip operator and the cosine helpers the
// clipping analysis is written in terms of.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "clipbias/error.hpp"

namespace clipbias {

namespace detail {

inline bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(),
                     [](double x) { return std::isfinite(x); });
}

// Two-pass scaled sum of squares; never overflows for finite input.
inline double stable_norm(std::span<const double> xs) {
  double amax = 0.0;
  for (double x : xs) amax = std::max(amax, std::abs(x));
  if (amax == 0.0) return 0.0;
  double s = 0.0;
  for (double x : xs) {
    const double r = x / amax;
    s += r * r;
  }
  return amax * std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// A dense vector of finite doubles with dim >= 1.
class RealVector {
 public:
  explicit RealVector(std::vector<double> components)
      : data_(std::move(components)) {
    if (data_.empty()) throw InvalidInput("RealVector must have dim >= 1");
    if (!detail::all_finite(data_))
      throw InvalidInput("RealVector components must be finite");
  }
  RealVector(std::initializer_list<double> components)
      : RealVector(std::vector<double>(components)) {}

  static RealVector zeros(std::size_t dim) {
    return RealVector(std::vector<double>(dim, 0.0));
  }
  static RealVector scalar(double x) { return RealVector({x}); }

  std::size_t dim() const { return data_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& components() const { return data_; }

  bool is_zero() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double x) { return x == 0.0; });
  }

  friend bool operator==(const RealVector&, const RealVector&) = default;
  friend auto operator<=>(const RealVector& a, const RealVector& b) {
    return a.data_ <=> b.data_;
  }
  friend std::ostream& operator<<(std::ostream& os, const RealVector& v) {
    os << '(';
    for (std::size_t i = 0; i < v.dim(); ++i) os << (i ? ", " : "") << v[i];
    return os << ')';
  }

  RealVector operator-() const {
    std::vector<double> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = -data_[i];
    return RealVector(std::move(out));
  }

  friend RealVector operator+(const RealVector& a, const RealVector& b) {
    return zip(a, b, [](double x, double y) { return x + y; });
  }
  friend RealVector operator-(const RealVector& a, const RealVector& b) {
    return zip(a, b, [](double x, double y) { return x - y; });
  }
  friend RealVector operator*(double s, const RealVector& a) {
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out[i] = s * a.data_[i];
    return RealVector(std::move(out));
  }
  friend RealVector operator*(const RealVector& a, double s) { return s * a; }

 private:
  template <typename F>
  static RealVector zip(const RealVector& a, const RealVector& b, F f) {
    if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) out[i] = f(a.data_[i], b.data_[i]);
    return RealVector(std::move(out));
  }

  std::vector<double> data_;
};

// Clipping norm bound c > 0. Infinity disables clipping.
class ClipThreshold {
 public:
  explicit ClipThreshold(double c) : c_(c) {
    if (!(c > 0.0) || std::isnan(c))
      throw InvalidInput("clip threshold must be > 0");
  }
  static ClipThreshold disabled() {
    return ClipThreshold(std::numeric_limits<double>::infinity());
  }
  double value() const { return c_; }
  bool is_disabled() const { return std::isinf(c_); }

 private:
  double c_;
};

inline double norm(const RealVector& v) { return detail::stable_norm(v.values()); }

inline double inner(const RealVector& a, const RealVector& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
  return detail::dot(a.values(), b.values());
}

inline double cosine(const RealVector& a, const RealVector& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw UndefinedCosine();
  return std::clamp(inner(a, b) / (na * nb), -1.0, 1.0);
}

// g * min(1, c/|g|), formed as (g_i / |g|) * c so that a one-dimensional
// clip is exactly +-c. The result norm never exceeds c: when rounding lands
// just above c the scale is stepped down one ulp at a time.
inline RealVector clip(const RealVector& g, ClipThreshold c) {
  const double n = norm(g);
  if (n <= c.value()) return g;
  double scale = c.value();
  std::vector<double> out(g.dim());
  for (;;) {
    for (std::size_t i = 0; i < g.dim(); ++i) out[i] = g[i] / n * scale;
    if (detail::stable_norm(out) <= c.value()) break;
    scale = std::nextafter(scale, 0.0);
  }
  return RealVector(std::move(out));
}

// <v, clip(v + xi, c)> without materialising the clipped vector. This is the
// scalar score every clipping expectation in the library is built from.
inline double clip_score(std::span<const double> v, std::span<const double> xi,
                         double c) {
  double sq = 0.0;
  double vy = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double y = v[j] + xi[j];
    sq += y * y;
    vy += v[j] * y;
  }
  const double n = std::sqrt(sq);
  return n <= c ? vy : vy / n * c;
}

// Accumulates clip(v + xi, c) into out, scaled by weight.
inline void add_clipped(std::span<const double> v, std::span<const double> xi,
                        double c, double weight, std::span<double> out) {
  double sq = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double y = v[j] + xi[j];
    sq += y * y;
  }
  const double n = std::sqrt(sq);
  if (n <= c) {
    for (std::size_t j = 0; j < v.size(); ++j) out[j] += (v[j] + xi[j]) * weight;
  } else {
    const double f = c * weight;
    for (std::size_t j = 0; j < v.size(); ++j) out[j] += (v[j] + xi[j]) / n * f;
  }
}

}  // namespace clipbias
