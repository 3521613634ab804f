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

// Symmetry probes on per-sample gradient ensembles: random 2-D projections,
// a histogram-based symmetry score, cosine histograms and the norm /
// inner-product histograms used to read off the probability term.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "clipbias/error.hpp"
#include "clipbias/noise_models.hpp"
#include "clipbias/random.hpp"
#include "clipbias/vec_core.hpp"

namespace clipbias {

using Point2 = std::array<double, 2>;

inline constexpr std::size_t kDefaultBins = 50;
inline constexpr double kAutoRangeMargin = 0.05;

struct HistogramSpec {
  std::size_t bins = kDefaultBins;
  double lo = -1.0;
  double hi = 1.0;

  HistogramSpec() = default;
  HistogramSpec(std::size_t bins_, double lo_, double hi_) : bins(bins_), lo(lo_), hi(hi_) {
    if (bins == 0) throw InvalidInput("histogram needs at least one bin");
    if (!(lo < hi)) throw InvalidInput("degenerate histogram range");
  }

  // Range fitted to the data with a 5% margin on each side. All-equal data
  // gives a zero-width single-bin histogram at that value.
  static HistogramSpec fit(std::span<const double> values, std::size_t bins = kDefaultBins) {
    if (values.empty()) throw InvalidInput("cannot fit a histogram to no data");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    HistogramSpec s;
    if (*mn == *mx) {
      s.bins = 1;
      s.lo = s.hi = *mn;
      return s;
    }
    const double pad = kAutoRangeMargin * (*mx - *mn);
    s.bins = bins;
    s.lo = *mn - pad;
    s.hi = *mx + pad;
    return s;
  }

  std::size_t bin_of(double x) const {
    if (hi == lo) return 0;
    const double pos = (x - lo) / (hi - lo) * static_cast<double>(bins);
    if (pos < 0.0) return 0;
    return std::min(static_cast<std::size_t>(pos), bins - 1);
  }
};

struct Histogram {
  HistogramSpec spec;
  std::vector<double> counts;  // weighted counts; unit weights give integer counts
  std::uint64_t skipped = 0;   // samples with no defined value (e.g. zero gradients)

  double total() const {
    double s = 0.0;
    for (double c : counts) s += c;
    return s;
  }
  double bin_lo(std::size_t i) const {
    return spec.lo + (spec.hi - spec.lo) * static_cast<double>(i) / static_cast<double>(spec.bins);
  }
  double bin_hi(std::size_t i) const { return bin_lo(i + 1); }
};

inline Histogram make_histogram(std::span<const double> values, const HistogramSpec& spec,
                                std::span<const double> weights = {}) {
  Histogram h{spec, std::vector<double>(spec.bins, 0.0), 0};
  for (std::size_t i = 0; i < values.size(); ++i)
    h.counts[spec.bin_of(values[i])] += weights.empty() ? 1.0 : weights[i];
  return h;
}

// d x 2 matrix with i.i.d. N(0, 1) entries, row-major.
struct ProjectionProbe {
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::vector<double> matrix;

  static ProjectionProbe gaussian(std::size_t dim, std::uint64_t seed) {
    ProjectionProbe p{dim, seed, std::vector<double>(2 * dim)};
    DrawCursor cur(SeededStream{seed, 0x70726F6265ULL}, 0);
    for (double& m : p.matrix) m = cur.next_normal();
    return p;
  }
};

// g -> g^T M.
inline std::vector<Point2> project2d(std::span<const RealVector> gradients, const ProjectionProbe& probe) {
  std::vector<Point2> out;
  out.reserve(gradients.size());
  for (const auto& g : gradients) {
    if (g.dim() != probe.dim) throw DimensionMismatch(probe.dim, g.dim());
    Point2 p{0.0, 0.0};
    for (std::size_t j = 0; j < g.dim(); ++j) {
      p[0] += g[j] * probe.matrix[2 * j];
      p[1] += g[j] * probe.matrix[2 * j + 1];
    }
    out.push_back(p);
  }
  return out;
}

enum class ReflectionCenter { kOrigin, kMean };

// Total-variation distance between the 2-D histogram of the cloud and that
// of its reflection through the chosen center. Bins cover the square
// [-R, R)^2 around the center with R 5% beyond the farthest coordinate.
// 0 means symmetric at this resolution.
inline double symmetry_score(std::span<const Point2> points, std::size_t bins = kDefaultBins,
                             ReflectionCenter center = ReflectionCenter::kOrigin) {
  if (points.size() < 2) throw InvalidInput("symmetry score needs at least two points");
  if (bins == 0) throw InvalidInput("histogram needs at least one bin");
  Point2 o{0.0, 0.0};
  if (center == ReflectionCenter::kMean) {
    for (const auto& p : points) {
      o[0] += p[0];
      o[1] += p[1];
    }
    o[0] /= static_cast<double>(points.size());
    o[1] /= static_cast<double>(points.size());
  }
  double r = 0.0;
  for (const auto& p : points) r = std::max({r, std::abs(p[0] - o[0]), std::abs(p[1] - o[1])});
  if (r == 0.0) throw InvalidInput("degenerate range: all points coincide with the center");
  r *= 1.0 + kAutoRangeMargin;

  auto bin = [&](double x) {
    const double pos = (x + r) / (2.0 * r) * static_cast<double>(bins);
    if (pos < 0.0) return std::size_t{0};
    return std::min(static_cast<std::size_t>(pos), bins - 1);
  };
  std::vector<double> diff(bins * bins, 0.0);
  for (const auto& p : points) {
    const double dx = p[0] - o[0], dy = p[1] - o[1];
    diff[bin(dx) * bins + bin(dy)] += 1.0;
    diff[bin(-dx) * bins + bin(-dy)] -= 1.0;
  }
  double tv = 0.0;
  for (double d : diff) tv += std::abs(d);
  return 0.5 * tv / static_cast<double>(points.size());
}

// Histogram of cos(g_i, grad f) over [-1, 1]. Zero per-sample gradients are
// counted in `skipped`.
inline Histogram cosine_histogram(std::span<const RealVector> per_sample_grads, const RealVector& true_grad,
                                  const HistogramSpec& spec = HistogramSpec(kDefaultBins, -1.0, 1.0)) {
  if (true_grad.is_zero()) throw UndefinedCosine();
  Histogram h{spec, std::vector<double>(spec.bins, 0.0), 0};
  for (const auto& g : per_sample_grads) {
    if (g.is_zero()) {
      ++h.skipped;
      continue;
    }
    h.counts[spec.bin_of(cosine(g, true_grad))] += 1.0;
  }
  return h;
}

struct AppendixFStats {
  Histogram grad_norm;      // |grad + xi_i|
  Histogram noise_norm;     // |xi_i|
  Histogram clipped_inner;  // <grad, clip(grad + xi_i, c)>
  Histogram inner;          // <grad, grad + xi_i>
  double mean_inner = 0.0;
  double fraction_noise_below = 0.0;  // P(|xi| < c/4) under the ensemble
};

// Statistics of the ensemble {grad + xi_i} with xi_i the atoms of `noise`,
// weighted by the atom weights. fraction_noise_below is the same finite sum
// as prob_norm_below(noise, c/4).
inline AppendixFStats appendixF_stats(const RealVector& true_grad, const Empirical& noise, ClipThreshold c,
                                      std::size_t bins = kDefaultBins) {
  if (true_grad.dim() != noise.dim()) throw DimensionMismatch(noise.dim(), true_grad.dim());
  const std::size_t n = noise.size();
  std::vector<double> gn(n), nn(n), ci(n), in(n);
  AppendixFStats s;
  const double radius = 0.25 * c.value();
  for (std::size_t i = 0; i < n; ++i) {
    const RealVector& xi = noise.atoms()[i];
    const RealVector g = true_grad + xi;
    gn[i] = norm(g);
    nn[i] = norm(xi);
    ci[i] = clip_score(true_grad.values(), xi.values(), c.value());
    in[i] = inner(true_grad, g);
    s.mean_inner += noise.weights()[i] * in[i];
    if (nn[i] < radius) s.fraction_noise_below += noise.weights()[i];
  }
  // Equal-weight ensembles are histogrammed as plain counts.
  const auto& nw = noise.weights();
  const bool uniform = std::all_of(nw.begin(), nw.end(), [&](double x) { return x == nw.front(); });
  const std::span<const double> w = uniform ? std::span<const double>() : std::span<const double>(nw);
  s.grad_norm = make_histogram(gn, HistogramSpec::fit(gn, bins), w);
  s.noise_norm = make_histogram(nn, HistogramSpec::fit(nn, bins), w);
  s.clipped_inner = make_histogram(ci, HistogramSpec::fit(ci, bins), w);
  s.inner = make_histogram(in, HistogramSpec::fit(in, bins), w);
  return s;
}

// Same statistics from raw per-sample gradients; the noise is g_i - grad
// with uniform weights.
inline AppendixFStats appendixF_stats(std::span<const RealVector> per_sample_grads, const RealVector& true_grad,
                                      ClipThreshold c, std::size_t bins = kDefaultBins) {
  std::vector<RealVector> noise;
  noise.reserve(per_sample_grads.size());
  for (const auto& g : per_sample_grads) noise.push_back(g - true_grad);
  return appendixF_stats(true_grad, Empirical::uniform(std::move(noise)), c, bins);
}

}  // namespace clipbias
