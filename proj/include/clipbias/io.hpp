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

// File formats: the empirical-model JSON schema
//   {"dim": int, "atoms": [[...], ...], "weights": [...]}
// and the CSV exports (header row, '.' decimal separator, shortest
// round-trip number formatting).

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <system_error>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "clipbias/diagnostics.hpp"
#include "clipbias/error.hpp"
#include "clipbias/noise_models.hpp"
#include "clipbias/optimizers.hpp"
#include "clipbias/probes.hpp"
#include "clipbias/problems.hpp"

namespace clipbias {

using Json = nlohmann::json;

// Shortest decimal that round-trips; locale independent.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline Json to_json(const Empirical& e) {
  Json atoms = Json::array();
  for (const auto& a : e.atoms()) atoms.push_back(a.components());
  return Json{{"dim", e.dim()}, {"atoms", atoms}, {"weights", e.weights()}};
}

inline Empirical empirical_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("atoms"))
    throw InvalidInput("empirical model JSON needs \"dim\" and \"atoms\"");
  const auto dim = j.at("dim").get<std::size_t>();
  std::vector<RealVector> atoms;
  for (const auto& a : j.at("atoms")) {
    RealVector v(a.get<std::vector<double>>());
    if (v.dim() != dim) throw DimensionMismatch(dim, v.dim());
    atoms.push_back(std::move(v));
  }
  if (!j.contains("weights")) return Empirical::uniform(std::move(atoms));
  return Empirical(std::move(atoms), j.at("weights").get<std::vector<double>>());
}

// Problems share the empirical schema with uniform weights over the centers.
inline Json to_json(const QuadraticProblem& p) {
  return to_json(Empirical::uniform(p.centers()));
}

inline QuadraticProblem problem_from_json(const Json& j) {
  const Empirical e = empirical_from_json(j);
  return QuadraticProblem(e.atoms());
}

inline Json to_json(const BoundReport& r) {
  return Json{{"estimate", r.estimate}, {"std_error", r.std_error}, {"lower_bound", r.lower_bound},
              {"prob_term", r.prob_term}, {"z", r.z}, {"exact", r.exact}, {"holds", r.holds}};
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), columns_(header.size()) {
    row(header);
  }

  void row(std::span<const std::string> cells) {
    if (cells.size() != columns_) throw InvalidInput("CSV row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << cells[i];
    }
    os_ << '\n';
  }

  template <typename... Ts>
  void values(const Ts&... xs) {
    std::vector<std::string> cells{cell(xs)...};
    row(cells);
  }

 private:
  static std::string cell(double x) { return format_number(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <typename I>
    requires std::is_integral_v<I>
  static std::string cell(I i) { return std::to_string(i); }

  std::ostream& os_;
  std::size_t columns_;
};

// step, f, grad_norm, clipped_mean_norm, distance_to_opt. Row t describes
// x_t; clipped_mean_norm is |g_{t+1}| (empty on the final row).
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const RealVector& optimum) {
  CsvWriter w(os, {"step", "f", "grad_norm", "clipped_mean_norm", "distance_to_opt"});
  for (std::size_t t = 0; t < tr.iterates.size(); ++t) {
    const std::string g = t < tr.clipped_means.size() ? format_number(norm(tr.clipped_means[t])) : "";
    w.values(t, tr.objective[t], norm(tr.gradients[t]), g, norm(tr.iterates[t] - optimum));
  }
}

inline void write_ledger_csv(std::ostream& os, const BiasLedger& ledger) {
  CsvWriter w(os, {"step", "grad_norm", "lhs", "b_t", "w_bound", "prob_term"});
  for (const auto& r : ledger.records) w.values(r.step, r.grad_norm, r.lhs, r.bias, r.w_bound, r.prob_term);
}

inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
  CsvWriter w(os, {"bin_lo", "bin_hi", "count"});
  for (std::size_t i = 0; i < h.counts.size(); ++i) w.values(h.bin_lo(i), h.bin_hi(i), h.counts[i]);
}

inline void write_scatter_csv(std::ostream& os, std::span<const Point2> points) {
  CsvWriter w(os, {"x", "y"});
  for (const auto& p : points) w.values(p[0], p[1]);
}

}  // namespace clipbias
