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

// Experiment runner: regenerates the example trajectories, both reference
// tables, bias ledgers with symmetry probes, privacy calibration and ad-hoc
// Wasserstein comparisons. Data files are deterministic given the config;
// the timestamp lives only in metadata.json.
//
// Exit codes: 0 all embedded checks passed, 2 some check failed, 1 bad
// configuration or runtime error.

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clipbias/clipbias.hpp"
#include "clipbias/io.hpp"

namespace fs = std::filesystem;
using namespace clipbias;

namespace {

constexpr const char* kSigmaLabel = "calibrated under configured v";

struct Check {
  std::string name;
  double value;
  double expected;
  double tolerance;
  bool pass;
};

Json to_json(const Check& c) {
  return Json{{"name", c.name}, {"value", c.value}, {"expected", c.expected},
              {"tolerance", c.tolerance}, {"pass", c.pass}};
}

// Everything a run writes goes through here so it can be listed in the
// manifest with its checksum.
class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (dir_ / name).string());
    f << content;
    files_.push_back(name);
  }
  template <typename F>
  void csv(const std::string& name, F&& fill) {
    std::ostringstream os;
    fill(os);
    write(name, os.str());
  }
  void json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  void manifest() {
    Json files = Json::array();
    for (const auto& name : files_) {
      std::ifstream f(dir_ / name, std::ios::binary);
      const std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
      files.push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256(content)}});
    }
    std::ofstream(dir_ / "manifest.json", std::ios::binary) << Json{{"files", files}}.dump(2) << "\n";
  }

 private:
  static std::string sha256(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
      throw Error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += hex[md[i] >> 4];
      out += hex[md[i] & 15];
    }
    return out;
  }

  fs::path dir_;
  std::vector<std::string> files_;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Options shared by all subcommands.
struct Common {
  std::uint64_t seed = 0;
  std::uint64_t samples = kDefaultMcSamples;
  std::string out = "out";
  std::string config;
  bool extended = false;
  double epsilon = 1.0;
  double delta = 1e-5;
  double vconst = 1.0;
  double uconst = 1.0;
  double clip = 1.0;
  double alpha = 0.0;
  double k = 0.0;
  double sigma = 1.0;
  bool calibrate_sigma = false;
};

struct Args {
  Common common;
  std::string which = "1";
  std::uint64_t steps = 0;
  double x0 = 0.0;
  std::size_t batch = 0;
  std::vector<std::size_t> dims{1, 10, 100, 1000};
  std::vector<double> ks{1.0, 10.0, 100.0};
  std::vector<double> norms{0.05, 0.1, 1.0, 2.0, 10.0, 100.0};
  std::uint64_t n = 10000;
  double gap = -1.0;
  std::size_t dim = 1;
  std::string problem = "example1";
  std::string problem_file;
  std::size_t probes = 8;
  std::size_t bins = kDefaultBins;
  std::string input;
};

bool is_set(const CLI::App& app, const std::string& name) {
  for (const CLI::App* a = &app; a != nullptr; a = a->get_parent()) {
    const CLI::Option* o = a->get_option_no_throw(name);
    if (o != nullptr) return o->count() > 0;
  }
  return false;
}

CLI::Option* find_option(CLI::App& app, const std::string& name) {
  for (CLI::App* a = &app; a != nullptr; a = a->get_parent())
    if (CLI::Option* o = a->get_option_no_throw(name)) return o;
  return nullptr;
}

// Applies config-file values to options not given on the command line.
void apply_config(CLI::App& sub, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot read config file " + path);
  const Json j = Json::parse(f);
  if (!j.is_object()) throw InvalidInput("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "command" || key == "config") continue;
    CLI::Option* o = find_option(sub, "--" + key);
    if (o == nullptr) throw InvalidInput("unknown config key '" + key + "'");
    if (o->count() > 0) continue;
    auto as_string = [](const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      for (const auto& v : value) o->add_result(as_string(v));
    } else {
      o->add_result(as_string(value));
    }
    o->run_callback();
  }
}

// Options whose default depends on the problem; when unset they are left
// out of the echo and the values actually used go under "resolved".
bool is_derived(const std::string& name) {
  return name == "alpha" || name == "steps" || name == "batch" || name == "x0" || name == "gap";
}

// Effective configuration: every long option of the subcommand and its
// parents, with the parsed or default value. Loading it back through
// --config reproduces the run.
Json effective_config(const CLI::App& sub) {
  Json cfg = Json::object();
  cfg["command"] = sub.get_name();
  for (const CLI::App* a = &sub; a != nullptr; a = a->get_parent()) {
    for (const CLI::Option* o : a->get_options()) {
      const auto& names = o->get_lnames();
      if (names.empty() || names.front() == "help" || names.front() == "config") continue;
      if (cfg.contains(names.front())) continue;
      if (o->count() > 0) {
        const auto& r = o->results();
        if (o->get_expected_max() > 1) cfg[names.front()] = r;
        else cfg[names.front()] = r.back();
      } else if (!is_derived(names.front()) && !o->get_default_str().empty()) {
        cfg[names.front()] = o->get_default_str();
      }
    }
  }
  return cfg;
}

PrivacyBudget budget_from(const Common& c, std::uint64_t n, std::uint64_t steps, std::uint64_t batch) {
  return {.epsilon = c.epsilon, .delta = c.delta, .n = n, .steps = steps, .batch = batch,
          .u = c.uconst, .v = c.vconst};
}

Json privacy_report(const PrivacyBudget& b, double sigma, bool calibrated) {
  const double q = static_cast<double>(b.batch) / static_cast<double>(b.n);
  return Json{{"sigma", sigma},
              {"sigma_source", calibrated ? kSigmaLabel : "configured explicitly"},
              {"epsilon", b.epsilon}, {"delta", b.delta}, {"u", b.u}, {"v", b.v},
              {"regime", {{"q", q}, {"epsilon_max", b.u * q * q * static_cast<double>(b.steps)},
                          {"holds", check_epsilon_regime(b)}}}};
}

Check within(std::string name, double value, double expected, double tol) {
  return {std::move(name), value, expected, tol, std::abs(value - expected) <= tol};
}

// One stream per table cell, keyed by the cell's parameters rather than
// its position, so a cell's value does not depend on the grid around it.
SeededStream cell_stream(std::uint64_t seed, double a, double b) {
  return SeededStream{seed, std::bit_cast<std::uint64_t>(a)}.child(std::bit_cast<std::uint64_t>(b));
}

struct Instance {
  QuadraticProblem problem;
  RealVector x0;
  double alpha;
};

Instance named_instance(const std::string& which, std::uint64_t seed) {
  if (which == "1" || which == "example1") return {make_example1(), RealVector{1.0}, 0.001};
  if (which == "2" || which == "example2") return {make_example2(), RealVector{1.5}, 0.001};
  if (which == "synthetic" || which == "synthetic-mixture") {
    auto p = make_synthetic_mixture(seed);
    const std::size_t d = p.dim();
    return {std::move(p), RealVector::zeros(d), 0.015};
  }
  if (which == "single") return {make_single(RealVector{0.0}), RealVector{1.0}, 0.001};
  throw InvalidInput("unknown problem '" + which + "'");
}

// ---- examples -------------------------------------------------------------

std::vector<Check> cmd_examples(const CLI::App& sub, const Args& a, Output& out, Json& meta) {
  const Common& c = a.common;
  Instance inst = named_instance(a.which, c.seed);
  OptimizerConfig cfg;
  cfg.alpha = is_set(sub, "--alpha") ? c.alpha : inst.alpha;
  cfg.clip = ClipThreshold(c.clip);
  const bool ex2 = a.which == "2" || a.which == "example2";
  cfg.steps = is_set(sub, "--steps") ? a.steps : (ex2 ? 10000 : 100000);
  cfg.batch = is_set(sub, "--batch") ? a.batch : std::min<std::size_t>(inst.problem.n(), 100);
  cfg.seed = c.seed;
  cfg.x0 = is_set(sub, "--x0") ? RealVector(std::vector<double>(inst.problem.dim(), a.x0)) : inst.x0;
  const PrivacyBudget budget = budget_from(c, inst.problem.n(), cfg.steps, cfg.batch);
  const bool calibrated = c.calibrate_sigma;
  cfg.sigma = calibrated ? calibrate_sigma(budget, cfg.clip) : c.sigma;
  meta["privacy"] = privacy_report(budget, cfg.sigma, calibrated);
  meta["resolved"] = {{"alpha", cfg.alpha}, {"steps", cfg.steps}, {"batch", cfg.batch},
                      {"x0", cfg.x0.components()}, {"sigma", cfg.sigma}};

  const RealVector& opt = inst.problem.optimum();
  Json summary = Json::object();
  auto emit = [&](const Trajectory& tr, double k) {
    const std::string name = "example" + a.which + "_k" + format_number(k) + ".csv";
    out.csv(name, [&](std::ostream& os) { write_trajectory_csv(os, tr, opt); });
    summary[name] = {{"final_distance", norm(tr.final_point() - opt)}, {"stationary", is_stationary(tr)}};
    return norm(tr.final_point() - opt);
  };
  const double d0 = emit(dp_sgd(inst.problem, cfg), 0.0);
  double dk = -1.0;
  if (c.k > 0.0) {
    cfg.k = c.k;
    dk = emit(dp_sgd_perturbed(inst.problem, cfg), c.k);
  }
  out.json("summary.json", summary);

  // Reference expectations hold for the default setting only.
  std::vector<Check> checks;
  const bool reference = !is_set(sub, "--alpha") && !is_set(sub, "--steps") && !is_set(sub, "--x0") &&
                         !is_set(sub, "--batch") && !calibrated && c.clip == 1.0 && c.sigma == 1.0;
  if (!reference) return checks;
  if (ex2) checks.push_back(within("example2 stays near x0 (distance 1.5)", d0, 1.5, 0.5));
  if (a.which == "1" || a.which == "example1") {
    checks.push_back(within("example1 k=0 drifts to -2.5 (distance 3.5)", d0, 3.5, 0.1));
    if (c.k == 10.0) checks.push_back({"example1 k=10 distance below 0.5", dk, 0.0, 0.5, dk < 0.5});
  }
  return checks;
}

// ---- table1 ---------------------------------------------------------------

double table1_reference(std::size_t d, double k) {
  static const std::map<std::pair<std::size_t, double>, double> ref{
      {{1, 1}, 10},       {{10, 1}, 9.572},   {{100, 1}, 7.077},   {{1000, 1}, 3.015},   {{10000, 1}, 0.995},
      {{1, 10}, 6.788},   {{10, 10}, 2.961},  {{100, 10}, 0.992},  {{1000, 10}, 0.316},  {{10000, 10}, 0.1},
      {{1, 100}, 0.758},  {{10, 100}, 0.316}, {{100, 100}, 0.098}, {{1000, 100}, 0.032}, {{10000, 100}, 0.01},
      {{1, 1000}, 0.084}, {{10, 1000}, 0.019}, {{100, 1000}, 0.011}, {{1000, 1000}, 0.003}, {{10000, 1000}, 0.001}};
  const auto it = ref.find({d, k});
  return it == ref.end() ? std::nan("") : it->second;
}

std::vector<Check> cmd_table1(const CLI::App&, const Args& a, Output& out, Json&) {
  const Common& c = a.common;
  std::vector<std::size_t> dims = a.dims;
  std::vector<double> ks = a.ks;
  if (c.extended) {
    if (std::find(dims.begin(), dims.end(), 10000) == dims.end()) dims.push_back(10000);
    if (std::find(ks.begin(), ks.end(), 1000.0) == ks.end()) ks.push_back(1000.0);
  }
  std::vector<Check> checks;
  out.csv("table1.csv", [&](std::ostream& os) {
    CsvWriter w(os, {"d", "k", "estimate", "std_error", "reference", "tolerance", "pass"});
    for (double k : ks) {
      for (std::size_t d : dims) {
        std::vector<double> vv(d, 0.0);
        vv[0] = 10.0;
        const RealVector v(std::move(vv));
        const NoiseModel model = perturb(NoiseModel(Empirical::point_mass(RealVector::zeros(d))), k);
        const auto e = expected_clipped_inner(v, model, ClipThreshold(c.clip),
                                              cell_stream(c.seed, static_cast<double>(d), k), c.samples);
        const double ref = table1_reference(d, k);
        if (std::isnan(ref) || c.clip != 1.0) {
          w.values(d, k, e.value, e.std_error, "", "", "");
          continue;
        }
        const double tol = std::max(0.05 * ref, 3.0 * e.std_error);
        const Check ck = within("table1 d=" + std::to_string(d) + " k=" + format_number(k), e.value, ref, tol);
        w.values(d, k, e.value, e.std_error, ref, tol, ck.pass ? "1" : "0");
        checks.push_back(ck);
      }
    }
  });
  return checks;
}

// ---- table2 ---------------------------------------------------------------

std::vector<Check> cmd_table2(const CLI::App&, const Args& a, Output& out, Json&) {
  const Common& c = a.common;
  static const std::map<double, std::pair<double, double>> ref{
      {0.05, {1.7e-4, 4e-5}}, {0.1, {6.6e-3, 2e-3}}, {1.0, {0.612, 0.148}},
      {2.0, {1.83, 0.3}},     {10.0, {10.0, 1.48}},  {100.0, {100.0, 14.8}}};
  std::vector<Check> checks;
  out.csv("table2.csv", [&](std::ostream& os) {
    CsvWriter w(os, {"grad_norm", "estimate", "std_error", "lower_bound", "prob_term", "reference_estimate",
                     "reference_bound", "estimate_pass", "bound_pass"});
    for (double y : a.norms) {
      const auto r = theorem2_bound(RealVector{y}, NoiseModel(IsotropicGaussian(1.0, 1)), ClipThreshold(c.clip),
                                    kDefaultThresholdFraction, cell_stream(c.seed, y, 2.0), c.samples);
      const auto it = ref.find(y);
      if (it == ref.end() || c.clip != 1.0) {
        w.values(y, r.estimate, r.std_error, r.lower_bound, r.prob_term, "", "", "", "");
        continue;
      }
      const auto [re, rb] = it->second;
      const Check ce = within("table2 estimate |v|=" + format_number(y), r.estimate, re,
                              std::max(0.05 * re, 3.0 * r.std_error));
      const Check cb = within("table2 bound |v|=" + format_number(y), r.lower_bound, rb, 0.01 * rb);
      w.values(y, r.estimate, r.std_error, r.lower_bound, r.prob_term, re, rb, ce.pass ? "1" : "0",
               cb.pass ? "1" : "0");
      checks.push_back(ce);
      checks.push_back(cb);
      checks.push_back({"table2 estimate dominates bound |v|=" + format_number(y), r.estimate, r.lower_bound,
                        3.0 * r.std_error, r.holds});
    }
  });
  return checks;
}

// ---- calibrate ------------------------------------------------------------

std::vector<Check> cmd_calibrate(const CLI::App& sub, const Args& a, Output& out, Json& meta) {
  const Common& c = a.common;
  const std::uint64_t steps = is_set(sub, "--steps") ? a.steps : 1000;
  const std::size_t batch = is_set(sub, "--batch") ? a.batch : std::min<std::uint64_t>(a.n, 100);
  const PrivacyBudget b = budget_from(c, a.n, steps, batch);
  const ClipThreshold clip(c.clip);
  const double sigma = calibrate_sigma(b, clip);
  Json result = privacy_report(b, sigma, true);
  result["n"] = b.n;
  result["steps"] = b.steps;
  result["batch"] = b.batch;
  result["clip"] = c.clip;
  result["sigma_squared"] = sigma * sigma;
  if (a.gap >= 0.0) {
    result["step_size"] = step_size_theorem5(a.gap, 1.0, b, clip, a.dim);
    result["step_size_inputs"] = {{"gap", a.gap}, {"smoothness", 1.0}, {"dim", a.dim}};
  }
  out.json("calibration.json", result);
  meta["privacy"] = privacy_report(b, sigma, true);
  meta["resolved"] = {{"steps", steps}, {"batch", batch}};

  const double n = static_cast<double>(b.n);
  const double ratio = sigma * sigma * n * n * b.epsilon * b.epsilon /
                       (b.v * c.clip * c.clip * static_cast<double>(b.steps) * std::log(1.0 / b.delta));
  return {within("calibration identity", ratio, 1.0, 1e-12)};
}

// ---- wasserstein ----------------------------------------------------------

std::vector<Check> cmd_wasserstein(const CLI::App&, const Args& a, Output& out, Json&) {
  if (a.input.empty()) throw InvalidInput("wasserstein needs --input");
  std::ifstream f(a.input);
  if (!f) throw InvalidInput("cannot read input file '" + a.input + "'");
  const Json j = Json::parse(f);
  const RealVector v(j.at("v").get<std::vector<double>>());
  const double cval = a.common.clip;
  const ClipThreshold c(cval);
  const Empirical p = empirical_from_json(j.at("p"));
  const Empirical q = j.contains("q") ? empirical_from_json(j.at("q")) : symmetrize(p);
  const double ep = expected_score(v, p, c);
  const double eq = expected_score(v, q, c);
  const double b = clipping_bias(v, p, q, c);
  const double w = wasserstein_clip(v, c, q, p);
  out.json("wasserstein.json", Json{{"clip", cval},
                                    {"expected_p", ep},
                                    {"expected_q", eq},
                                    {"bias", b},
                                    {"wasserstein", w},
                                    {"clip_times_norm", cval * norm(v)},
                                    {"q_is_symmetrized_p", !j.contains("q")}});
  return {within("decomposition E_p = E_q + b", ep, eq + b, 1e-10),
          {"bias controlled by W", -b, w, 1e-10, -b <= w + 1e-10}};
}

// ---- diagnose -------------------------------------------------------------

std::vector<Check> cmd_diagnose(const CLI::App& sub, const Args& a, Output& out, Json& meta) {
  const Common& c = a.common;
  Instance inst = a.problem_file.empty()
                      ? named_instance(a.problem, c.seed)
                      : [&] {
                          std::ifstream f(a.problem_file);
                          if (!f) throw InvalidInput("cannot read problem file '" + a.problem_file + "'");
                          auto p = problem_from_json(Json::parse(f));
                          const std::size_t d = p.dim();
                          return Instance{std::move(p), RealVector::zeros(d), 0.0};
                        }();
  const QuadraticProblem& p = inst.problem;
  OptimizerConfig cfg;
  cfg.steps = is_set(sub, "--steps") ? a.steps : 2000;
  cfg.alpha = 1.0 / std::sqrt(static_cast<double>(cfg.steps));
  if (is_set(sub, "--alpha") && std::abs(c.alpha - cfg.alpha) > 1e-12)
    throw InvalidInput("diagnose runs with alpha = 1/sqrt(steps); drop --alpha or match it");
  cfg.clip = ClipThreshold(c.clip);
  cfg.batch = is_set(sub, "--batch") ? a.batch : std::min<std::size_t>(p.n(), 100);
  cfg.seed = c.seed;
  cfg.x0 = is_set(sub, "--x0") ? RealVector(std::vector<double>(p.dim(), a.x0)) : inst.x0;
  const Trajectory tr = clipped_sgd(p, cfg);
  const BiasLedger ledger = corollary1_ledger(p, tr);
  out.csv("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, tr, p.optimum()); });
  out.csv("ledger.csv", [&](std::ostream& os) { write_ledger_csv(os, ledger); });

  // Probes on the per-sample gradient ensemble at the final iterate.
  const RealVector x = tr.final_point();
  const RealVector grad = p.full_gradient(x);
  std::vector<RealVector> grads;
  for (std::size_t i = 0; i < p.n(); ++i) grads.push_back(p.per_sample_gradient(x, i));
  Json probes = Json::array();
  for (std::size_t j = 0; j < a.probes; ++j) {
    const std::uint64_t probe_seed = c.seed + j;
    const auto probe = ProjectionProbe::gaussian(p.dim(), probe_seed);
    const auto pts = project2d(grads, probe);
    out.csv("scatter_seed" + std::to_string(probe_seed) + ".csv",
            [&](std::ostream& os) { write_scatter_csv(os, pts); });
    auto score = [&](const std::vector<Point2>& cloud, ReflectionCenter center) -> Json {
      try {
        return symmetry_score(cloud, a.bins, center);
      } catch (const InvalidInput&) {
        return nullptr;  // single point or all points at the center
      }
    };
    probes.push_back({{"seed", probe_seed},
                      {"gradients_about_origin", score(pts, ReflectionCenter::kOrigin)},
                      {"gradients_about_mean", score(pts, ReflectionCenter::kMean)}});
  }
  Json cosine = nullptr;
  if (!grad.is_zero()) {
    const Histogram h = cosine_histogram(grads, grad, HistogramSpec(a.bins, -1.0, 1.0));
    out.csv("cosine_hist.csv", [&](std::ostream& os) { write_histogram_csv(os, h); });
    cosine = {{"skipped", h.skipped}, {"total", h.total()}};
  }
  const AppendixFStats st = appendixF_stats(grads, grad, cfg.clip, a.bins);
  auto hist_meta = [](const Histogram& h) {
    return Json{{"bins", h.spec.bins}, {"lo", h.spec.lo}, {"hi", h.spec.hi}};
  };
  out.csv("appendixF_grad_norm.csv", [&](std::ostream& os) { write_histogram_csv(os, st.grad_norm); });
  out.csv("appendixF_noise_norm.csv", [&](std::ostream& os) { write_histogram_csv(os, st.noise_norm); });
  out.csv("appendixF_clipped_inner.csv", [&](std::ostream& os) { write_histogram_csv(os, st.clipped_inner); });
  out.csv("appendixF_inner.csv", [&](std::ostream& os) { write_histogram_csv(os, st.inner); });

  out.json("summary.json",
           Json{{"problem", a.problem_file.empty() ? a.problem : a.problem_file},
                {"n", p.n()},
                {"dim", p.dim()},
                {"ledger",
                 {{"mean_lhs", ledger.mean_lhs}, {"mean_bias", ledger.mean_bias},
                  {"mean_realized", ledger.mean_realized}, {"bound", ledger.bound},
                  {"std_error", ledger.std_error}, {"slack", ledger.slack}, {"holds", ledger.holds}}},
                {"probes", probes},
                {"cosine", cosine},
                {"appendixF",
                 {{"mean_inner", st.mean_inner},
                  {"fraction_noise_below_c_over_4", st.fraction_noise_below},
                  {"grad_norm", hist_meta(st.grad_norm)},
                  {"noise_norm", hist_meta(st.noise_norm)},
                  {"clipped_inner", hist_meta(st.clipped_inner)},
                  {"inner", hist_meta(st.inner)}}}});
  meta["resolved"] = {{"alpha", cfg.alpha}, {"steps", cfg.steps}, {"batch", cfg.batch},
                      {"x0", cfg.x0.components()}};

  std::vector<Check> checks{{"ledger inequality", ledger.slack, 0.0, 0.0, ledger.holds}};
  if (p.noise_residuals(x).is_symmetric())
    checks.push_back(within("symmetric residuals give zero bias", ledger.mean_bias, 0.0, 0.0));
  return checks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clipping-bias experiments for clipped SGD and DP-SGD"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  Args a;
  Common& c = a.common;
  app.add_option("--seed", c.seed, "Master seed");
  app.add_option("--samples", c.samples, "Monte Carlo samples per estimate");
  app.add_option("--out", c.out, "Output directory");
  app.add_option("--config", c.config, "JSON config; command-line flags take precedence");
  app.add_flag("--extended", c.extended, "Include the d = 10^4 and k = 10^3 table cells");
  app.add_option("--epsilon", c.epsilon, "Privacy epsilon");
  app.add_option("--delta", c.delta, "Privacy delta");
  app.add_option("--vconst", c.vconst, "Calibration constant v");
  app.add_option("--uconst", c.uconst, "Regime constant u");
  app.add_option("--clip", c.clip, "Clipping threshold c");
  app.add_option("--alpha", c.alpha, "Step size");
  app.add_option("--k", c.k, "Pre-clipping perturbation scale");
  app.add_option("--sigma", c.sigma, "Privacy noise std");
  app.add_flag("--calibrate-sigma", c.calibrate_sigma, "Derive sigma from the privacy budget instead of --sigma");

  using Runner = std::vector<Check> (*)(const CLI::App&, const Args&, Output&, Json&);
  std::vector<std::pair<CLI::App*, Runner>> commands;
  auto sub = [&](const char* name, const char* help, Runner run) {
    CLI::App* s = app.add_subcommand(name, help)->fallthrough();
    commands.emplace_back(s, run);
    return s;
  };
  auto* ex = sub("examples", "Divergence examples and pre-clipping perturbation runs", cmd_examples);
  ex->add_option("--which", a.which, "1, 2 or synthetic");
  ex->add_option("--steps", a.steps, "Iterations (default 1e5, 1e4 for example 2)");
  ex->add_option("--x0", a.x0, "Start point, broadcast to every coordinate");
  ex->add_option("--batch", a.batch, "Batch size (default min(n, 100))");

  auto* t1 = sub("table1", "E<v, g> against d and k at |v| = 10, xi = 0", cmd_table1);
  t1->add_option("--dims", a.dims, "Dimensions");
  t1->add_option("--ks", a.ks, "Perturbation scales");

  auto* t2 = sub("table2", "Symmetric-noise lower bound against the estimate in 1-D", cmd_table2);
  t2->add_option("--norms", a.norms, "Gradient norms");

  auto* cal = sub("calibrate", "Gaussian-mechanism sigma and regime check", cmd_calibrate);
  cal->add_option("--n", a.n, "Dataset size");
  cal->add_option("--steps", a.steps, "Iterations T (default 1000)");
  cal->add_option("--batch", a.batch, "Batch size m (default min(n, 100))");
  cal->add_option("--gap", a.gap, "D_f; when given, also reports the DP step size");
  cal->add_option("--dim", a.dim, "Dimension d for the step size");

  auto* ws = sub("wasserstein", "Bias and W distance for distributions given as JSON", cmd_wasserstein);
  ws->add_option("--input", a.input, "JSON with v, p and optionally q");

  auto* dg = sub("diagnose", "Bias ledger plus symmetry probes on a clipped SGD run", cmd_diagnose);
  dg->add_option("--problem", a.problem, "example1, example2, synthetic or single");
  dg->add_option("--problem-file", a.problem_file, "Problem centers in the empirical JSON schema");
  dg->add_option("--steps", a.steps, "Iterations (default 2000)");
  dg->add_option("--x0", a.x0, "Start point, broadcast to every coordinate");
  dg->add_option("--batch", a.batch, "Batch size (default min(n, 100))");
  dg->add_option("--probes", a.probes, "Number of random projections");
  dg->add_option("--bins", a.bins, "Histogram bins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    for (auto& [s, run] : commands) {
      if (!s->parsed()) continue;
      if (!c.config.empty()) apply_config(*s, c.config);
      Output out(c.out);
      Json meta{{"config", effective_config(*s)}};
      const auto checks = run(*s, a, out, meta);
      Json jc = Json::array();
      bool ok = true;
      for (const auto& ck : checks) {
        jc.push_back(to_json(ck));
        ok = ok && ck.pass;
        if (!ck.pass) std::cerr << "check failed: " << ck.name << " (value " << ck.value << ")\n";
      }
      meta["checks"] = jc;
      meta["all_checks_pass"] = ok;
      meta["timestamp"] = utc_timestamp();
      out.json("metadata.json", meta);
      out.manifest();
      std::cout << s->get_name() << ": " << checks.size() << " checks, " << (ok ? "all passed" : "failures")
                << ", output in " << c.out << "\n";
      return ok ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
