// Copyright 2026 The Granite Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Classical solvers for (reduced) models and the evaluation harness.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "granite/compressor.hpp"
#include "granite/datagen.hpp"
#include "granite/ising.hpp"
#include "granite/oracle.hpp"
#include "granite/parallel.hpp"
#include "granite/random.hpp"

namespace granite {

struct SolveResult {
  SpinAssignment state;
  double energy = 0.0;
};

/// Lowest-energy ground state found first in enumeration order.
inline SolveResult exact_solve(const HamiltonianGraph& g, const OracleConfig& cfg = {}) {
  detail::check_cap(g, cfg);
  const detail::SpinSystem sys(g);
  const double e_min = detail::exact_minimum(sys, cfg);
  const auto masks = detail::ground_masks(sys, e_min, cfg);
  SolveResult r{sys.assignment(masks.front()), 0.0};
  r.energy = energy(g, r.state);
  return r;
}

struct SaConfig {
  int sweeps = 2000;
  int restarts = 20;
  std::optional<double> t_hot;  // default 2 max|w|
  double t_cold = 0.01;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct SaResult {
  SolveResult best;
  // Best-so-far energy after every sweep, one row per restart.
  std::vector<std::vector<double>> best_trace;
};

inline double default_hot_temperature(const HamiltonianGraph& g) {
  double w_max = 0.0;
  for (const auto& [e, w] : g.edges()) w_max = std::max(w_max, std::abs(w));
  return w_max > 0.0 ? 2.0 * w_max : 1.0;
}

/// Single-spin-flip Metropolis annealing on a geometric temperature
/// schedule from t_hot to t_cold, best state over all restarts.
inline SaResult sa_solve_traced(const HamiltonianGraph& g, const SaConfig& cfg) {
  if (cfg.sweeps < 1 || cfg.restarts < 1) throw std::invalid_argument("sweeps and restarts must be >= 1");
  const double t_hot = cfg.t_hot.value_or(default_hot_temperature(g));
  if (!(t_hot > cfg.t_cold && cfg.t_cold > 0.0)) throw std::invalid_argument("need t_hot > t_cold > 0");

  const auto ids = g.free_nodes();
  const int n = static_cast<int>(ids.size());
  std::map<NodeId, int> index;
  for (int k = 0; k < n; ++k) index[ids[k]] = k;
  std::vector<double> bias(static_cast<std::size_t>(n), 0.0);
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
  for (const auto& [e, w] : g.edges()) {
    if (e.lo == kAuxNode) {
      bias[index.at(e.hi)] += w;
    } else {
      const int a = index.at(e.lo), b = index.at(e.hi);
      adj[a].push_back({b, w});
      adj[b].push_back({a, w});
    }
  }
  auto to_assignment = [&](const std::vector<int>& s) {
    SpinAssignment out;
    for (int k = 0; k < n; ++k) out.set(ids[k], s[k]);
    return out;
  };

  struct RestartResult {
    std::vector<int> state;
    double energy;
    std::vector<double> trace;
  };
  std::vector<RestartResult> runs(static_cast<std::size_t>(cfg.restarts));
  parallel_for(runs.size(), cfg.jobs, [&](std::size_t r) {
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(r)}));
    std::vector<int> s(static_cast<std::size_t>(n));
    for (int& x : s) x = rng.bernoulli(0.5) ? 1 : -1;
    std::vector<double> field(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      double f = bias[k];
      for (const auto& [j, w] : adj[k]) f += w * s[j];
      field[k] = f;
    }
    double e = energy(g, to_assignment(s));
    std::vector<int> best_s = s;
    double best_e = e;
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(cfg.sweeps));
    const double ratio = cfg.t_cold / t_hot;
    for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
      const double frac = cfg.sweeps == 1 ? 1.0 : static_cast<double>(sweep) / (cfg.sweeps - 1);
      const double temp = t_hot * std::pow(ratio, frac);
      for (int k = 0; k < n; ++k) {
        const double delta = 2.0 * s[k] * field[k];
        if (delta > 0.0 && !(rng.uniform01() < std::exp(-delta / temp))) continue;
        for (const auto& [j, w] : adj[k]) field[j] -= 2.0 * w * s[k];
        s[k] = -s[k];
        e += delta;
        if (e < best_e) {
          best_e = e;
          best_s = s;
        }
      }
      trace.push_back(best_e);
    }
    runs[r] = {best_s, energy(g, to_assignment(best_s)), std::move(trace)};
  });

  SaResult out;
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].energy < runs[best].energy) best = r;
  out.best = {to_assignment(runs[best].state), runs[best].energy};
  for (auto& r : runs) out.best_trace.push_back(std::move(r.trace));
  return out;
}

inline SolveResult sa_solve(const HamiltonianGraph& g, const SaConfig& cfg) { return sa_solve_traced(g, cfg).best; }

// ---------------------------------------------------------------------------
// Metrics

/// 100 (1 - |e_best - e_min| / |e_min|); nullopt when e_min == 0, where the
/// ratio is undefined.
inline std::optional<double> optimality(double e_best, double e_min) {
  if (e_min == 0.0) return std::nullopt;
  return 100.0 * (1.0 - std::abs(e_best - e_min) / std::abs(e_min));
}

/// 100 (1 - q_compressed / q_original), q counted in logical spins.
inline double reduction(std::size_t q_compressed, std::size_t q_original) {
  if (q_original < 1) throw std::invalid_argument("original spin count must be >= 1");
  return 100.0 * (1.0 - static_cast<double>(q_compressed) / static_cast<double>(q_original));
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

/// Mean and standard error (sample deviation / sqrt(count)).
inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  r.count = xs.size();
  if (xs.empty()) return r;
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Evaluation harness

enum class SolverKind { Exact, Annealing };

struct EvalInstance {
  std::string id;
  std::string topology;
  int n = 0;
  HamiltonianGraph graph;
};

using CompressFn = std::function<CompressionResult(const HamiltonianGraph&, const CompressionTarget&, std::uint64_t)>;

struct EvalMethod {
  std::string name;
  CompressFn compress;
};

inline EvalMethod granite_method(const GnnParams& params, std::string name = "granite",
                                 SelectionRule rule = SelectionRule::Confidence) {
  auto scorer = gnn_scorer(params);
  return {std::move(name), [scorer, rule](const HamiltonianGraph& g, const CompressionTarget& t, std::uint64_t) {
            return compress(g, scorer, t, rule);
          }};
}

inline EvalMethod random_method(std::string name = "random") {
  return {std::move(name), [](const HamiltonianGraph& g, const CompressionTarget& t, std::uint64_t seed) {
            return random_compress(g, t, seed);
          }};
}

inline EvalMethod oracle_method(const OracleConfig& cfg = {}, std::string name = "oracle") {
  auto scorer = oracle_scorer(cfg);
  return {std::move(name), [scorer](const HamiltonianGraph& g, const CompressionTarget& t, std::uint64_t) {
            return compress(g, scorer, t);
          }};
}

struct EvalConfig {
  std::vector<CompressionTarget> targets;
  SolverKind solver = SolverKind::Exact;
  SaConfig sa;
  OracleConfig oracle;
  bool include_original = true;
  bool record_runtime = false;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct EvalRow {
  std::string id;
  std::string topology;
  int n = 0;
  CompressionTarget target;
  std::string method;
  bool available = true;            // reference solve succeeded
  std::optional<double> optimality;  // nullopt: unavailable or degenerate (e_min == 0)
  double reduction = 0.0;
  double e_min = 0.0;
  double e_best = 0.0;
  double e_reduced = 0.0;  // reduced-model energy of the reduced solution
  std::size_t spins_before = 0;
  std::size_t spins_after = 0;
  bool exhausted = false;
  double runtime_ms = 0.0;
};

struct EvalAggregate {
  std::string topology;
  int n = 0;
  CompressionTarget target;
  std::string method;
  MeanSe optimality;
  double reduction_mean = 0.0;
  double e_min_mean = 0.0;
  double e_best_mean = 0.0;
  double runtime_ms = 0.0;
  std::size_t rows = 0;
  std::size_t degenerate = 0;
  std::size_t unavailable = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EvalAggregate> aggregates;
};

namespace detail {

inline SolveResult solve_reduced(const HamiltonianGraph& g, const EvalConfig& cfg, std::uint64_t seed) {
  if (cfg.solver == SolverKind::Exact) {
    OracleConfig oc = cfg.oracle;
    oc.jobs = 1;
    return exact_solve(g, oc);
  }
  if (g.free_spin_count() == 0) return {SpinAssignment{}, g.offset()};
  SaConfig sc = cfg.sa;
  sc.seed = seed;
  sc.jobs = 1;
  return sa_solve(g, sc);
}

inline std::vector<EvalAggregate> aggregate(const std::vector<EvalRow>& rows) {
  using Key = std::tuple<std::string, int, int, double, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const EvalRow*>> groups;
  for (const auto& r : rows) {
    Key k{r.topology, r.n, static_cast<int>(r.target.mode), r.target.value, r.method};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(&r);
  }
  std::vector<EvalAggregate> out;
  for (const auto& k : order) {
    const auto& g = groups[k];
    EvalAggregate a;
    a.topology = g.front()->topology;
    a.n = g.front()->n;
    a.target = g.front()->target;
    a.method = g.front()->method;
    std::vector<double> opt;
    double red = 0.0, emin = 0.0, ebest = 0.0;
    std::size_t avail = 0;
    for (const EvalRow* r : g) {
      a.rows += 1;
      a.runtime_ms += r->runtime_ms;
      if (!r->available) {
        a.unavailable += 1;
        continue;
      }
      ++avail;
      red += r->reduction;
      emin += r->e_min;
      ebest += r->e_best;
      if (r->optimality) {
        opt.push_back(*r->optimality);
      } else {
        a.degenerate += 1;
      }
    }
    a.optimality = mean_se(opt);
    if (avail) {
      a.reduction_mean = red / static_cast<double>(avail);
      a.e_min_mean = emin / static_cast<double>(avail);
      a.e_best_mean = ebest / static_cast<double>(avail);
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace detail

/// For every instance, method and target: compress, solve the reduced
/// model, lift the solution and score it in the original model against the
/// exhaustive minimum.
inline EvalReport evaluate(const std::vector<EvalInstance>& instances, const std::vector<EvalMethod>& methods,
                           const EvalConfig& cfg) {
  for (const auto& t : cfg.targets) validate(t);
  struct Job {
    std::size_t instance;
    int method;  // -1: uncompressed reference
    std::size_t target;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (cfg.include_original) jobs.push_back({i, -1, 0});
    for (std::size_t t = 0; t < cfg.targets.size(); ++t)
      for (std::size_t m = 0; m < methods.size(); ++m) jobs.push_back({i, static_cast<int>(m), t});
  }

  // Reference minima, one per instance.
  std::vector<std::optional<double>> e_min(instances.size());
  {
    OracleConfig oc = cfg.oracle;
    oc.jobs = 1;
    parallel_for(instances.size(), cfg.jobs, [&](std::size_t i) {
      try {
        e_min[i] = min_energy(instances[i].graph, oc);
      } catch (const std::invalid_argument&) {
        e_min[i] = std::nullopt;
      }
    });
  }

  std::vector<EvalRow> rows(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto& inst = instances[job.instance];
    EvalRow& row = rows[j];
    row.id = inst.id;
    row.topology = inst.topology;
    row.n = inst.n;
    row.method = job.method < 0 ? "original" : methods[static_cast<std::size_t>(job.method)].name;
    row.target = job.method < 0 ? CompressionTarget::node_ratio(1.0) : cfg.targets[job.target];
    const std::uint64_t seed = derive_seed(cfg.seed, {job.instance, static_cast<std::uint64_t>(job.method + 1), job.target});
    const auto start = std::chrono::steady_clock::now();

    CompressionResult cr = job.method < 0 ? CompressionResult{inst.graph, {}, {}, false}
                                          : methods[static_cast<std::size_t>(job.method)].compress(inst.graph, row.target, seed);
    row.spins_before = inst.graph.free_spin_count();
    row.spins_after = cr.reduced.free_spin_count();
    row.exhausted = cr.exhausted;
    row.reduction = row.spins_before ? reduction(row.spins_after, row.spins_before) : 0.0;
    if (!e_min[job.instance]) {
      row.available = false;
      return;
    }
    const SolveResult sol = detail::solve_reduced(cr.reduced, cfg, derive_seed(seed, {7}));
    const SpinAssignment lifted = lift(cr.log, sol.state, cr.reduced);
    row.e_reduced = sol.energy;
    row.e_best = energy(inst.graph, lifted);
    if (std::abs(row.e_best - row.e_reduced) > 1e-9 * std::max(1.0, std::abs(row.e_best)))
      throw std::logic_error("lifted energy disagrees with reduced energy on " + inst.id);
    row.e_min = *e_min[job.instance];
    row.optimality = optimality(row.e_best, row.e_min);
    if (cfg.record_runtime)
      row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });

  EvalReport report;
  report.rows = std::move(rows);
  report.aggregates = detail::aggregate(report.rows);
  return report;
}

namespace detail {

inline std::string fmt_double(double x) {
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

}  // namespace detail

inline std::string results_csv(const std::vector<EvalAggregate>& aggs, bool with_runtime) {
  std::ostringstream out;
  out << "topology,n,target_mode,target_value,method,optimality_mean,optimality_se,reduction_mean,e_min,e_best,runtime_ms\n";
  for (const auto& a : aggs) {
    const bool has_opt = a.optimality.count > 0;
    const bool avail = a.unavailable < a.rows;
    out << a.topology << ',' << a.n << ',' << target_mode_name(a.target.mode) << ',' << detail::fmt_double(a.target.value)
        << ',' << a.method << ',' << (has_opt ? detail::fmt_double(a.optimality.mean) : "NaN") << ','
        << (has_opt ? detail::fmt_double(a.optimality.se) : "NaN") << ','
        << (avail ? detail::fmt_double(a.reduction_mean) : "NaN") << ','
        << (avail ? detail::fmt_double(a.e_min_mean) : "NaN") << ','
        << (avail ? detail::fmt_double(a.e_best_mean) : "NaN") << ','
        << (with_runtime ? detail::fmt_double(a.runtime_ms) : "") << '\n';
  }
  return out.str();
}

inline std::string rows_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "id,topology,n,target_mode,target_value,method,optimality,reduction,e_min,e_best,spins_before,spins_after,exhausted\n";
  for (const auto& r : rows) {
    out << r.id << ',' << r.topology << ',' << r.n << ',' << target_mode_name(r.target.mode) << ','
        << detail::fmt_double(r.target.value) << ',' << r.method << ',';
    if (!r.available) {
      out << "unavailable,,,,";
    } else {
      out << (r.optimality ? detail::fmt_double(*r.optimality) : "degenerate") << ',' << detail::fmt_double(r.reduction)
          << ',' << detail::fmt_double(r.e_min) << ',' << detail::fmt_double(r.e_best) << ',';
    }
    out << r.spins_before << ',' << r.spins_after << ',' << (r.exhausted ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace granite
