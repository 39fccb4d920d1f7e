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


#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "granite/solvers.hpp"
#include "support.hpp"

namespace granite {
namespace {

TEST(ExactSolve, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto g = testing::random_model(7, 0.5, 0.3, seed);
    const auto r = exact_solve(g);
    EXPECT_NEAR(r.energy, testing::brute_min(g), 1e-9);
    EXPECT_EQ(energy(g, r.state), r.energy);
  }
}

TEST(Annealing, TwoSpinAntiferromagnet) {
  const std::vector<double> h{0.0, 0.0};
  const std::vector<Coupling> j{{1, 2, -1.0}};
  const auto r = sa_solve(build_graph(h, j), SaConfig{});
  EXPECT_EQ(r.energy, -1.0);
  EXPECT_EQ(r.state.at(1), -r.state.at(2));
}

TEST(Annealing, BestTraceIsNonIncreasing) {
  const auto g = testing::random_model(10, 0.5, 0.2, 3);
  SaConfig cfg;
  cfg.sweeps = 200;
  cfg.restarts = 4;
  const auto r = sa_solve_traced(g, cfg);
  ASSERT_EQ(r.best_trace.size(), 4U);
  double overall = std::numeric_limits<double>::infinity();
  for (const auto& t : r.best_trace) {
    ASSERT_EQ(t.size(), 200U);
    for (std::size_t k = 1; k < t.size(); ++k) EXPECT_LE(t[k], t[k - 1]);
    overall = std::min(overall, t.back());
  }
  EXPECT_NEAR(r.best.energy, overall, 1e-9);
  EXPECT_EQ(r.best.energy, energy(g, r.best.state));
}

TEST(Annealing, DeterministicAndThreadInvariant) {
  const auto g = testing::random_model(12, 0.4, 0.2, 4);
  SaConfig cfg;
  cfg.sweeps = 100;
  cfg.restarts = 6;
  cfg.seed = 9;
  const auto a = sa_solve(g, cfg);
  cfg.jobs = 3;
  const auto b = sa_solve(g, cfg);
  EXPECT_EQ(a.state, b.state);
  EXPECT_EQ(a.energy, b.energy);
}

TEST(Annealing, FindsGroundStateOnSmallInstances) {
  int hits = 0;
  const int total = 200;
  SaConfig cfg;
  cfg.sweeps = 500;
  for (int k = 0; k < total; ++k) {
    const auto g = testing::random_model(2 + k % 11, 0.5, k % 3 == 0 ? 0.3 : 0.0, 1000 + k);
    if (g.free_spin_count() == 0) {
      ++hits;
      continue;
    }
    cfg.seed = static_cast<std::uint64_t>(k);
    hits += std::abs(sa_solve(g, cfg).energy - min_energy(g)) <= 1e-9 ? 1 : 0;
  }
  EXPECT_GE(hits, 198);
}

TEST(Annealing, RejectsBadSchedule) {
  const auto g = testing::random_model(4, 1.0, 0.0, 1);
  SaConfig cfg;
  cfg.sweeps = 0;
  EXPECT_THROW(sa_solve(g, cfg), std::invalid_argument);
  cfg = SaConfig{};
  cfg.restarts = 0;
  EXPECT_THROW(sa_solve(g, cfg), std::invalid_argument);
  cfg = SaConfig{};
  cfg.t_hot = 0.001;
  EXPECT_THROW(sa_solve(g, cfg), std::invalid_argument);
  cfg = SaConfig{};
  cfg.t_cold = 0.0;
  EXPECT_THROW(sa_solve(g, cfg), std::invalid_argument);
}

TEST(Annealing, DefaultHotTemperature) {
  const std::vector<double> h{0.5, 0.0, 0.0};
  const std::vector<Coupling> j{{1, 2, -3.0}, {2, 3, 1.0}};
  EXPECT_EQ(default_hot_temperature(build_graph(h, j)), 6.0);
}

TEST(Metrics, Optimality) {
  EXPECT_NEAR(*optimality(-9.5, -10.0), 95.0, 1e-12);
  EXPECT_EQ(*optimality(-10.0, -10.0), 100.0);
  EXPECT_NEAR(*optimality(1.0, -10.0), -10.0, 1e-12);
  EXPECT_NEAR(*optimality(10.0, -10.0), -100.0, 1e-12);
  EXPECT_FALSE(optimality(0.5, 0.0).has_value());
}

TEST(Metrics, Reduction) {
  EXPECT_EQ(reduction(3, 12), 75.0);
  EXPECT_EQ(reduction(12, 12), 0.0);
  EXPECT_EQ(reduction(1, 4), 75.0);
  EXPECT_THROW(reduction(0, 0), std::invalid_argument);
}

TEST(Metrics, MeanAndStandardError) {
  const std::vector<double> xs{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  const auto m = mean_se(xs);
  EXPECT_EQ(m.mean, 5.0);
  EXPECT_NEAR(m.se, std::sqrt(32.0 / 7.0) / std::sqrt(8.0), 1e-12);
  EXPECT_EQ(m.count, 8U);
  const std::vector<double> one{3.0};
  EXPECT_EQ(mean_se(one).se, 0.0);
}

std::vector<EvalInstance> eval_instances(int count, int n, std::uint64_t seed) {
  std::vector<EvalInstance> out;
  for (int k = 0; k < count; ++k)
    out.push_back({"i" + std::to_string(k), "er", n, testing::random_model(n, 0.6, 0.0, seed + k)});
  return out;
}

TEST(Evaluate, OracleMethodIsOptimal) {
  const auto inst = eval_instances(8, 10, 50);
  EvalConfig cfg;
  cfg.targets = {CompressionTarget::node_ratio(0.5), CompressionTarget::node_ratio(0.25)};
  const auto rep = evaluate(inst, {oracle_method(), random_method()}, cfg);
  ASSERT_EQ(rep.rows.size(), 8U * (1 + 2 * 2));
  for (const auto& r : rep.rows) {
    ASSERT_TRUE(r.available);
    EXPECT_NEAR(r.e_best, r.e_reduced, 1e-9);
    if (r.method == "oracle" || r.method == "original") {
      EXPECT_NEAR(*r.optimality, 100.0, 1e-9);
    }
    if (r.method == "original") {
      EXPECT_EQ(r.reduction, 0.0);
    }
  }
  ASSERT_EQ(rep.aggregates.size(), 5U);
  EXPECT_EQ(rep.aggregates[0].method, "original");
  EXPECT_EQ(rep.aggregates[1].method, "oracle");
  EXPECT_EQ(rep.aggregates[1].target.value, 0.5);
  EXPECT_NEAR(rep.aggregates[1].reduction_mean, 50.0, 1e-9);
  EXPECT_NEAR(rep.aggregates[1].optimality.mean, 100.0, 1e-9);
  EXPECT_EQ(rep.aggregates[1].optimality.count, 8U);
  EXPECT_NEAR(rep.aggregates[3].reduction_mean, 80.0, 1e-9);  // 10 -> 2 spins
}

TEST(Evaluate, DeterministicAcrossThreads) {
  const auto inst = eval_instances(5, 9, 70);
  EvalConfig cfg;
  cfg.targets = {CompressionTarget::node_ratio(0.5)};
  cfg.solver = SolverKind::Annealing;
  cfg.sa.sweeps = 100;
  cfg.sa.restarts = 3;
  cfg.seed = 4;
  const std::vector<EvalMethod> methods{random_method(), granite_method(init_params(GnnShape{}, 1))};
  const auto a = evaluate(inst, methods, cfg);
  cfg.jobs = 4;
  const auto b = evaluate(inst, methods, cfg);
  EXPECT_EQ(results_csv(a.aggregates, false), results_csv(b.aggregates, false));
  EXPECT_EQ(rows_csv(a.rows), rows_csv(b.rows));
}

TEST(Evaluate, UnavailableOverCapAndDegenerate) {
  std::vector<EvalInstance> inst;
  inst.push_back({"big", "er", 8, testing::random_model(8, 0.5, 0.0, 1)});
  const std::vector<double> h(2, 0.0);
  const std::vector<Coupling> none;
  auto flat = build_graph(h, none);  // minimum 0: ratio undefined
  inst.push_back({"flat", "er", 2, flat});
  EvalConfig cfg;
  cfg.targets = {CompressionTarget::node_ratio(0.5)};
  cfg.oracle.max_free_spins = 6;
  cfg.include_original = false;
  cfg.solver = SolverKind::Annealing;
  cfg.sa.sweeps = 50;
  const auto rep = evaluate(inst, {random_method()}, cfg);
  EXPECT_FALSE(rep.rows[0].available);
  EXPECT_TRUE(rep.rows[1].available);
  EXPECT_FALSE(rep.rows[1].optimality.has_value());
  EXPECT_EQ(rep.aggregates[0].unavailable, 1U);
  EXPECT_EQ(rep.aggregates[1].degenerate, 1U);
  const auto csv = results_csv(rep.aggregates, false);
  EXPECT_NE(csv.find("er,8,node-ratio,0.5,random,NaN,NaN,NaN,NaN,NaN,\n"), std::string::npos) << csv;
  EXPECT_NE(rows_csv(rep.rows).find("unavailable"), std::string::npos);
  EXPECT_NE(rows_csv(rep.rows).find("degenerate"), std::string::npos);
}

TEST(Evaluate, ResultsCsvHeaderAndRuntime) {
  const auto inst = eval_instances(2, 6, 90);
  EvalConfig cfg;
  cfg.targets = {CompressionTarget::node_ratio(0.5)};
  cfg.record_runtime = true;
  const auto rep = evaluate(inst, {random_method()}, cfg);
  std::istringstream in(results_csv(rep.aggregates, true));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "topology,n,target_mode,target_value,method,optimality_mean,optimality_se,reduction_mean,e_min,e_best,runtime_ms");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("er,6,node-ratio,1,original,100,0,0,", 0), 0U) << line;
  EXPECT_NE(line.back(), ',');
  std::istringstream quiet(results_csv(rep.aggregates, false));
  std::getline(quiet, line);
  std::getline(quiet, line);
  EXPECT_EQ(line.back(), ',');
}

TEST(Evaluate, RejectsBadTarget) {
  EvalConfig cfg;
  cfg.targets = {CompressionTarget::node_ratio(0.0)};
  EXPECT_THROW(evaluate(eval_instances(1, 4, 1), {random_method()}, cfg), std::invalid_argument);
}

}  // namespace
}  // namespace granite
