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
#include <set>
#include <stdexcept>
#include <vector>

#include "granite/satgen.hpp"
#include "support.hpp"

namespace granite {
namespace {

std::vector<int> bits(std::uint32_t m, int n) {
  std::vector<int> x(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) x[v] = static_cast<int>((m >> v) & 1U);
  return x;
}

// min over x_4 (the clause auxiliary) of Q with x_1..x_3 fixed.
double min_over_aux(const QuboProblem& q, std::vector<int> x) {
  x.resize(4);
  x[3] = 0;
  const double a = qubo_value(q, x);
  x[3] = 1;
  return std::min(a, qubo_value(q, x));
}

double brute_qubo_min(const QuboProblem& q) {
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t m = 0; m < (1U << q.num_vars); ++m) best = std::min(best, qubo_value(q, bits(m, q.num_vars)));
  return best;
}

TEST(ClauseQubo, WorkedExamples) {
  const auto q = clause_qubo({1, 2, 3});
  EXPECT_EQ(min_over_aux(q, {0, 0, 0}), 1.0);
  EXPECT_EQ(min_over_aux(q, {1, 1, 1}), 0.0);
  EXPECT_EQ(qubo_value(q, {1, 1, 1, 1}), 0.0);
  EXPECT_EQ(qubo_value(q, {1, 1, 1, 0}), 1.0);
  for (const std::vector<int>& x : {std::vector<int>{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}) {
    auto with = x;
    with.push_back(1);
    auto without = x;
    without.push_back(0);
    EXPECT_EQ(qubo_value(q, with), 1.0);
    EXPECT_EQ(qubo_value(q, without), 0.0);
  }
}

TEST(ClauseQubo, ExhaustiveOverPolaritiesAndAssignments) {
  int failures = 0;
  for (std::uint32_t pol = 0; pol < 8; ++pol) {
    Clause c;
    for (int k = 0; k < 3; ++k) c.push_back((pol >> k) & 1U ? -(k + 1) : k + 1);
    const auto q = clause_qubo(c);
    const CnfFormula f{3, {c}};
    for (std::uint32_t m = 0; m < 8; ++m) {
      const auto x = bits(m, 3);
      const double expect = satisfies(f, x) ? 0.0 : 1.0;
      failures += min_over_aux(q, x) == expect ? 0 : 1;
      // Never below zero for any auxiliary value.
      for (int aux : {0, 1}) {
        auto full = x;
        full.push_back(aux);
        failures += qubo_value(q, full) >= 0.0 ? 0 : 1;
      }
    }
  }
  EXPECT_EQ(failures, 0);
}

TEST(ClauseQubo, PaddedShortClauses) {
  for (const Clause& c : {Clause{1}, Clause{-1}, Clause{1, 2}, Clause{-1, 2}, Clause{1, -2}, Clause{-1, -2}}) {
    QuboProblem q;
    q.num_vars = 3;
    add_clause_qubo(q, c, 3);
    const CnfFormula f{2, {c}};
    for (std::uint32_t m = 0; m < 4; ++m) {
      auto x = bits(m, 2);
      x.push_back(0);
      const double a = qubo_value(q, x);
      x[2] = 1;
      EXPECT_EQ(std::min(a, qubo_value(q, x)), satisfies(f, bits(m, 2)) ? 0.0 : 1.0);
    }
  }
  EXPECT_THROW(clause_qubo({1, 2, 3, 4}), std::invalid_argument);
  EXPECT_THROW(clause_qubo({}), std::invalid_argument);
}

TEST(QuboToIsing, EnergyMatchesQuboEverywhere) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_cnf(4, 1 + trial % 4, 3, rng);
    const auto q = cnf_to_qubo(f);
    const auto g = qubo_to_ising(q);
    EXPECT_LE(g.free_spin_count(), static_cast<std::size_t>(q.num_vars));
    for (std::uint32_t m = 0; m < (1U << q.num_vars); ++m) {
      const auto x = bits(m, q.num_vars);
      SpinAssignment s;
      for (int v = 1; v <= q.num_vars; ++v)
        if (g.nodes().count(v)) s.set(v, 2 * x[v - 1] - 1);
      EXPECT_NEAR(energy(g, s), qubo_value(q, x), 1e-12);
    }
  }
}

TEST(QuboToIsing, CoefficientsAreQuarterIntegers) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = cnf_to_ising(random_cnf(5, 4, 3, rng));
    for (const auto& [e, w] : g.edges()) EXPECT_EQ(4.0 * w, std::round(4.0 * w));
    EXPECT_EQ(4.0 * g.offset(), std::round(4.0 * g.offset()));
  }
}

TEST(CnfToIsing, SingleClauseGroundStatesAreSatisfyingAssignments) {
  const auto g = cnf_to_ising(CnfFormula{3, {{1, 2, 3}}});
  EXPECT_EQ(min_energy(g), 0.0);
  std::set<std::vector<int>> projected;
  for (const auto& s : enumerate_ground_states(g).states) projected.insert({s.at(1), s.at(2), s.at(3)});
  EXPECT_EQ(projected.size(), 7U);
  EXPECT_EQ(projected.count({-1, -1, -1}), 0U);
}

TEST(CnfToIsing, UnsatisfiableHasPositiveMinimum) {
  const CnfFormula f{1, {{1}, {-1}}};
  EXPECT_EQ(min_energy(cnf_to_ising(f)), 1.0);
  EXPECT_EQ(brute_qubo_min(cnf_to_qubo(f)), 1.0);
}

TEST(CnfToIsing, EmptyFormula) {
  const auto g = cnf_to_ising(CnfFormula{});
  EXPECT_EQ(g.free_spin_count(), 0U);
  EXPECT_EQ(g.edge_count(), 0U);
  EXPECT_EQ(g.offset(), 0.0);
}

TEST(CnfToIsing, MinimumIsZeroIffSatisfiable) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_cnf(4, 1 + trial % 5, 3, rng);
    bool sat = false;
    for (std::uint32_t m = 0; m < 16 && !sat; ++m) sat = satisfies(f, bits(m, 4));
    const double e = min_energy(cnf_to_ising(f));
    if (sat) {
      EXPECT_EQ(e, 0.0);
    } else {
      EXPECT_GE(e, 1.0);
    }
    EXPECT_EQ(e, brute_qubo_min(cnf_to_qubo(f)));
  }
}

TEST(Gadget, Examples) {
  const CnfFormula f{2, {{1, 2}}};
  const auto g = equality_gadget(f, 1, 2);
  ASSERT_EQ(g.clauses.size(), 3U);
  std::vector<std::vector<int>> sat;
  for (std::uint32_t m = 0; m < 4; ++m)
    if (satisfies(g, bits(m, 2))) sat.push_back(bits(m, 2));
  EXPECT_EQ(sat, (std::vector<std::vector<int>>{{1, 1}}));
  EXPECT_EQ(check_all_sat_equal(equality_gadget(CnfFormula{2, {}}, 1, 2), 1, 2), AllSatEqual::Yes);
  EXPECT_THROW(equality_gadget(f, 1, 1), std::invalid_argument);
  EXPECT_THROW(equality_gadget(f, 1, 3), std::invalid_argument);
}

TEST(Gadget, AlwaysForcesEquality) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = equality_gadget(random_cnf(4, 3, 3, rng), 2, 4);
    for (std::uint32_t m = 0; m < 16; ++m) {
      const auto x = bits(m, 4);
      if (satisfies(f, x)) {
        EXPECT_EQ(x[1], x[3]);
      }
    }
  }
}

TEST(AllSatEqual, Examples) {
  EXPECT_EQ(check_all_sat_equal(CnfFormula{2, {{1, -2}, {-1, 2}}}, 1, 2), AllSatEqual::Yes);
  EXPECT_EQ(check_all_sat_equal(CnfFormula{2, {{1, 2}}}, 1, 2), AllSatEqual::No);
  EXPECT_EQ(check_all_sat_equal(CnfFormula{1, {{1}, {-1}}}, 1, 1), AllSatEqual::Unsat);
  EXPECT_EQ(to_string(AllSatEqual::Unsat), "unsat");
  EXPECT_THROW(check_all_sat_equal(CnfFormula{21, {}}, 1, 2), std::invalid_argument);
}

TEST(Bridge, BruteForceAgreesWithGroundStates) {
  Rng rng(99);
  int checked = 0;
  while (checked < 60) {
    const int n = 2 + static_cast<int>(rng.below(3));
    auto f = random_cnf(n, 1 + static_cast<int>(rng.below(4)), 3, rng);
    if (rng.bernoulli(0.3)) f = equality_gadget(f, 1, 2);
    const auto g = cnf_to_ising(f);
    if (min_energy(g) != 0.0) continue;
    ++checked;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j)
        EXPECT_EQ(check_all_sat_equal(f, i, j) == AllSatEqual::Yes, ground_states_equal(g, i, j));
  }
}

TEST(Dimacs, ParseAndPrint) {
  const auto f = parse_dimacs("c comment\np cnf 3 2\n1 -2 0\n3\n-1 0\n%\n0\n");
  EXPECT_EQ(f.num_vars, 3);
  EXPECT_EQ(f.clauses, (std::vector<Clause>{{1, -2}, {3, -1}}));
  EXPECT_EQ(to_dimacs(f), "p cnf 3 2\n1 -2 0\n3 -1 0\n");
  EXPECT_EQ(parse_dimacs(to_dimacs(f)).clauses, f.clauses);
}

TEST(Dimacs, Rejections) {
  EXPECT_THROW(parse_dimacs("1 2 0\n"), std::invalid_argument);
  EXPECT_THROW(parse_dimacs("p cnf 2 2\n1 2 0\n"), std::invalid_argument);
  EXPECT_THROW(parse_dimacs("p cnf 2 1\n1 2\n"), std::invalid_argument);
  EXPECT_THROW(parse_dimacs("p cnf 2 1\n1 3 0\n"), std::invalid_argument);
  EXPECT_THROW(parse_dimacs("p cnf 4 1\n1 2 3 4 0\n"), std::invalid_argument);
  EXPECT_THROW(parse_dimacs("p cnf 2 1\n0\n"), std::invalid_argument);
  EXPECT_THROW(parse_dimacs("p cnf 2 1\n1 x 0\n"), std::invalid_argument);
  EXPECT_THROW(parse_dimacs("p dnf 2 1\n1 0\n"), std::invalid_argument);
}

}  // namespace
}  // namespace granite
