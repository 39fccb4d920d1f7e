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
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "granite/ising.hpp"
#include "support.hpp"

namespace granite {
namespace {

using testing::all_assignments;
using testing::brute_min;
using testing::random_model;

HamiltonianGraph couplings(std::vector<Coupling> j, int n, std::vector<double> h = {}) {
  h.resize(static_cast<std::size_t>(n), 0.0);
  return build_graph(h, j);
}

SpinAssignment spins(std::initializer_list<std::pair<NodeId, int>> values) {
  SpinAssignment s;
  for (auto [v, x] : values) s.set(v, x);
  return s;
}

// ---------------------------------------------------------------------------
// build_graph

TEST(BuildGraph, ZeroBiasesLeaveOutAuxNode) {
  const auto g = couplings({{1, 2, 1.5}}, 2);
  EXPECT_EQ(g.nodes(), (std::set<NodeId>{1, 2}));
  EXPECT_EQ(g.weight(1, 2), 1.5);
  EXPECT_FALSE(g.has_aux());
  EXPECT_EQ(g.offset(), 0.0);
}

TEST(BuildGraph, BiasBecomesAuxEdge) {
  const auto g = couplings({{1, 2, -1.0}}, 2, {2.0, 0.0});
  EXPECT_EQ(g.nodes(), (std::set<NodeId>{0, 1, 2}));
  EXPECT_EQ(g.weight(0, 1), 2.0);
  EXPECT_EQ(g.weight(1, 2), -1.0);
  EXPECT_EQ(g.edge_count(), 2U);
}

TEST(BuildGraph, SingleSpinNoEdges) {
  const auto g = couplings({}, 1);
  EXPECT_EQ(g.nodes(), (std::set<NodeId>{1}));
  EXPECT_EQ(g.edge_count(), 0U);
  EXPECT_EQ(g.free_spin_count(), 1U);
}

TEST(BuildGraph, RejectsBadInput) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(couplings({{1, 2, inf}}, 2), std::invalid_argument);
  EXPECT_THROW(couplings({{1, 2, std::nan("")}}, 2), std::invalid_argument);
  EXPECT_THROW(couplings({{1, 1, 1.0}}, 2), std::invalid_argument);
  EXPECT_THROW(couplings({{1, 3, 1.0}}, 2), std::invalid_argument);
  EXPECT_THROW(couplings({{1, 2, 1.0}, {2, 1, 1.0}}, 2), std::invalid_argument);
  EXPECT_THROW(couplings({}, 2, {inf, 0.0}), std::invalid_argument);
  try {
    couplings({{1, 2, inf}}, 2);
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("J[1,2]"), std::string::npos);
  }
}

TEST(BuildGraph, ZeroCouplingIsNotAnEdge) {
  const auto g = couplings({{1, 2, 0.0}}, 2);
  EXPECT_EQ(g.edge_count(), 0U);
}

TEST(HamiltonianGraph, AccumulateDeletesExactZero) {
  HamiltonianGraph g;
  g.accumulate(1, 2, 0.25);
  g.accumulate(1, 2, -0.25);
  EXPECT_FALSE(g.has_edge(1, 2));
  EXPECT_TRUE(g.neighbors(1).empty());
  EXPECT_THROW(g.accumulate(3, 3, 1.0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// energy

TEST(Energy, SingleBond) {
  const auto g = couplings({{1, 2, 1.0}}, 2);
  EXPECT_EQ(energy(g, spins({{1, 1}, {2, 1}})), -1.0);
  EXPECT_EQ(energy(g, spins({{1, 1}, {2, -1}})), 1.0);
}

TEST(Energy, BiasOnly) {
  const auto g = couplings({}, 1, {2.0});
  EXPECT_EQ(energy(g, spins({{1, 1}})), -2.0);
  EXPECT_EQ(energy(g, spins({{1, -1}})), 2.0);
}

TEST(Energy, MatchesIsingFormula) {
  // E = -sum J s s - sum h s, computed directly from the coefficients.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> w(-5, 5);
  const int n = 6;
  std::vector<double> h(n);
  for (auto& x : h) x = w(rng);
  std::vector<Coupling> j;
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b) j.push_back({a, b, w(rng)});
  const auto g = build_graph(h, j);
  for (const auto& s : all_assignments(g)) {
    double e = 0.0;
    for (const auto& c : j) e -= c.w * s.at(c.i) * s.at(c.j);
    for (int v = 1; v <= n; ++v) e -= h[v - 1] * s.at(v);
    EXPECT_NEAR(energy(g, s), e, 1e-12);
  }
}

TEST(Energy, RejectsIncompleteAssignment) {
  const auto g = couplings({{1, 2, 1.0}}, 3);
  EXPECT_THROW(energy(g, spins({{1, 1}, {2, 1}})), std::invalid_argument);
  EXPECT_THROW(energy(g, spins({{1, 1}, {2, 1}, {3, 1}, {4, 1}})), std::invalid_argument);
}

TEST(SpinAssignment, AuxNodeIsPinned) {
  SpinAssignment s;
  EXPECT_EQ(s.at(kAuxNode), 1);
  EXPECT_NO_THROW(s.set(kAuxNode, 1));
  EXPECT_THROW(s.set(kAuxNode, -1), std::invalid_argument);
  EXPECT_THROW(s.set(3, 0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// merge / flip_merge

TEST(Merge, FoldsEdgesIntoKeptNode) {
  const auto g = couplings({{1, 2, 2.0}, {1, 3, 1.0}, {2, 3, 3.0}}, 3);
  const auto c = merge(g, 1, 2);
  EXPECT_EQ(c.graph.edges().size(), 1U);
  EXPECT_EQ(c.graph.weight(1, 3), 4.0);
  EXPECT_EQ(c.graph.offset(), -2.0);
  EXPECT_EQ(c.record, (ContractionRecord{1, 2, false, -2.0}));
}

TEST(Merge, ExactCancellationDeletesEdge) {
  const auto g = couplings({{1, 2, 5.0}, {1, 3, 1.0}, {2, 3, -1.0}}, 3);
  const auto c = merge(g, 1, 2);
  EXPECT_FALSE(c.graph.has_edge(1, 3));
  EXPECT_EQ(c.graph.edge_count(), 0U);
  EXPECT_EQ(c.graph.offset(), -5.0);
  EXPECT_EQ(c.graph.nodes(), (std::set<NodeId>{1, 3}));
}

TEST(Merge, IntoAuxNodeFixesSpin) {
  const auto g = couplings({{1, 2, 4.0}}, 2, {2.0, 0.0});
  const auto c = merge(g, 0, 1);
  EXPECT_EQ(c.graph.edge_count(), 1U);
  EXPECT_EQ(c.graph.weight(0, 2), 4.0);
  EXPECT_EQ(c.graph.offset(), -2.0);
  EXPECT_EQ(brute_min(c.graph), brute_min(g));
}

TEST(FlipMerge, SingleAntiferroBond) {
  const auto g = couplings({{1, 2, -3.0}}, 2);
  const auto c = flip_merge(g, 1, 2);
  EXPECT_EQ(c.graph.edge_count(), 0U);
  EXPECT_EQ(c.graph.offset(), -3.0);
  EXPECT_EQ(brute_min(c.graph), -3.0);
  EXPECT_EQ(brute_min(g), -3.0);
  EXPECT_EQ(c.record, (ContractionRecord{1, 2, true, -3.0}));
}

TEST(FlipMerge, NegatesRemovedNodesEdges) {
  const auto g = couplings({{1, 2, -1.0}, {2, 3, 2.0}}, 3);
  const auto c = flip_merge(g, 1, 2);
  EXPECT_EQ(c.graph.edge_count(), 1U);
  EXPECT_EQ(c.graph.weight(1, 3), -2.0);
  EXPECT_EQ(c.graph.offset(), -1.0);
}

TEST(FlipMerge, MovesBiasWithSignChange) {
  const auto g = couplings({{1, 2, -4.0}}, 2, {0.0, 1.0});
  const auto c = flip_merge(g, 1, 2);
  EXPECT_EQ(c.graph.edge_count(), 1U);
  EXPECT_EQ(c.graph.weight(0, 1), -1.0);
  EXPECT_EQ(c.graph.offset(), -4.0);
  EXPECT_EQ(brute_min(c.graph), brute_min(g));
}

TEST(Contract, Rejections) {
  const auto g = couplings({{1, 2, 1.0}}, 3, {1.0, 0.0, 0.0});
  EXPECT_THROW(merge(g, 1, 3), std::invalid_argument);      // no edge
  EXPECT_THROW(merge(g, 1, 1), std::invalid_argument);      // self
  EXPECT_THROW(merge(g, 1, 0), std::invalid_argument);      // aux removal
  EXPECT_THROW(flip_merge(g, 1, 0), std::invalid_argument);
}

TEST(Contract, AuxPrunedWhenItLosesAllEdges) {
  const auto g = couplings({}, 2, {3.0, 0.0});
  HamiltonianGraph g2 = g;
  g2.accumulate(1, 2, 1.0);
  const auto c = merge(g2, 0, 1);
  // (1,2) became (0,2), so aux survives.
  EXPECT_TRUE(c.graph.has_aux());
  const auto d = merge(c.graph, 0, 2);
  EXPECT_FALSE(d.graph.has_aux());
  EXPECT_EQ(d.graph.nodes().size(), 0U);
  EXPECT_EQ(d.graph.offset(), -4.0);
}

TEST(Contract, EnergyConservedForEveryEdgeAndAssignment) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto g = random_model(6, 0.6, 0.4, seed);
    for (const auto& [e, w] : g.edges()) {
      for (bool flip : {false, true}) {
        const auto c = flip ? flip_merge(g, e.lo, e.hi) : merge(g, e.lo, e.hi);
        ASSERT_EQ(c.graph.free_spin_count() + 1, g.free_spin_count());
        ContractionLog log{{c.record}};
        for (const auto& s : all_assignments(c.graph)) {
          const auto full = lift(log, s, c.graph);
          ASSERT_TRUE(full.covers(g));
          EXPECT_NEAR(energy(c.graph, s), energy(g, full), 1e-12);
          // Kept spins are untouched.
          for (const auto& [v, x] : s.values()) EXPECT_EQ(full.at(v), x);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// lift / replay

TEST(Lift, SingleFlipRecord) {
  ContractionLog log{{{1, 2, true, 0.0}}};
  const auto s = lift(log, spins({{1, 1}}));
  EXPECT_EQ(s, spins({{1, 1}, {2, -1}}));
}

TEST(Lift, ChainedMerges) {
  ContractionLog log{{{1, 2, false, 0.0}, {1, 3, false, 0.0}}};
  const auto s = lift(log, spins({{1, -1}}));
  EXPECT_EQ(s, spins({{1, -1}, {2, -1}, {3, -1}}));
}

TEST(Lift, KeptAuxNodeReadsPlusOne) {
  ContractionLog log{{{0, 4, true, 0.0}, {4, 5, false, 0.0}}};
  // Record order: 4 removed into aux first, then 5 into 4 (in reverse, 5 is
  // restored from 4, which is restored from aux).
  ContractionLog ordered{{{4, 5, false, 0.0}, {0, 4, true, 0.0}}};
  const auto s = lift(ordered, SpinAssignment{});
  EXPECT_EQ(s, spins({{4, -1}, {5, -1}}));
  EXPECT_THROW(lift(log, SpinAssignment{}), std::invalid_argument);
}

TEST(Lift, RejectsInconsistentAssignment) {
  const auto g = couplings({{1, 2, 1.0}, {2, 3, 1.0}}, 3);
  auto c = merge(g, 1, 2);
  ContractionLog log{{c.record}};
  EXPECT_THROW(lift(log, spins({{1, 1}}), c.graph), std::invalid_argument);
  EXPECT_THROW(lift(log, spins({{1, 1}, {2, 1}, {3, 1}}), c.graph), std::invalid_argument);
}

TEST(Lift, ChainedRandomContractionsPreserveEnergy) {
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = random_model(10, 0.5, 0.3, 100 + seed);
    HamiltonianGraph r = g;
    ContractionLog log;
    for (int step = 0; step < 5 && r.edge_count() > 0; ++step) {
      auto it = r.edges().begin();
      std::advance(it, static_cast<long>(rng() % r.edge_count()));
      const EdgeKey e = it->first;
      log.records.push_back(contract(r, e.lo, e.hi, rng() % 2 == 1));
    }
    EXPECT_EQ(replay(g, log), r);
    const auto ids = r.free_nodes();
    for (int k = 0; k < 100; ++k) {
      const auto s = testing::assignment_from_bits(ids, rng());
      EXPECT_NEAR(energy(r, s), energy(g, lift(log, s, r)), 1e-12);
    }
  }
}

TEST(Replay, ReproducesReducedGraphBitExactly) {
  const auto g = random_model(8, 0.7, 0.5, 77);
  HamiltonianGraph r = g;
  ContractionLog log;
  while (r.edge_count() > 0 && r.free_spin_count() > 3) {
    const EdgeKey e = r.edges().rbegin()->first;
    log.records.push_back(contract(r, e.lo, e.hi, (e.hi % 2) == 0));
  }
  const auto again = replay(g, log);
  EXPECT_TRUE(again == r);
  EXPECT_EQ(again.offset(), r.offset());
}

}  // namespace
}  // namespace granite
