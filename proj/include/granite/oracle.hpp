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

// Exhaustive ground-state search.
//
// All 2^n assignments of the free spins are visited in Gray-code order so
// each step flips one spin and updates the energy in O(degree). The
// incremental energy only screens candidates; every candidate is re-scored
// with the same canonical-order sum that energy() uses, and ties are decided
// on those exact scores.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "granite/ising.hpp"
#include "granite/parallel.hpp"

namespace granite {

enum class EdgeLabel : char { A = 'A', B = 'B', C = 'C' };

inline char label_char(EdgeLabel l) { return static_cast<char>(l); }

inline EdgeLabel label_from_char(char c) {
  switch (c) {
    case 'A': return EdgeLabel::A;
    case 'B': return EdgeLabel::B;
    case 'C': return EdgeLabel::C;
    default: throw std::invalid_argument(std::string("unknown edge label '") + c + "'");
  }
}

using EdgeLabels = std::map<EdgeKey, EdgeLabel>;

struct OracleConfig {
  int max_free_spins = 24;
  int jobs = 1;
};

/// Energies within this distance of the minimum count as ground states.
inline constexpr double kGroundTolerance = 1e-12;

struct GroundStateSet {
  double e_min = 0.0;
  std::vector<SpinAssignment> states;
};

namespace detail {

// Dense view of a graph for enumeration. Bit k of a state mask set means
// spin k is -1.
class SpinSystem {
 public:
  explicit SpinSystem(const HamiltonianGraph& g) : offset_(g.offset()) {
    ids_ = g.free_nodes();
    std::map<NodeId, int> index;
    for (std::size_t k = 0; k < ids_.size(); ++k) index[ids_[k]] = static_cast<int>(k);
    bias_.assign(ids_.size(), 0.0);
    adjacency_.resize(ids_.size());
    for (const auto& [e, w] : g.edges()) {
      if (e.lo == kAuxNode) {
        const int b = index.at(e.hi);
        bias_[b] += w;
        terms_.push_back({-1, b, w});
      } else {
        const int a = index.at(e.lo), b = index.at(e.hi);
        adjacency_[a].push_back({b, w});
        adjacency_[b].push_back({a, w});
        terms_.push_back({a, b, w});
      }
    }
  }

  int size() const { return static_cast<int>(ids_.size()); }
  const std::vector<NodeId>& ids() const { return ids_; }

  static int spin(std::uint32_t mask, int k) { return ((mask >> k) & 1U) ? -1 : 1; }

  // Same summation order as energy(): canonical edge order, then offset.
  double exact_energy(std::uint32_t mask) const {
    double sum = 0.0;
    for (const auto& t : terms_) {
      const int sa = t.a < 0 ? 1 : spin(mask, t.a);
      sum += t.w * sa * spin(mask, t.b);
    }
    return -sum + offset_;
  }

  // f_k = b_k + sum_j w_kj s_j, so flipping k changes E by 2 s_k f_k.
  void local_fields(std::uint32_t mask, std::vector<double>& fields) const {
    fields.assign(ids_.size(), 0.0);
    for (int k = 0; k < size(); ++k) {
      double f = bias_[k];
      for (const auto& [j, w] : adjacency_[k]) f += w * spin(mask, j);
      fields[k] = f;
    }
  }

  // Visits every state whose high `fixed_bits` bits equal `prefix`, calling
  // visit(mask, incremental_energy) for each.
  template <class Visit>
  void gray_walk(int fixed_bits, std::uint32_t prefix, Visit&& visit) const {
    const int n = size();
    const int free_bits = n - fixed_bits;
    std::uint32_t mask = free_bits >= 32 ? 0U : (prefix << free_bits);
    std::vector<double> fields;
    local_fields(mask, fields);
    double e = exact_energy(mask);
    visit(mask, e);
    const std::uint64_t steps = std::uint64_t{1} << free_bits;
    for (std::uint64_t t = 1; t < steps; ++t) {
      const int k = std::countr_zero(t);
      const int sk = spin(mask, k);
      e += 2.0 * sk * fields[k];
      mask ^= (1U << k);
      for (const auto& [j, w] : adjacency_[k]) fields[j] -= 2.0 * w * sk;
      if ((t & 0xFFFFU) == 0) {
        // Periodic resync bounds floating drift on long walks.
        local_fields(mask, fields);
        e = exact_energy(mask);
      }
      visit(mask, e);
    }
  }

  SpinAssignment assignment(std::uint32_t mask) const {
    SpinAssignment s;
    for (int k = 0; k < size(); ++k) s.set(ids_[k], spin(mask, k));
    return s;
  }

  int index_of(NodeId v) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), v);
    if (it == ids_.end() || *it != v) throw std::out_of_range("node " + std::to_string(v) + " not in graph");
    return static_cast<int>(it - ids_.begin());
  }

 private:
  struct Term {
    int a;  // -1 for the auxiliary node
    int b;
    double w;
  };
  std::vector<NodeId> ids_;
  std::vector<double> bias_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;
  std::vector<Term> terms_;
  double offset_;
};

// Screening window for the incremental energies; far above accumulated drift.
inline constexpr double kScreenWindow = 1e-9;

inline void check_cap(const HamiltonianGraph& g, const OracleConfig& cfg) {
  const int cap = std::min(cfg.max_free_spins, 30);
  if (static_cast<int>(g.free_spin_count()) > cap)
    throw std::invalid_argument("exhaustive search limited to " + std::to_string(cap) + " free spins, graph has " +
                                std::to_string(g.free_spin_count()) + "; use the simulated annealing solver instead");
}

struct Partition {
  int fixed_bits = 0;
  std::uint32_t count = 1;
};

inline Partition partition_for(int n, int jobs) {
  Partition p;
  while (p.count < static_cast<std::uint32_t>(std::max(1, jobs)) && p.fixed_bits < n && p.fixed_bits < 8) {
    ++p.fixed_bits;
    p.count <<= 1;
  }
  return p;
}

inline double exact_minimum(const SpinSystem& sys, const OracleConfig& cfg) {
  const Partition part = partition_for(sys.size(), cfg.jobs);
  std::vector<double> partial(part.count, std::numeric_limits<double>::infinity());
  parallel_for(part.count, cfg.jobs, [&](std::size_t p) {
    double screen = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    sys.gray_walk(part.fixed_bits, static_cast<std::uint32_t>(p), [&](std::uint32_t mask, double e) {
      if (e < screen + kScreenWindow) {
        screen = std::min(screen, e);
        best = std::min(best, sys.exact_energy(mask));
      }
    });
    partial[p] = best;
  });
  return *std::min_element(partial.begin(), partial.end());
}

// Ground-state masks in deterministic (partition, Gray) order.
inline std::vector<std::uint32_t> ground_masks(const SpinSystem& sys, double e_min, const OracleConfig& cfg) {
  const Partition part = partition_for(sys.size(), cfg.jobs);
  std::vector<std::vector<std::uint32_t>> partial(part.count);
  parallel_for(part.count, cfg.jobs, [&](std::size_t p) {
    sys.gray_walk(part.fixed_bits, static_cast<std::uint32_t>(p), [&](std::uint32_t mask, double e) {
      if (e <= e_min + kScreenWindow && sys.exact_energy(mask) <= e_min + kGroundTolerance)
        partial[p].push_back(mask);
    });
  });
  std::vector<std::uint32_t> out;
  for (auto& v : partial) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace detail

/// Minimum energy over all assignments (streaming; no state set is kept).
inline double min_energy(const HamiltonianGraph& g, const OracleConfig& cfg = {}) {
  detail::check_cap(g, cfg);
  const detail::SpinSystem sys(g);
  return detail::exact_minimum(sys, cfg);
}

inline GroundStateSet enumerate_ground_states(const HamiltonianGraph& g, const OracleConfig& cfg = {}) {
  detail::check_cap(g, cfg);
  const detail::SpinSystem sys(g);
  GroundStateSet out;
  out.e_min = detail::exact_minimum(sys, cfg);
  for (std::uint32_t mask : detail::ground_masks(sys, out.e_min, cfg)) out.states.push_back(sys.assignment(mask));
  return out;
}

/// Classifies every edge by the relation of its endpoint spins across all
/// ground states: A always equal, C always opposite, B mixed.
inline EdgeLabels label_edges(const HamiltonianGraph& g, const OracleConfig& cfg = {}) {
  detail::check_cap(g, cfg);
  const detail::SpinSystem sys(g);
  const double e_min = detail::exact_minimum(sys, cfg);
  const auto masks = detail::ground_masks(sys, e_min, cfg);
  EdgeLabels labels;
  for (const auto& [e, w] : g.edges()) {
    const int b = sys.index_of(e.hi);
    const int a = e.lo == kAuxNode ? -1 : sys.index_of(e.lo);
    bool equal = false, opposite = false;
    for (std::uint32_t m : masks) {
      const int sa = a < 0 ? 1 : detail::SpinSystem::spin(m, a);
      (sa == detail::SpinSystem::spin(m, b) ? equal : opposite) = true;
      if (equal && opposite) break;
    }
    labels[e] = equal && opposite ? EdgeLabel::B : (equal ? EdgeLabel::A : EdgeLabel::C);
  }
  return labels;
}

}  // namespace granite
