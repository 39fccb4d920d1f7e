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

// Ising models as weighted graphs.
//
// A model H(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i over spins s_i in
// {-1,+1} is stored as an undirected graph. Couplings are edges (i,j) with
// i,j >= 1; linear biases are edges (0,i) to an auxiliary node 0 whose spin
// is pinned to +1. The energy of an assignment is then
//
//   E(s) = -sum_{(i,j) in E} w(i,j) s_i s_j + offset
//
// where `offset` collects the constants absorbed by edge contractions.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace granite {

using NodeId = std::int32_t;

/// The auxiliary bias node. Its spin is +1 by convention.
inline constexpr NodeId kAuxNode = 0;

/// Unordered node pair stored in canonical order (lo < hi).
struct EdgeKey {
  NodeId lo = 0;
  NodeId hi = 0;

  static EdgeKey of(NodeId a, NodeId b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }
  bool touches(NodeId v) const { return lo == v || hi == v; }
  NodeId other(NodeId v) const { return lo == v ? hi : lo; }

  friend auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
};

inline std::string to_string(const EdgeKey& e) {
  return "(" + std::to_string(e.lo) + "," + std::to_string(e.hi) + ")";
}

/// One coupling entry J_ij of an input model (1-based spin indices).
struct Coupling {
  NodeId i = 0;
  NodeId j = 0;
  double w = 0.0;
};

class HamiltonianGraph {
 public:
  HamiltonianGraph() = default;

  const std::set<NodeId>& nodes() const { return nodes_; }
  const std::map<EdgeKey, double>& edges() const { return edges_; }
  double offset() const { return offset_; }

  bool has_node(NodeId v) const { return nodes_.count(v) != 0; }
  bool has_aux() const { return has_node(kAuxNode); }
  bool has_edge(NodeId a, NodeId b) const { return edges_.count(EdgeKey::of(a, b)) != 0; }
  std::size_t edge_count() const { return edges_.size(); }

  /// Number of spins excluding the auxiliary node.
  std::size_t free_spin_count() const { return nodes_.size() - (has_aux() ? 1 : 0); }

  std::vector<NodeId> free_nodes() const {
    std::vector<NodeId> out;
    out.reserve(nodes_.size());
    for (NodeId v : nodes_)
      if (v != kAuxNode) out.push_back(v);
    return out;
  }

  std::optional<double> weight(NodeId a, NodeId b) const {
    auto it = edges_.find(EdgeKey::of(a, b));
    if (it == edges_.end()) return std::nullopt;
    return it->second;
  }

  /// Neighbors of v in ascending id order.
  const std::set<NodeId>& neighbors(NodeId v) const {
    static const std::set<NodeId> kEmpty;
    auto it = adjacency_.find(v);
    return it == adjacency_.end() ? kEmpty : it->second;
  }

  void add_node(NodeId v) {
    if (v < 0) throw std::invalid_argument("negative node id " + std::to_string(v));
    nodes_.insert(v);
  }

  /// w(a,b) += delta. An exact-zero result deletes the edge.
  void accumulate(NodeId a, NodeId b, double delta) {
    if (a == b) throw std::invalid_argument("self-loop on node " + std::to_string(a));
    if (!std::isfinite(delta))
      throw std::invalid_argument("non-finite weight on edge " + to_string(EdgeKey::of(a, b)));
    if (delta == 0.0) return;
    add_node(a);
    add_node(b);
    const EdgeKey key = EdgeKey::of(a, b);
    auto [it, inserted] = edges_.try_emplace(key, 0.0);
    it->second += delta;
    if (it->second == 0.0) {
      edges_.erase(it);
      adjacency_[a].erase(b);
      adjacency_[b].erase(a);
    } else if (inserted) {
      adjacency_[a].insert(b);
      adjacency_[b].insert(a);
    }
  }

  void set_offset(double c) { offset_ = c; }
  void add_offset(double c) { offset_ += c; }

  /// Removes v together with its incident edges.
  void remove_node(NodeId v) {
    for (NodeId u : neighbors(v)) {
      edges_.erase(EdgeKey::of(u, v));
      adjacency_[u].erase(v);
    }
    adjacency_.erase(v);
    nodes_.erase(v);
  }

  /// Drops the auxiliary node once it has no incident edges.
  void prune_aux() {
    if (has_aux() && neighbors(kAuxNode).empty()) remove_node(kAuxNode);
  }

  friend bool operator==(const HamiltonianGraph& a, const HamiltonianGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.offset_ == b.offset_;
  }

 private:
  std::set<NodeId> nodes_;
  std::map<EdgeKey, double> edges_;
  std::map<NodeId, std::set<NodeId>> adjacency_;
  double offset_ = 0.0;
};

/// Spin values for the free nodes of a graph. The auxiliary node is never
/// stored; it reads as +1.
class SpinAssignment {
 public:
  SpinAssignment() = default;

  void set(NodeId v, int spin) {
    if (spin != 1 && spin != -1)
      throw std::invalid_argument("spin value must be +1 or -1, got " + std::to_string(spin));
    if (v == kAuxNode) {
      if (spin != 1) throw std::invalid_argument("auxiliary node spin is fixed to +1");
      return;
    }
    spins_[v] = static_cast<std::int8_t>(spin);
  }

  int at(NodeId v) const {
    if (v == kAuxNode) return 1;
    auto it = spins_.find(v);
    if (it == spins_.end()) throw std::out_of_range("assignment has no spin for node " + std::to_string(v));
    return it->second;
  }

  bool contains(NodeId v) const { return v == kAuxNode || spins_.count(v) != 0; }
  std::size_t size() const { return spins_.size(); }
  const std::map<NodeId, std::int8_t>& values() const { return spins_; }

  /// True when the stored spins are exactly the free nodes of g.
  bool covers(const HamiltonianGraph& g) const {
    if (spins_.size() != g.free_spin_count()) return false;
    for (NodeId v : g.nodes())
      if (v != kAuxNode && spins_.count(v) == 0) return false;
    return true;
  }

  friend bool operator==(const SpinAssignment&, const SpinAssignment&) = default;
  friend auto operator<=>(const SpinAssignment& a, const SpinAssignment& b) { return a.spins_ <=> b.spins_; }

 private:
  std::map<NodeId, std::int8_t> spins_;
};

struct ContractionRecord {
  NodeId kept = 0;
  NodeId removed = 0;
  bool flipped = false;
  double absorbed_offset = 0.0;

  friend bool operator==(const ContractionRecord&, const ContractionRecord&) = default;
};

struct ContractionLog {
  std::vector<ContractionRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  friend bool operator==(const ContractionLog&, const ContractionLog&) = default;
};

/// Builds the graph of a model with biases h (h[k] is h_{k+1}) and couplings J.
inline HamiltonianGraph build_graph(std::span<const double> h, std::span<const Coupling> couplings) {
  HamiltonianGraph g;
  const auto n = static_cast<NodeId>(h.size());
  for (NodeId v = 1; v <= n; ++v) g.add_node(v);
  for (NodeId v = 1; v <= n; ++v) {
    const double hv = h[static_cast<std::size_t>(v - 1)];
    if (!std::isfinite(hv)) throw std::invalid_argument("non-finite bias h[" + std::to_string(v) + "]");
    if (hv != 0.0) g.accumulate(kAuxNode, v, hv);
  }
  std::set<EdgeKey> seen;
  for (const Coupling& c : couplings) {
    const std::string name = "J[" + std::to_string(c.i) + "," + std::to_string(c.j) + "]";
    if (!std::isfinite(c.w)) throw std::invalid_argument("non-finite coupling " + name);
    if (c.i == c.j) throw std::invalid_argument("diagonal coupling " + name);
    if (c.i < 1 || c.j < 1 || c.i > n || c.j > n)
      throw std::invalid_argument("coupling " + name + " outside spin range 1.." + std::to_string(n));
    if (!seen.insert(EdgeKey::of(c.i, c.j)).second) throw std::invalid_argument("duplicate coupling " + name);
    if (c.w != 0.0) g.accumulate(c.i, c.j, c.w);
  }
  return g;
}

/// E(s) = -sum w(i,j) s_i s_j + offset, summed in canonical edge order.
inline double energy(const HamiltonianGraph& g, const SpinAssignment& s) {
  if (!s.covers(g)) throw std::invalid_argument("assignment does not cover the graph's node set");
  double sum = 0.0;
  for (const auto& [e, w] : g.edges()) sum += w * s.at(e.lo) * s.at(e.hi);
  return -sum + g.offset();
}

namespace detail {

inline void check_contractible(const HamiltonianGraph& g, NodeId kept, NodeId removed) {
  if (kept == removed) throw std::invalid_argument("cannot contract node " + std::to_string(kept) + " with itself");
  if (removed == kAuxNode) throw std::invalid_argument("the auxiliary node cannot be removed");
  if (!g.has_edge(kept, removed))
    throw std::invalid_argument("no edge " + to_string(EdgeKey::of(kept, removed)) + " to contract");
}

}  // namespace detail

/// Contracts edge (kept, removed) in place by substituting
/// s_removed = s_kept (flip == false) or s_removed = -s_kept (flip == true).
inline ContractionRecord contract(HamiltonianGraph& g, NodeId kept, NodeId removed, bool flip) {
  detail::check_contractible(g, kept, removed);
  const double w = *g.weight(kept, removed);
  // -w s_k s_r becomes -w (merge) or +w (flip-merge).
  const double absorbed = flip ? w : -w;
  std::vector<std::pair<NodeId, double>> moved;
  for (NodeId k : g.neighbors(removed))
    if (k != kept) moved.emplace_back(k, *g.weight(removed, k));
  g.remove_node(removed);
  for (const auto& [k, wk] : moved) g.accumulate(kept, k, flip ? -wk : wk);
  g.add_offset(absorbed);
  g.prune_aux();
  return ContractionRecord{kept, removed, flip, absorbed};
}

struct Contraction {
  HamiltonianGraph graph;
  ContractionRecord record;
};

/// M(i,j): removes j, folding its edges into i.
inline Contraction merge(const HamiltonianGraph& g, NodeId i, NodeId j) {
  Contraction c{g, {}};
  c.record = contract(c.graph, i, j, false);
  return c;
}

/// FM(i,j): negates the edges incident to j, then merges j into i.
inline Contraction flip_merge(const HamiltonianGraph& g, NodeId i, NodeId j) {
  Contraction c{g, {}};
  c.record = contract(c.graph, i, j, true);
  return c;
}

/// Applies the log's contractions to `original` in order.
inline HamiltonianGraph replay(const HamiltonianGraph& original, const ContractionLog& log) {
  HamiltonianGraph g = original;
  for (const auto& r : log.records) contract(g, r.kept, r.removed, r.flipped);
  return g;
}

/// Expands an assignment of the reduced graph to the original spins by
/// replaying the log backwards.
inline SpinAssignment lift(const ContractionLog& log, const SpinAssignment& reduced) {
  SpinAssignment out = reduced;
  for (auto it = log.records.rbegin(); it != log.records.rend(); ++it) {
    if (it->removed == kAuxNode || it->kept == it->removed)
      throw std::invalid_argument("malformed contraction record");
    if (out.contains(it->removed) && it->removed != kAuxNode)
      throw std::invalid_argument("reduced assignment contains contracted node " + std::to_string(it->removed));
    if (!out.contains(it->kept))
      throw std::invalid_argument("reduced assignment is missing node " + std::to_string(it->kept));
    const int base = out.at(it->kept);
    out.set(it->removed, it->flipped ? -base : base);
  }
  return out;
}

/// Same as lift() but also checks the reduced assignment against the final graph.
inline SpinAssignment lift(const ContractionLog& log, const SpinAssignment& reduced, const HamiltonianGraph& reduced_graph) {
  if (!reduced.covers(reduced_graph))
    throw std::invalid_argument("reduced assignment does not match the reduced graph's node set");
  return lift(log, reduced);
}

}  // namespace granite
