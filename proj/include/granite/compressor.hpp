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

// Iterative compression: score all edges, contract the most confident one
// (merge when yhat < 0.5, flip-merge otherwise), repeat until the target
// size is reached. The lower endpoint id is always kept, so the auxiliary
// node is never removed.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "granite/gnn.hpp"
#include "granite/ising.hpp"
#include "granite/oracle.hpp"
#include "granite/random.hpp"

namespace granite {

enum class TargetMode { NodeRatio, EdgeRatio, AbsoluteNodes };

inline std::string target_mode_name(TargetMode m) {
  switch (m) {
    case TargetMode::NodeRatio: return "node-ratio";
    case TargetMode::EdgeRatio: return "edge-ratio";
    case TargetMode::AbsoluteNodes: return "absolute-nodes";
  }
  return "?";
}

/// Size to compress to. Ratios are the fraction retained (node counts
/// exclude the auxiliary node).
struct CompressionTarget {
  TargetMode mode = TargetMode::NodeRatio;
  double value = 1.0;

  static CompressionTarget node_ratio(double alpha) { return {TargetMode::NodeRatio, alpha}; }
  static CompressionTarget edge_ratio(double alpha) { return {TargetMode::EdgeRatio, alpha}; }
  static CompressionTarget nodes(int count) { return {TargetMode::AbsoluteNodes, static_cast<double>(count)}; }
};

inline void validate(const CompressionTarget& t) {
  if (t.mode == TargetMode::AbsoluteNodes) {
    if (!(t.value >= 1.0) || t.value != std::floor(t.value))
      throw std::invalid_argument("absolute node target must be an integer >= 1");
  } else if (!(t.value > 0.0 && t.value <= 1.0)) {
    throw std::invalid_argument("ratio target must lie in (0, 1]");
  }
}

inline bool target_reached(const HamiltonianGraph& current, std::size_t initial_nodes, std::size_t initial_edges,
                           const CompressionTarget& t) {
  switch (t.mode) {
    case TargetMode::NodeRatio:
      return static_cast<double>(current.free_spin_count()) <= t.value * static_cast<double>(initial_nodes);
    case TargetMode::EdgeRatio:
      return static_cast<double>(current.edge_count()) <= t.value * static_cast<double>(initial_edges);
    case TargetMode::AbsoluteNodes:
      return static_cast<double>(current.free_spin_count()) <= t.value;
  }
  return true;
}

enum class Operation { Merge, FlipMerge };

inline std::string operation_name(Operation op) { return op == Operation::Merge ? "merge" : "flip-merge"; }

/// How the edge to contract is chosen from the scores.
enum class SelectionRule {
  Confidence,  // max |yhat - 0.5|
  Entropy,     // max binary entropy of yhat (literal argmax-C rule, for comparison)
};

using EdgeScores = std::map<EdgeKey, double>;

struct Selection {
  EdgeKey edge;
  Operation op = Operation::Merge;
  double yhat = 0.5;
  double confidence = 0.0;
};

inline double binary_entropy(double y) {
  auto term = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
  return term(y) + term(1.0 - y);
}

/// Picks the highest-scoring edge; ties go to the smallest edge key.
inline Selection select_edge(const EdgeScores& scores, SelectionRule rule = SelectionRule::Confidence) {
  if (scores.empty()) throw std::invalid_argument("no edges to select from");
  Selection best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& [e, y] : scores) {
    const double s = rule == SelectionRule::Confidence ? std::abs(y - 0.5) : binary_entropy(y);
    if (s > best_score) {
      best_score = s;
      best = Selection{e, y < 0.5 ? Operation::Merge : Operation::FlipMerge, y, std::abs(y - 0.5)};
    }
  }
  return best;
}

struct TraceEntry {
  EdgeKey edge;
  double yhat = 0.5;
  double confidence = 0.0;
  Operation op = Operation::Merge;
};

struct CompressionResult {
  HamiltonianGraph reduced;
  ContractionLog log;
  std::vector<TraceEntry> trace;
  bool exhausted = false;  // ran out of edges before reaching the target
};

/// Maps the current graph to a score per edge.
using EdgeScorer = std::function<EdgeScores(const HamiltonianGraph&)>;

inline EdgeScorer gnn_scorer(const GnnParams& params) {
  validate(params);
  return [params](const HamiltonianGraph& g) { return forward(params, g); };
}

/// Scores from exhaustive ground-state labels of the current graph:
/// A -> 0, C -> 1, B -> 0.
inline EdgeScorer oracle_scorer(const OracleConfig& cfg = {}) {
  return [cfg](const HamiltonianGraph& g) {
    EdgeScores s;
    for (const auto& [e, l] : label_edges(g, cfg)) s[e] = l == EdgeLabel::C ? 1.0 : 0.0;
    return s;
  };
}

inline CompressionResult compress(const HamiltonianGraph& g, const EdgeScorer& scorer, const CompressionTarget& target,
                                  SelectionRule rule = SelectionRule::Confidence) {
  validate(target);
  CompressionResult r{g, {}, {}, false};
  const std::size_t n0 = g.free_spin_count();
  const std::size_t m0 = g.edge_count();
  while (!target_reached(r.reduced, n0, m0, target)) {
    if (r.reduced.edge_count() == 0) {
      r.exhausted = true;
      break;
    }
    const Selection sel = select_edge(scorer(r.reduced), rule);
    r.log.records.push_back(contract(r.reduced, sel.edge.lo, sel.edge.hi, sel.op == Operation::FlipMerge));
    r.trace.push_back({sel.edge, sel.yhat, sel.confidence, sel.op});
  }
  return r;
}

inline CompressionResult compress(const HamiltonianGraph& g, const GnnParams& params, const CompressionTarget& target,
                                  SelectionRule rule = SelectionRule::Confidence) {
  return compress(g, gnn_scorer(params), target, rule);
}

/// Uniformly random edge and operation at every step.
inline CompressionResult random_compress(const HamiltonianGraph& g, const CompressionTarget& target, std::uint64_t seed) {
  validate(target);
  Rng rng(seed);
  CompressionResult r{g, {}, {}, false};
  const std::size_t n0 = g.free_spin_count();
  const std::size_t m0 = g.edge_count();
  while (!target_reached(r.reduced, n0, m0, target)) {
    if (r.reduced.edge_count() == 0) {
      r.exhausted = true;
      break;
    }
    auto it = r.reduced.edges().begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.below(r.reduced.edge_count())));
    const EdgeKey e = it->first;
    const bool flip = rng.bernoulli(0.5);
    r.log.records.push_back(contract(r.reduced, e.lo, e.hi, flip));
    r.trace.push_back({e, flip ? 1.0 : 0.0, 0.5, flip ? Operation::FlipMerge : Operation::Merge});
  }
  return r;
}

inline std::string trace_csv(const std::vector<TraceEntry>& trace) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "step,kept,removed,yhat,confidence,operation\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& t = trace[i];
    out << i + 1 << ',' << t.edge.lo << ',' << t.edge.hi << ',' << t.yhat << ',' << t.confidence << ','
        << operation_name(t.op) << '\n';
  }
  return out.str();
}

}  // namespace granite
