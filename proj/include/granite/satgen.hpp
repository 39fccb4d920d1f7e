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

// 3-SAT to QUBO to Ising, plus brute-force checks on small formulas.

#include <cstdint>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "granite/ising.hpp"
#include "granite/oracle.hpp"
#include "granite/random.hpp"

namespace granite {

using Clause = std::vector<int>;  // signed 1-based literals

struct CnfFormula {
  int num_vars = 0;
  std::vector<Clause> clauses;
};

inline void validate(const CnfFormula& f) {
  if (f.num_vars < 0) throw std::invalid_argument("negative variable count");
  for (std::size_t k = 0; k < f.clauses.size(); ++k) {
    const Clause& c = f.clauses[k];
    if (c.empty()) throw std::invalid_argument("clause " + std::to_string(k + 1) + " is empty");
    if (c.size() > 3)
      throw std::invalid_argument("clause " + std::to_string(k + 1) + " has " + std::to_string(c.size()) +
                                  " literals; only 3-SAT is supported");
    for (int lit : c) {
      if (lit == 0 || std::abs(lit) > f.num_vars)
        throw std::invalid_argument("clause " + std::to_string(k + 1) + " has invalid literal " + std::to_string(lit));
    }
  }
}

inline CnfFormula parse_dimacs(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CnfFormula f;
  long declared = -1;
  Clause current;
  bool header = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first == "c") continue;
    if (first == "%") break;
    if (first == "p") {
      std::string kind;
      if (header || !(ls >> kind >> f.num_vars >> declared) || kind != "cnf")
        throw std::invalid_argument("malformed DIMACS header: " + line);
      header = true;
      continue;
    }
    if (!header) throw std::invalid_argument("DIMACS clause before 'p cnf' header");
    ls.clear();
    ls.str(line);
    long lit = 0;
    while (ls >> lit) {
      if (lit == 0) {
        f.clauses.push_back(current);
        current.clear();
      } else {
        current.push_back(static_cast<int>(lit));
      }
    }
    if (!ls.eof()) throw std::invalid_argument("non-integer token in DIMACS line: " + line);
  }
  if (!header) throw std::invalid_argument("missing 'p cnf' header");
  if (!current.empty()) throw std::invalid_argument("last clause is not terminated by 0");
  if (static_cast<long>(f.clauses.size()) != declared)
    throw std::invalid_argument("header declares " + std::to_string(declared) + " clauses, found " +
                                std::to_string(f.clauses.size()));
  validate(f);
  return f;
}

inline std::string to_dimacs(const CnfFormula& f) {
  std::ostringstream out;
  out << "p cnf " << f.num_vars << ' ' << f.clauses.size() << '\n';
  for (const auto& c : f.clauses) {
    for (int lit : c) out << lit << ' ';
    out << "0\n";
  }
  return out.str();
}

inline bool satisfies(const CnfFormula& f, const std::vector<int>& x) {
  for (const auto& c : f.clauses) {
    bool sat = false;
    for (int lit : c) sat = sat || (lit > 0 ? x[lit - 1] == 1 : x[-lit - 1] == 0);
    if (!sat) return false;
  }
  return true;
}

/// min sum Q_ij x_i x_j + sum c_i x_i + constant over x in {0,1}; variables
/// are 1-based, quadratic keys have i < j.
struct QuboProblem {
  int num_vars = 0;
  std::map<int, double> linear;
  std::map<std::pair<int, int>, double> quadratic;
  double constant = 0.0;

  void add_linear(int i, double c) { linear[i] += c; }
  void add_quadratic(int i, int j, double q) {
    if (i == j) {
      add_linear(i, q);  // x^2 = x
      return;
    }
    quadratic[{std::min(i, j), std::max(i, j)}] += q;
  }
};

/// x must have num_vars entries in {0, 1}.
inline double qubo_value(const QuboProblem& q, const std::vector<int>& x) {
  double v = q.constant;
  for (const auto& [i, c] : q.linear) v += c * x[i - 1];
  for (const auto& [ij, w] : q.quadratic) v += w * x[ij.first - 1] * x[ij.second - 1];
  return v;
}

namespace detail {

// A literal as an affine function a + b x_v of its variable.
struct Affine {
  double a;
  double b;
  int v;
};

inline Affine literal_affine(int lit) { return lit > 0 ? Affine{0.0, 1.0, lit} : Affine{1.0, -1.0, -lit}; }

inline void add_scaled(QuboProblem& q, double k, const Affine& y) {
  q.constant += k * y.a;
  q.add_linear(y.v, k * y.b);
}

inline void add_product(QuboProblem& q, double k, const Affine& y, const Affine& z) {
  q.constant += k * y.a * z.a;
  q.add_linear(z.v, k * y.a * z.b);
  q.add_linear(y.v, k * z.a * y.b);
  q.add_quadratic(y.v, z.v, k * y.b * z.b);
}

}  // namespace detail

/// Encodes one clause, padded to three slots, with auxiliary variable `aux`:
/// x_c (2 - S) + (y1 y2 + y2 y3 + y3 y1) - S + 1, S = y1 + y2 + y3, where a
/// negated literal contributes y = 1 - x.
inline void add_clause_qubo(QuboProblem& q, const Clause& clause, int aux) {
  if (clause.empty() || clause.size() > 3) throw std::invalid_argument("clause must have 1 to 3 literals");
  Clause c = clause;
  while (c.size() < 3) c.push_back(c.back());
  const detail::Affine y[3] = {detail::literal_affine(c[0]), detail::literal_affine(c[1]), detail::literal_affine(c[2])};
  const detail::Affine xc{0.0, 1.0, aux};
  q.add_linear(aux, 2.0);
  for (const auto& yi : y) detail::add_product(q, -1.0, xc, yi);
  detail::add_product(q, 1.0, y[0], y[1]);
  detail::add_product(q, 1.0, y[1], y[2]);
  detail::add_product(q, 1.0, y[2], y[0]);
  for (const auto& yi : y) detail::add_scaled(q, -1.0, yi);
  q.constant += 1.0;
}

/// Single clause over its own variables: literal k maps to variable k+1 (sign
/// kept), auxiliary is variable 4.
inline QuboProblem clause_qubo(const Clause& clause) {
  if (clause.empty() || clause.size() > 3) throw std::invalid_argument("clause must have 1 to 3 literals");
  QuboProblem q;
  q.num_vars = 4;
  Clause local;
  for (std::size_t k = 0; k < clause.size(); ++k) local.push_back(clause[k] > 0 ? static_cast<int>(k + 1) : -static_cast<int>(k + 1));
  add_clause_qubo(q, local, 4);
  return q;
}

/// Sum of clause encodings; the auxiliary of clause k is variable num_vars+k+1.
inline QuboProblem cnf_to_qubo(const CnfFormula& f) {
  validate(f);
  QuboProblem q;
  q.num_vars = f.num_vars + static_cast<int>(f.clauses.size());
  for (std::size_t k = 0; k < f.clauses.size(); ++k) add_clause_qubo(q, f.clauses[k], f.num_vars + static_cast<int>(k) + 1);
  return q;
}

/// x = (1 + s)/2. Every variable becomes a spin with the same id; linear
/// terms land on auxiliary-node edges and all constants in the offset, so
/// the graph energy equals the QUBO value for corresponding assignments.
inline HamiltonianGraph qubo_to_ising(const QuboProblem& q) {
  HamiltonianGraph g;
  for (int v = 1; v <= q.num_vars; ++v) g.add_node(v);
  std::map<int, double> field;
  double offset = q.constant;
  for (const auto& [i, c] : q.linear) {
    field[i] += c / 2.0;
    offset += c / 2.0;
  }
  for (const auto& [ij, w] : q.quadratic) {
    g.accumulate(ij.first, ij.second, -w / 4.0);
    field[ij.first] += w / 4.0;
    field[ij.second] += w / 4.0;
    offset += w / 4.0;
  }
  for (const auto& [i, f] : field) g.accumulate(kAuxNode, i, -f);
  g.prune_aux();
  g.set_offset(offset);
  return g;
}

inline HamiltonianGraph cnf_to_ising(const CnfFormula& f) { return qubo_to_ising(cnf_to_qubo(f)); }

/// Conjoins x_i <-> x_j as (x_i | ~x_j) & (~x_i | x_j), each padded to three
/// literals by duplication.
inline CnfFormula equality_gadget(const CnfFormula& f, int i, int j) {
  if (i == j) throw std::invalid_argument("equality gadget needs two distinct variables");
  if (i < 1 || j < 1 || i > f.num_vars || j > f.num_vars)
    throw std::invalid_argument("equality gadget variable out of range");
  CnfFormula out = f;
  out.clauses.push_back({i, -j, -j});
  out.clauses.push_back({-i, j, j});
  return out;
}

enum class AllSatEqual { Yes, No, Unsat };

inline std::string to_string(AllSatEqual a) {
  switch (a) {
    case AllSatEqual::Yes: return "yes";
    case AllSatEqual::No: return "no";
    case AllSatEqual::Unsat: return "unsat";
  }
  return "?";
}

inline constexpr int kMaxBruteForceVars = 20;

/// Whether every satisfying assignment has x_i == x_j, by enumeration.
inline AllSatEqual check_all_sat_equal(const CnfFormula& f, int i, int j) {
  validate(f);
  if (f.num_vars > kMaxBruteForceVars)
    throw std::invalid_argument("brute force limited to " + std::to_string(kMaxBruteForceVars) + " variables");
  if (i < 1 || j < 1 || i > f.num_vars || j > f.num_vars) throw std::invalid_argument("variable out of range");
  bool any = false;
  std::vector<int> x(static_cast<std::size_t>(f.num_vars));
  for (std::uint32_t m = 0; m < (std::uint32_t{1} << f.num_vars); ++m) {
    for (int v = 0; v < f.num_vars; ++v) x[v] = static_cast<int>((m >> v) & 1U);
    if (!satisfies(f, x)) continue;
    any = true;
    if (x[i - 1] != x[j - 1]) return AllSatEqual::No;
  }
  return any ? AllSatEqual::Yes : AllSatEqual::Unsat;
}

/// Whether spins i and j agree in every ground state of g (other spins,
/// including clause auxiliaries, are free).
inline bool ground_states_equal(const HamiltonianGraph& g, NodeId i, NodeId j, const OracleConfig& cfg = {}) {
  const auto gs = enumerate_ground_states(g, cfg);
  for (const auto& s : gs.states)
    if (s.at(i) != s.at(j)) return false;
  return true;
}

/// Uniformly random clauses of 1..max_len distinct variables with random
/// signs.
inline CnfFormula random_cnf(int num_vars, int num_clauses, int max_len, Rng& rng) {
  if (num_vars < 1 || max_len < 1 || max_len > 3) throw std::invalid_argument("bad random CNF shape");
  CnfFormula f;
  f.num_vars = num_vars;
  for (int k = 0; k < num_clauses; ++k) {
    const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(max_len, num_vars))));
    std::vector<int> vars(static_cast<std::size_t>(num_vars));
    for (int v = 0; v < num_vars; ++v) vars[v] = v + 1;
    rng.shuffle(vars.begin(), vars.end());
    Clause c;
    for (int t = 0; t < len; ++t) c.push_back(rng.bernoulli(0.5) ? vars[t] : -vars[t]);
    f.clauses.push_back(c);
  }
  return f;
}

}  // namespace granite
