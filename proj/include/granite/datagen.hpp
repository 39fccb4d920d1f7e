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

// Random Ising instances on Erdos-Renyi, Barabasi-Albert and Watts-Strogatz
// graphs, and labeled datasets built from them.
//
// Average degree d maps to generator parameters as
//   ER: p = d / (n - 1)
//   BA: m = max(1, round(d / 2)), clamped to n - 1
//   WS: k = nearest even number >= 2 to d, clamped to n - 1; rewiring beta
// The BA generator starts from a complete graph on m nodes and attaches each
// further node to m distinct existing nodes with probability proportional to
// degree, so it has C(m,2) + m (n - m) edges. WS on n = 2 is the single edge.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "granite/io.hpp"
#include "granite/ising.hpp"
#include "granite/oracle.hpp"
#include "granite/parallel.hpp"
#include "granite/random.hpp"

namespace granite {

enum class Topology { ER, BA, WS };

inline std::string topology_name(Topology t) {
  switch (t) {
    case Topology::ER: return "er";
    case Topology::BA: return "ba";
    case Topology::WS: return "ws";
  }
  return "?";
}

inline Topology parse_topology(const std::string& s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "er") return Topology::ER;
  if (lower == "ba") return Topology::BA;
  if (lower == "ws") return Topology::WS;
  throw std::invalid_argument("unknown topology '" + s + "' (expected er, ba or ws)");
}

struct DegreeParam {
  double p = 0.0;     // ER edge probability
  int m = 0;          // BA attachment count
  int k = 0;          // WS ring degree
  double beta = 0.0;  // WS rewiring probability
};

inline DegreeParam degree_param_for(Topology t, int n, double avg_degree, double ws_beta) {
  DegreeParam d;
  const int cap = std::max(1, n - 1);
  switch (t) {
    case Topology::ER:
      d.p = std::clamp(avg_degree / cap, 1e-9, 1.0);
      break;
    case Topology::BA:
      d.m = std::clamp(static_cast<int>(std::lround(avg_degree / 2.0)), 1, cap);
      break;
    case Topology::WS: {
      int k = std::max(2, 2 * static_cast<int>(std::lround(avg_degree / 2.0)));
      while (k > cap && k > 2) k -= 2;
      d.k = n < 3 ? 1 : k;
      d.beta = ws_beta;
      break;
    }
  }
  return d;
}

inline std::string describe(Topology t, const DegreeParam& d) {
  std::ostringstream ss;
  ss << std::setprecision(17);
  switch (t) {
    case Topology::ER: ss << "p=" << d.p; break;
    case Topology::BA: ss << "m=" << d.m; break;
    case Topology::WS: ss << "k=" << d.k << ",beta=" << d.beta; break;
  }
  return ss.str();
}

struct WeightRange {
  double lo = -5.0;
  double hi = 5.0;
};

namespace detail {

inline std::set<EdgeKey> er_edges(int n, double p, Rng& rng) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("ER edge probability must be in (0, 1]");
  std::set<EdgeKey> edges;
  for (NodeId i = 1; i <= n; ++i)
    for (NodeId j = i + 1; j <= n; ++j)
      if (rng.bernoulli(p)) edges.insert({i, j});
  return edges;
}

inline std::set<EdgeKey> ba_edges(int n, int m, Rng& rng) {
  if (m < 1 || m > n - 1) throw std::invalid_argument("BA attachment count must be in [1, n-1]");
  std::set<EdgeKey> edges;
  std::vector<int> degree(static_cast<std::size_t>(n) + 1, 0);
  for (NodeId i = 1; i <= m; ++i)
    for (NodeId j = i + 1; j <= m; ++j) {
      edges.insert({i, j});
      ++degree[i];
      ++degree[j];
    }
  for (NodeId v = m + 1; v <= n; ++v) {
    std::set<NodeId> targets;
    std::int64_t total = 0;
    for (NodeId u = 1; u < v; ++u) total += degree[u];
    while (static_cast<int>(targets.size()) < m) {
      NodeId pick = 1;
      if (total == 0) {
        pick = static_cast<NodeId>(1 + rng.below(static_cast<std::uint64_t>(v - 1)));
      } else {
        auto r = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
        for (NodeId u = 1; u < v; ++u) {
          r -= degree[u];
          if (r < 0) {
            pick = u;
            break;
          }
        }
      }
      targets.insert(pick);
    }
    for (NodeId u : targets) {
      edges.insert(EdgeKey::of(u, v));
      ++degree[u];
      ++degree[v];
    }
  }
  return edges;
}

inline std::set<EdgeKey> ws_edges(int n, int k, double beta, Rng& rng) {
  if (n == 2) return {{1, 2}};
  if (k < 2 || k % 2 != 0 || k > n - 1) throw std::invalid_argument("WS ring degree must be even and in [2, n-1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("WS rewiring probability must be in [0, 1]");
  std::set<EdgeKey> edges;
  for (int i = 0; i < n; ++i)
    for (int j = 1; j <= k / 2; ++j) edges.insert(EdgeKey::of(i + 1, (i + j) % n + 1));
  // Rewire each lattice edge (i, i+j) to (i, r) with probability beta.
  for (int j = 1; j <= k / 2; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!rng.bernoulli(beta)) continue;
      const NodeId u = i + 1;
      const NodeId v = (i + j) % n + 1;
      if (!edges.count(EdgeKey::of(u, v))) continue;
      int degree_u = 0;
      for (const auto& e : edges) degree_u += e.touches(u) ? 1 : 0;
      if (degree_u >= n - 1) continue;
      NodeId w;
      do {
        w = static_cast<NodeId>(1 + rng.below(static_cast<std::uint64_t>(n)));
      } while (w == u || edges.count(EdgeKey::of(u, w)));
      edges.erase(EdgeKey::of(u, v));
      edges.insert(EdgeKey::of(u, w));
    }
  }
  return edges;
}

inline double sample_weight(const WeightRange& range, Rng& rng) {
  for (;;) {
    const double w = range.lo + (range.hi - range.lo) * rng.uniform_open01();
    if (w != 0.0 && w > range.lo && w < range.hi) return w;
  }
}

}  // namespace detail

/// Random instance with zero biases and couplings uniform in the open
/// weight range. Output is a pure function of the arguments.
inline HamiltonianGraph gen_instance(Topology t, int n, const DegreeParam& d, std::uint64_t seed,
                                     const WeightRange& range = {}) {
  if (n < 2) throw std::invalid_argument("instances need at least 2 spins");
  if (!(range.lo < range.hi)) throw std::invalid_argument("empty weight range");
  Rng rng(seed);
  std::set<EdgeKey> edges;
  switch (t) {
    case Topology::ER: edges = detail::er_edges(n, d.p, rng); break;
    case Topology::BA: edges = detail::ba_edges(n, d.m, rng); break;
    case Topology::WS: edges = detail::ws_edges(n, d.k, d.beta, rng); break;
  }
  std::vector<double> h(static_cast<std::size_t>(n), 0.0);
  std::vector<Coupling> couplings;
  couplings.reserve(edges.size());
  for (const auto& e : edges) couplings.push_back({e.lo, e.hi, detail::sample_weight(range, rng)});
  return build_graph(h, couplings);
}

// ---------------------------------------------------------------------------
// Labeled instances

struct LabeledInstance {
  HamiltonianGraph graph;
  EdgeLabels labels;
};

inline io::OrderedJson labeled_to_json(const LabeledInstance& inst) {
  io::OrderedJson doc = io::graph_to_json(inst.graph);
  io::OrderedJson labels = io::OrderedJson::array();
  for (const auto& [e, l] : inst.labels) labels.push_back(io::OrderedJson::array({e.lo, e.hi, std::string(1, label_char(l))}));
  doc["labels"] = std::move(labels);
  return doc;
}

inline LabeledInstance labeled_from_json(const io::Json& doc) {
  LabeledInstance inst{io::graph_from_json(doc), {}};
  if (!doc.contains("labels")) throw std::invalid_argument("labeled instance has no \"labels\"");
  for (const auto& t : doc.at("labels")) {
    const EdgeKey e = EdgeKey::of(t.at(0).get<NodeId>(), t.at(1).get<NodeId>());
    if (!inst.graph.has_edge(e.lo, e.hi)) throw std::invalid_argument("label for missing edge " + to_string(e));
    const auto s = t.at(2).get<std::string>();
    if (s.size() != 1) throw std::invalid_argument("label must be A, B or C");
    inst.labels[e] = label_from_char(s[0]);
  }
  if (inst.labels.size() != inst.graph.edge_count()) throw std::invalid_argument("labels do not cover every edge");
  return inst;
}

struct LabelCounts {
  std::size_t a = 0, b = 0, c = 0;

  void add(EdgeLabel l) { (l == EdgeLabel::A ? a : l == EdgeLabel::B ? b : c) += 1; }
  LabelCounts& operator+=(const LabelCounts& o) {
    a += o.a;
    b += o.b;
    c += o.c;
    return *this;
  }
};

inline LabelCounts count_labels(const EdgeLabels& labels) {
  LabelCounts counts;
  for (const auto& [e, l] : labels) counts.add(l);
  return counts;
}

// ---------------------------------------------------------------------------
// Datasets: <dir>/manifest.json + <dir>/instances/<id>.json

struct DatasetConfig {
  std::vector<Topology> topologies{Topology::ER, Topology::BA, Topology::WS};
  std::vector<int> sizes{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  // Average degrees per size. Empty means the default grid
  // {1, (n-1)/4, (n-1)/2, 3(n-1)/4, n-1}, rounded, clamped to >= 1, deduplicated.
  std::vector<double> degrees;
  int instances_per_config = 20;
  WeightRange weights;
  double split = 0.8;
  double ws_beta = 0.2;
  std::uint64_t master_seed = 0;
  OracleConfig oracle;
  int jobs = 1;
};

inline std::vector<double> degree_grid(const DatasetConfig& cfg, int n) {
  std::vector<double> grid;
  if (!cfg.degrees.empty()) {
    for (double d : cfg.degrees)
      if (d >= 1.0 && d <= n - 1) grid.push_back(d);
    if (grid.empty()) grid.push_back(std::max(1, n - 1));
    return grid;
  }
  const double top = std::max(1, n - 1);
  std::set<long> seen;
  for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const long d = std::max(1L, std::lround(frac == 0.0 ? 1.0 : frac * top));
    if (seen.insert(d).second) grid.push_back(static_cast<double>(d));
  }
  return grid;
}

struct InstanceMeta {
  std::string id;
  Topology topology = Topology::ER;
  int n = 0;
  double degree = 0.0;
  DegreeParam param;
  std::uint64_t seed = 0;
  bool train = true;
  LabelCounts labels;
};

struct DatasetEntry {
  InstanceMeta meta;
  LabeledInstance instance;
};

inline std::vector<InstanceMeta> plan_dataset(const DatasetConfig& cfg) {
  if (!(cfg.split > 0.0 && cfg.split < 1.0)) throw std::invalid_argument("train split must be in (0, 1)");
  if (cfg.instances_per_config < 1) throw std::invalid_argument("instances per config must be >= 1");
  std::vector<InstanceMeta> plan;
  for (Topology t : cfg.topologies) {
    for (int n : cfg.sizes) {
      if (n < 2) throw std::invalid_argument("instance sizes must be >= 2");
      if (n > cfg.oracle.max_free_spins)
        throw std::invalid_argument("size " + std::to_string(n) + " exceeds the exhaustive-search cap");
      const auto grid = degree_grid(cfg, n);
      for (std::size_t di = 0; di < grid.size(); ++di) {
        for (int r = 0; r < cfg.instances_per_config; ++r) {
          InstanceMeta m;
          m.topology = t;
          m.n = n;
          m.degree = grid[di];
          m.param = degree_param_for(t, n, grid[di], cfg.ws_beta);
          m.seed = derive_seed(cfg.master_seed, {static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(n),
                                                 static_cast<std::uint64_t>(std::llround(grid[di] * 1000)),
                                                 static_cast<std::uint64_t>(r)});
          std::ostringstream id;
          id << topology_name(t) << "-n" << std::setw(2) << std::setfill('0') << n << "-d" << std::setw(2)
             << std::setfill('0') << std::lround(grid[di]) << "-i" << std::setw(3) << std::setfill('0') << r;
          m.id = id.str();
          plan.push_back(m);
        }
      }
    }
  }
  // Deterministic split: seeded shuffle, first `split` fraction trains.
  std::vector<std::size_t> order(plan.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(cfg.master_seed, {0x5bd1e995ULL}));
  rng.shuffle(order.begin(), order.end());
  const auto n_train = static_cast<std::size_t>(std::floor(cfg.split * static_cast<double>(plan.size())));
  for (std::size_t rank = 0; rank < order.size(); ++rank) plan[order[rank]].train = rank < n_train;
  return plan;
}

inline io::OrderedJson config_to_json(const DatasetConfig& cfg) {
  io::OrderedJson doc;
  io::OrderedJson topo = io::OrderedJson::array();
  for (Topology t : cfg.topologies) topo.push_back(topology_name(t));
  doc["topologies"] = topo;
  doc["sizes"] = cfg.sizes;
  doc["degrees"] = cfg.degrees;
  doc["instances_per_config"] = cfg.instances_per_config;
  doc["weight_range"] = io::OrderedJson::array({cfg.weights.lo, cfg.weights.hi});
  doc["split"] = cfg.split;
  doc["ws_beta"] = cfg.ws_beta;
  doc["master_seed"] = cfg.master_seed;
  doc["max_free_spins"] = cfg.oracle.max_free_spins;
  doc["ba_variant"] = "complete graph on m nodes, then preferential attachment";
  return doc;
}

struct DatasetSummary {
  std::size_t instances = 0;
  std::size_t train = 0;
  LabelCounts labels;
};

inline LabeledInstance label_instance(const HamiltonianGraph& g, const OracleConfig& oracle) {
  return LabeledInstance{g, label_edges(g, oracle)};
}

/// Generates, labels and writes a dataset. Labeling fans out over cfg.jobs
/// workers; files are written in plan order.
inline DatasetSummary build_dataset(const DatasetConfig& cfg, const std::filesystem::path& dir) {
  auto plan = plan_dataset(cfg);
  std::vector<LabeledInstance> instances(plan.size());
  OracleConfig oracle = cfg.oracle;
  oracle.jobs = 1;
  parallel_for(plan.size(), cfg.jobs, [&](std::size_t i) {
    const auto& m = plan[i];
    try {
      instances[i] = label_instance(gen_instance(m.topology, m.n, m.param, m.seed, cfg.weights), oracle);
    } catch (const std::exception& e) {
      throw std::runtime_error("instance " + m.id + ": " + e.what());
    }
  });

  std::filesystem::create_directories(dir / "instances");
  DatasetSummary summary;
  io::OrderedJson entries = io::OrderedJson::array();
  for (std::size_t i = 0; i < plan.size(); ++i) {
    auto& m = plan[i];
    m.labels = count_labels(instances[i].labels);
    io::write_text(dir / "instances" / (m.id + ".json"), io::dump(labeled_to_json(instances[i])));
    io::OrderedJson e;
    e["id"] = m.id;
    e["topology"] = topology_name(m.topology);
    e["n"] = m.n;
    e["degree"] = m.degree;
    e["degree_param"] = describe(m.topology, m.param);
    e["seed"] = m.seed;
    e["split"] = m.train ? "train" : "val";
    e["labels"] = io::OrderedJson::array({m.labels.a, m.labels.b, m.labels.c});
    entries.push_back(std::move(e));
    summary.instances += 1;
    summary.train += m.train ? 1 : 0;
    summary.labels += m.labels;
  }
  io::OrderedJson manifest;
  manifest["format"] = "granite-dataset-v1";
  manifest["config"] = config_to_json(cfg);
  manifest["instance_count"] = summary.instances;
  manifest["train_count"] = summary.train;
  manifest["label_counts"] = {{"A", summary.labels.a}, {"B", summary.labels.b}, {"C", summary.labels.c}};
  manifest["instances"] = std::move(entries);
  io::write_text(dir / "manifest.json", io::dump(manifest));
  return summary;
}

struct Dataset {
  std::vector<DatasetEntry> entries;
  std::uint64_t manifest_hash = 0;
};

inline Dataset load_dataset(const std::filesystem::path& dir) {
  const std::string text = io::read_text(dir / "manifest.json");
  const auto manifest = io::parse(text, "dataset manifest");
  Dataset ds;
  ds.manifest_hash = fnv1a64(text);
  for (const auto& e : manifest.at("instances")) {
    DatasetEntry entry;
    auto& m = entry.meta;
    m.id = e.at("id").get<std::string>();
    m.topology = parse_topology(e.at("topology").get<std::string>());
    m.n = e.at("n").get<int>();
    m.degree = e.at("degree").get<double>();
    m.seed = e.at("seed").get<std::uint64_t>();
    m.train = e.at("split").get<std::string>() == "train";
    const auto path = dir / "instances" / (m.id + ".json");
    entry.instance = labeled_from_json(io::parse(io::read_text(path), "instance " + path.string()));
    m.labels = count_labels(entry.instance.labels);
    ds.entries.push_back(std::move(entry));
  }
  return ds;
}

}  // namespace granite
