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

// Edge-alignment predictor.
//
// Node and edge representations are refined jointly for L rounds:
//
//   h_v' = MLP_node(h_v ++ sum_{u in N(v)} h_u ++ sum_{u in N(v)} e_vu)
//   e_uv' = MLP_edge(h_u ++ h_v ++ e_uv)
//
// with every round computed from the previous round's values. Each edge is
// then scored as yhat = sigmoid(<w, h_u ++ h_v ++ e_uv>), the probability
// that the edge should be flip-merged. Endpoints are ordered by node id
// (auxiliary node first). Gradients are computed by hand in reverse mode.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "granite/ising.hpp"
#include "granite/oracle.hpp"
#include "granite/parallel.hpp"
#include "granite/random.hpp"

namespace granite {

inline constexpr int kNodeFeatures = 3;  // degree, sum w, sum |w|
inline constexpr int kEdgeFeatures = 2;  // w, |w|

struct FeatureSet {
  std::map<NodeId, std::array<double, kNodeFeatures>> node_features;
  std::map<EdgeKey, std::array<double, kEdgeFeatures>> edge_features;
};

inline FeatureSet init_features(const HamiltonianGraph& g) {
  FeatureSet f;
  for (NodeId v : g.nodes()) f.node_features[v] = {0.0, 0.0, 0.0};
  for (const auto& [e, w] : g.edges()) {
    for (NodeId v : {e.lo, e.hi}) {
      auto& nf = f.node_features[v];
      nf[0] += 1.0;
      nf[1] += w;
      nf[2] += std::abs(w);
    }
    f.edge_features[e] = {w, std::abs(w)};
  }
  return f;
}

/// Dense index form of a graph used by the network.
struct PreparedGraph {
  std::vector<NodeId> ids;                                   // ascending
  std::vector<EdgeKey> keys;                                 // canonical order
  std::vector<std::array<int, 2>> ends;                      // (lo, hi) node indices
  std::vector<std::vector<std::pair<int, int>>> incident;    // per node: (neighbor, edge), by neighbor id
  std::vector<double> node_features;                         // nodes x kNodeFeatures
  std::vector<double> edge_features;                         // edges x kEdgeFeatures

  std::size_t node_count() const { return ids.size(); }
  std::size_t edge_count() const { return keys.size(); }
};

inline PreparedGraph prepare(const HamiltonianGraph& g) {
  PreparedGraph p;
  p.ids.assign(g.nodes().begin(), g.nodes().end());
  std::map<NodeId, int> index;
  for (std::size_t k = 0; k < p.ids.size(); ++k) index[p.ids[k]] = static_cast<int>(k);
  p.incident.resize(p.ids.size());
  const FeatureSet f = init_features(g);
  p.node_features.reserve(p.ids.size() * kNodeFeatures);
  for (NodeId v : p.ids)
    for (double x : f.node_features.at(v)) p.node_features.push_back(x);
  for (const auto& [e, w] : g.edges()) {
    const int a = index.at(e.lo), b = index.at(e.hi);
    const int id = static_cast<int>(p.keys.size());
    p.keys.push_back(e);
    p.ends.push_back({a, b});
    p.incident[a].push_back({b, id});
    p.incident[b].push_back({a, id});
    for (double x : f.edge_features.at(e)) p.edge_features.push_back(x);
  }
  for (auto& inc : p.incident) std::sort(inc.begin(), inc.end());
  return p;
}

// ---------------------------------------------------------------------------
// Parameters

/// Fully connected layer, weight stored row-major as out x in.
struct Dense {
  int in = 0;
  int out = 0;
  std::vector<double> weight;
  std::vector<double> bias;
};

/// ReLU after every hidden layer, identity on the last.
struct Mlp {
  std::vector<Dense> layers;

  int in_dim() const { return layers.front().in; }
  int out_dim() const { return layers.back().out; }
};

struct GnnShape {
  int layers = 3;
  int node_dim = 16;
  int edge_dim = 16;
  int hidden = 32;

  int node_dim_at(int l) const { return l == 0 ? kNodeFeatures : node_dim; }
  int edge_dim_at(int l) const { return l == 0 ? kEdgeFeatures : edge_dim; }
  int head_dim() const { return 2 * node_dim_at(layers) + edge_dim_at(layers); }

  friend bool operator==(const GnnShape&, const GnnShape&) = default;
};

struct GnnParams {
  GnnShape shape;
  std::vector<Mlp> node_mlps;  // one per round
  std::vector<Mlp> edge_mlps;
  std::vector<double> head;

  /// Visits every tensor as (name, values) in a fixed order.
  template <class Params, class Visit>
  static void visit_blocks(Params& p, Visit&& visit) {
    for (std::size_t l = 0; l < p.node_mlps.size(); ++l) {
      for (std::size_t k = 0; k < p.node_mlps[l].layers.size(); ++k) {
        const std::string base = "layer" + std::to_string(l + 1) + ".node.dense" + std::to_string(k);
        visit(base + ".weight", p.node_mlps[l].layers[k].weight);
        visit(base + ".bias", p.node_mlps[l].layers[k].bias);
      }
      for (std::size_t k = 0; k < p.edge_mlps[l].layers.size(); ++k) {
        const std::string base = "layer" + std::to_string(l + 1) + ".edge.dense" + std::to_string(k);
        visit(base + ".weight", p.edge_mlps[l].layers[k].weight);
        visit(base + ".bias", p.edge_mlps[l].layers[k].bias);
      }
    }
    visit(std::string("head"), p.head);
  }
  template <class Visit>
  void for_each_block(Visit&& visit) { visit_blocks(*this, visit); }
  template <class Visit>
  void for_each_block(Visit&& visit) const { visit_blocks(*this, visit); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_block([&](const std::string&, const std::vector<double>& v) { n += v.size(); });
    return n;
  }

  GnnParams zeros_like() const {
    GnnParams z = *this;
    z.for_each_block([](const std::string&, std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
    return z;
  }

  GnnParams& operator+=(const GnnParams& o) {
    std::vector<std::vector<double>*> mine;
    for_each_block([&](const std::string&, std::vector<double>& v) { mine.push_back(&v); });
    std::size_t i = 0;
    o.for_each_block([&](const std::string&, const std::vector<double>& v) {
      auto& dst = *mine[i++];
      for (std::size_t k = 0; k < v.size(); ++k) dst[k] += v[k];
    });
    return *this;
  }

  void scale(double s) {
    for_each_block([&](const std::string&, std::vector<double>& v) {
      for (double& x : v) x *= s;
    });
  }
};

namespace detail {

inline Mlp make_mlp(int in, int hidden, int out) {
  Mlp m;
  m.layers.push_back({in, hidden, std::vector<double>(static_cast<std::size_t>(in * hidden)), std::vector<double>(hidden)});
  m.layers.push_back({hidden, out, std::vector<double>(static_cast<std::size_t>(hidden * out)), std::vector<double>(out)});
  return m;
}

}  // namespace detail

/// All-zero parameters of the given shape.
inline GnnParams zero_params(const GnnShape& shape) {
  if (shape.layers < 1) throw std::invalid_argument("the network needs at least one message-passing round");
  GnnParams p;
  p.shape = shape;
  for (int l = 1; l <= shape.layers; ++l) {
    const int node_in = 2 * shape.node_dim_at(l - 1) + shape.edge_dim_at(l - 1);
    const int edge_in = 2 * shape.node_dim_at(l - 1) + shape.edge_dim_at(l - 1);
    p.node_mlps.push_back(detail::make_mlp(node_in, shape.hidden, shape.node_dim_at(l)));
    p.edge_mlps.push_back(detail::make_mlp(edge_in, shape.hidden, shape.edge_dim_at(l)));
  }
  p.head.assign(static_cast<std::size_t>(shape.head_dim()), 0.0);
  return p;
}

/// He-uniform weights, zero biases, head uniform in +-1/sqrt(dim).
inline GnnParams init_params(const GnnShape& shape, std::uint64_t seed) {
  GnnParams p = zero_params(shape);
  Rng rng(seed);
  auto fill = [&](Mlp& m) {
    for (auto& d : m.layers) {
      const double bound = std::sqrt(6.0 / d.in);
      for (double& x : d.weight) x = rng.uniform(-bound, bound);
    }
  };
  for (std::size_t l = 0; l < p.node_mlps.size(); ++l) {
    fill(p.node_mlps[l]);
    fill(p.edge_mlps[l]);
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.head.size()));
  for (double& x : p.head) x = rng.uniform(-bound, bound);
  return p;
}

inline void validate(const GnnParams& p) {
  if (p.node_mlps.size() != static_cast<std::size_t>(p.shape.layers) || p.edge_mlps.size() != p.node_mlps.size())
    throw std::invalid_argument("parameter set has the wrong number of rounds");
  for (int l = 1; l <= p.shape.layers; ++l) {
    const int expect_in = 2 * p.shape.node_dim_at(l - 1) + p.shape.edge_dim_at(l - 1);
    for (const Mlp* m : {&p.node_mlps[l - 1], &p.edge_mlps[l - 1]}) {
      const char* kind = m == &p.node_mlps[l - 1] ? "node" : "edge";
      if (m->layers.empty()) throw std::invalid_argument("empty MLP in layer " + std::to_string(l));
      if (m->in_dim() != expect_in)
        throw std::invalid_argument("layer " + std::to_string(l) + " " + kind + " MLP expects input dim " +
                                    std::to_string(expect_in) + ", has " + std::to_string(m->in_dim()));
      const int expect_out = m == &p.node_mlps[l - 1] ? p.shape.node_dim_at(l) : p.shape.edge_dim_at(l);
      if (m->out_dim() != expect_out)
        throw std::invalid_argument("layer " + std::to_string(l) + " " + kind + " MLP output dim mismatch");
      for (std::size_t k = 0; k < m->layers.size(); ++k) {
        const Dense& d = m->layers[k];
        if (k > 0 && d.in != m->layers[k - 1].out)
          throw std::invalid_argument("layer " + std::to_string(l) + " " + kind + " MLP dims do not chain");
        if (d.weight.size() != static_cast<std::size_t>(d.in * d.out) || d.bias.size() != static_cast<std::size_t>(d.out))
          throw std::invalid_argument("layer " + std::to_string(l) + " " + kind + " tensor size mismatch");
        const auto finite = [](double x) { return std::isfinite(x); };
        if (!std::all_of(d.weight.begin(), d.weight.end(), finite) || !std::all_of(d.bias.begin(), d.bias.end(), finite))
          throw std::invalid_argument("layer " + std::to_string(l) + " " + kind + " MLP has a non-finite parameter");
      }
    }
  }
  if (p.head.size() != static_cast<std::size_t>(p.shape.head_dim()))
    throw std::invalid_argument("prediction vector length must be " + std::to_string(p.shape.head_dim()));
  for (double x : p.head)
    if (!std::isfinite(x)) throw std::invalid_argument("prediction vector has a non-finite entry");
}

// ---------------------------------------------------------------------------
// Forward / backward

struct MlpTrace {
  int rows = 0;
  std::vector<double> input;             // rows x in
  std::vector<std::vector<double>> pre;  // per dense: rows x out, before activation
};

struct ForwardTrace {
  std::vector<std::vector<double>> node_repr;  // per round 0..L, nodes x dim
  std::vector<std::vector<double>> edge_repr;  // per round 0..L, edges x dim
  std::vector<MlpTrace> node_mlp, edge_mlp;    // per round 1..L
  std::vector<double> logits;
  std::vector<double> yhat;
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline std::vector<double> mlp_forward(const Mlp& m, MlpTrace& trace) {
  std::vector<double> act = trace.input;
  const int rows = trace.rows;
  trace.pre.clear();
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    const Dense& d = m.layers[k];
    std::vector<double> out(static_cast<std::size_t>(rows * d.out));
    for (int r = 0; r < rows; ++r) {
      const double* x = act.data() + static_cast<std::size_t>(r) * d.in;
      double* y = out.data() + static_cast<std::size_t>(r) * d.out;
      for (int o = 0; o < d.out; ++o) {
        const double* wrow = d.weight.data() + static_cast<std::size_t>(o) * d.in;
        double s = d.bias[o];
        for (int i = 0; i < d.in; ++i) s += wrow[i] * x[i];
        y[o] = s;
      }
    }
    trace.pre.push_back(out);
    if (k + 1 < m.layers.size())
      for (double& v : out) v = std::max(0.0, v);
    act = std::move(out);
  }
  return act;
}

// Accumulates parameter gradients into `grad` and returns d(loss)/d(input).
inline std::vector<double> mlp_backward(const Mlp& m, const MlpTrace& trace, std::vector<double> d_out, Mlp& grad) {
  const int rows = trace.rows;
  for (std::size_t k = m.layers.size(); k-- > 0;) {
    const Dense& d = m.layers[k];
    Dense& g = grad.layers[k];
    if (k + 1 < m.layers.size()) {
      const auto& pre = trace.pre[k];
      for (std::size_t i = 0; i < d_out.size(); ++i)
        if (pre[i] <= 0.0) d_out[i] = 0.0;
    }
    // Input activations of dense k.
    std::vector<double> act_in;
    if (k == 0) {
      act_in = trace.input;
    } else {
      act_in = trace.pre[k - 1];
      for (double& v : act_in) v = std::max(0.0, v);
    }
    std::vector<double> d_in(static_cast<std::size_t>(rows * d.in), 0.0);
    for (int r = 0; r < rows; ++r) {
      const double* x = act_in.data() + static_cast<std::size_t>(r) * d.in;
      const double* dy = d_out.data() + static_cast<std::size_t>(r) * d.out;
      double* dx = d_in.data() + static_cast<std::size_t>(r) * d.in;
      for (int o = 0; o < d.out; ++o) {
        const double gy = dy[o];
        if (gy == 0.0) continue;
        g.bias[o] += gy;
        double* gw = g.weight.data() + static_cast<std::size_t>(o) * d.in;
        const double* wrow = d.weight.data() + static_cast<std::size_t>(o) * d.in;
        for (int i = 0; i < d.in; ++i) {
          gw[i] += gy * x[i];
          dx[i] += gy * wrow[i];
        }
      }
    }
    d_out = std::move(d_in);
  }
  return d_out;
}

}  // namespace detail

inline ForwardTrace forward_trace(const GnnParams& p, const PreparedGraph& g) {
  validate(p);
  const int n = static_cast<int>(g.node_count());
  const int m = static_cast<int>(g.edge_count());
  ForwardTrace t;
  t.node_repr.push_back(g.node_features);
  t.edge_repr.push_back(g.edge_features);
  for (int l = 1; l <= p.shape.layers; ++l) {
    const int dh = p.shape.node_dim_at(l - 1);
    const int de = p.shape.edge_dim_at(l - 1);
    const auto& H = t.node_repr.back();
    const auto& E = t.edge_repr.back();

    MlpTrace node;
    node.rows = n;
    const int node_in = 2 * dh + de;
    node.input.assign(static_cast<std::size_t>(n * node_in), 0.0);
    for (int v = 0; v < n; ++v) {
      double* row = node.input.data() + static_cast<std::size_t>(v) * node_in;
      std::copy_n(H.data() + static_cast<std::size_t>(v) * dh, dh, row);
      for (const auto& [u, e] : g.incident[v]) {
        const double* hu = H.data() + static_cast<std::size_t>(u) * dh;
        for (int i = 0; i < dh; ++i) row[dh + i] += hu[i];
        const double* ee = E.data() + static_cast<std::size_t>(e) * de;
        for (int i = 0; i < de; ++i) row[2 * dh + i] += ee[i];
      }
    }
    MlpTrace edge;
    edge.rows = m;
    const int edge_in = 2 * dh + de;
    edge.input.assign(static_cast<std::size_t>(m * edge_in), 0.0);
    for (int e = 0; e < m; ++e) {
      double* row = edge.input.data() + static_cast<std::size_t>(e) * edge_in;
      std::copy_n(H.data() + static_cast<std::size_t>(g.ends[e][0]) * dh, dh, row);
      std::copy_n(H.data() + static_cast<std::size_t>(g.ends[e][1]) * dh, dh, row + dh);
      std::copy_n(E.data() + static_cast<std::size_t>(e) * de, de, row + 2 * dh);
    }
    auto h_next = detail::mlp_forward(p.node_mlps[l - 1], node);
    auto e_next = detail::mlp_forward(p.edge_mlps[l - 1], edge);
    t.node_mlp.push_back(std::move(node));
    t.edge_mlp.push_back(std::move(edge));
    t.node_repr.push_back(std::move(h_next));
    t.edge_repr.push_back(std::move(e_next));
  }
  const int dh = p.shape.node_dim_at(p.shape.layers);
  const int de = p.shape.edge_dim_at(p.shape.layers);
  const auto& H = t.node_repr.back();
  const auto& E = t.edge_repr.back();
  t.logits.resize(static_cast<std::size_t>(m));
  t.yhat.resize(static_cast<std::size_t>(m));
  for (int e = 0; e < m; ++e) {
    const double* hu = H.data() + static_cast<std::size_t>(g.ends[e][0]) * dh;
    const double* hv = H.data() + static_cast<std::size_t>(g.ends[e][1]) * dh;
    const double* ee = E.data() + static_cast<std::size_t>(e) * de;
    double s = 0.0;
    for (int i = 0; i < dh; ++i) s += p.head[i] * hu[i];
    for (int i = 0; i < dh; ++i) s += p.head[dh + i] * hv[i];
    for (int i = 0; i < de; ++i) s += p.head[2 * dh + i] * ee[i];
    t.logits[e] = s;
    t.yhat[e] = detail::sigmoid(s);
  }
  return t;
}

/// Flip-merge probability for every edge, in canonical edge order.
inline std::vector<double> forward(const GnnParams& p, const PreparedGraph& g) { return forward_trace(p, g).yhat; }

inline std::map<EdgeKey, double> forward(const GnnParams& p, const HamiltonianGraph& g) {
  const PreparedGraph pg = prepare(g);
  const auto y = forward(p, pg);
  std::map<EdgeKey, double> out;
  for (std::size_t e = 0; e < y.size(); ++e) out[pg.keys[e]] = y[e];
  return out;
}

/// Backpropagates d(loss)/d(logit) through a recorded forward pass.
inline void backward(const GnnParams& p, const PreparedGraph& g, const ForwardTrace& t, std::span<const double> d_logits,
                     GnnParams& grad) {
  const int n = static_cast<int>(g.node_count());
  const int m = static_cast<int>(g.edge_count());
  const int L = p.shape.layers;
  int dh = p.shape.node_dim_at(L);
  int de = p.shape.edge_dim_at(L);
  std::vector<double> dH(static_cast<std::size_t>(n * dh), 0.0);
  std::vector<double> dE(static_cast<std::size_t>(m * de), 0.0);
  {
    const auto& H = t.node_repr.back();
    const auto& E = t.edge_repr.back();
    for (int e = 0; e < m; ++e) {
      const double gz = d_logits[e];
      if (gz == 0.0) continue;
      const int a = g.ends[e][0], b = g.ends[e][1];
      for (int i = 0; i < dh; ++i) {
        grad.head[i] += gz * H[static_cast<std::size_t>(a) * dh + i];
        grad.head[dh + i] += gz * H[static_cast<std::size_t>(b) * dh + i];
        dH[static_cast<std::size_t>(a) * dh + i] += gz * p.head[i];
        dH[static_cast<std::size_t>(b) * dh + i] += gz * p.head[dh + i];
      }
      for (int i = 0; i < de; ++i) {
        grad.head[2 * dh + i] += gz * E[static_cast<std::size_t>(e) * de + i];
        dE[static_cast<std::size_t>(e) * de + i] += gz * p.head[2 * dh + i];
      }
    }
  }
  for (int l = L; l >= 1; --l) {
    const int pdh = p.shape.node_dim_at(l - 1);
    const int pde = p.shape.edge_dim_at(l - 1);
    const int in = 2 * pdh + pde;
    auto dx_node = detail::mlp_backward(p.node_mlps[l - 1], t.node_mlp[l - 1], std::move(dH), grad.node_mlps[l - 1]);
    auto dx_edge = detail::mlp_backward(p.edge_mlps[l - 1], t.edge_mlp[l - 1], std::move(dE), grad.edge_mlps[l - 1]);
    std::vector<double> pdH(static_cast<std::size_t>(n * pdh), 0.0);
    std::vector<double> pdE(static_cast<std::size_t>(m * pde), 0.0);
    for (int v = 0; v < n; ++v) {
      const double* row = dx_node.data() + static_cast<std::size_t>(v) * in;
      for (int i = 0; i < pdh; ++i) pdH[static_cast<std::size_t>(v) * pdh + i] += row[i];
      for (const auto& [u, e] : g.incident[v]) {
        for (int i = 0; i < pdh; ++i) pdH[static_cast<std::size_t>(u) * pdh + i] += row[pdh + i];
        for (int i = 0; i < pde; ++i) pdE[static_cast<std::size_t>(e) * pde + i] += row[2 * pdh + i];
      }
    }
    for (int e = 0; e < m; ++e) {
      const double* row = dx_edge.data() + static_cast<std::size_t>(e) * in;
      const int a = g.ends[e][0], b = g.ends[e][1];
      for (int i = 0; i < pdh; ++i) {
        pdH[static_cast<std::size_t>(a) * pdh + i] += row[i];
        pdH[static_cast<std::size_t>(b) * pdh + i] += row[pdh + i];
      }
      for (int i = 0; i < pde; ++i) pdE[static_cast<std::size_t>(e) * pde + i] += row[2 * pdh + i];
    }
    dH = std::move(pdH);
    dE = std::move(pdE);
    dh = pdh;
    de = pde;
  }
}

// ---------------------------------------------------------------------------
// Hybrid loss
//
//   c_i = softmax_i(|yhat_i - 0.5| / T)      over non-neutral edges
//   w_i = lambda c_i + (1 - lambda)
//   L   = sum_i w_i BCE(yhat_i, y_i)
//
// The confidence weights are differentiated through. With `power_weighting`
// the weights are c_i = (yhat_i - 0.5)^p / sum_j (yhat_j - 0.5)^p instead.

struct LossConfig {
  double lambda = 0.5;
  double temperature = 1.0;
  bool power_weighting = false;
  int power = 2;
};

inline void validate(const LossConfig& c) {
  if (!(c.lambda >= 0.0 && c.lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (!(c.temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (c.power_weighting && (c.power < 2 || c.power % 2 != 0))
    throw std::invalid_argument("confidence power must be an even integer >= 2");
}

struct LossTerms {
  double loss = 0.0;
  std::vector<double> confidence;  // c_i for active edges, 0 elsewhere
  std::vector<double> d_logits;    // d(loss)/d(logit), 0 for neutral edges
};

namespace detail {

// bce[i] is the cross-entropy of edge i; yhat must be sigmoid(logit).
inline std::optional<LossTerms> hybrid_terms(std::span<const double> yhat, std::span<const double> bce,
                                             std::span<const double> y, std::span<const char> active,
                                             const LossConfig& cfg) {
  const std::size_t m = yhat.size();
  if (bce.size() != m || y.size() != m || active.size() != m) throw std::invalid_argument("loss inputs are not aligned");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < m; ++i)
    if (active[i]) idx.push_back(i);
  if (idx.empty()) return std::nullopt;

  LossTerms out;
  out.confidence.assign(m, 0.0);
  out.d_logits.assign(m, 0.0);
  // dconf[i] = d c-weighted-sum / d yhat_i, filled per weighting scheme.
  std::vector<double> c(idx.size());
  if (!cfg.power_weighting) {
    double amax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < idx.size(); ++k) amax = std::max(amax, std::abs(yhat[idx[k]] - 0.5) / cfg.temperature);
    double z = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      c[k] = std::exp(std::abs(yhat[idx[k]] - 0.5) / cfg.temperature - amax);
      z += c[k];
    }
    for (double& ck : c) ck /= z;
  } else {
    double z = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      c[k] = std::pow(yhat[idx[k]] - 0.5, cfg.power);
      z += c[k];
    }
    if (z > 0.0) {
      for (double& ck : c) ck /= z;
    } else {
      std::fill(c.begin(), c.end(), 1.0 / static_cast<double>(idx.size()));
    }
  }
  double weighted_mean = 0.0;  // sum_k c_k bce_k
  for (std::size_t k = 0; k < idx.size(); ++k) weighted_mean += c[k] * bce[idx[k]];

  double z_power = 0.0;
  if (cfg.power_weighting)
    for (std::size_t k = 0; k < idx.size(); ++k) z_power += std::pow(yhat[idx[k]] - 0.5, cfg.power);

  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    const double w = cfg.lambda * c[k] + (1.0 - cfg.lambda);
    out.loss += w * bce[i];
    out.confidence[i] = c[k];
    const double dev = yhat[i] - 0.5;
    double dweight = 0.0;  // d(sum_j c_j bce_j)/d yhat_i
    if (!cfg.power_weighting) {
      const double sign = dev > 0 ? 1.0 : (dev < 0 ? -1.0 : 0.0);
      dweight = c[k] * (bce[i] - weighted_mean) * sign / cfg.temperature;
    } else if (z_power > 0.0) {
      dweight = (bce[i] - weighted_mean) / z_power * cfg.power * std::pow(dev, cfg.power - 1);
    }
    const double dsig = yhat[i] * (1.0 - yhat[i]);
    out.d_logits[i] = w * (yhat[i] - y[i]) + cfg.lambda * dweight * dsig;
  }
  return out;
}

}  // namespace detail

/// Hybrid loss over non-neutral edges; nullopt when every edge is neutral.
inline std::optional<double> hybrid_loss(std::span<const double> yhat, std::span<const double> y,
                                         std::span<const char> neutral_mask, const LossConfig& cfg) {
  validate(cfg);
  std::vector<double> bce(yhat.size());
  std::vector<char> active(yhat.size());
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    if (!(yhat[i] > 0.0 && yhat[i] < 1.0)) throw std::invalid_argument("predictions must lie in (0, 1)");
    bce[i] = -y[i] * std::log(yhat[i]) - (1.0 - y[i]) * std::log(1.0 - yhat[i]);
    active[i] = neutral_mask[i] ? 0 : 1;
  }
  auto terms = detail::hybrid_terms(yhat, bce, y, active, cfg);
  if (!terms) return std::nullopt;
  return terms->loss;
}

inline std::optional<double> hybrid_loss(std::span<const double> yhat, std::span<const double> y,
                                         std::span<const char> neutral_mask, double lambda, double temperature) {
  return hybrid_loss(yhat, y, neutral_mask, LossConfig{lambda, temperature});
}

/// Same loss evaluated from logits (numerically stable cross-entropy).
inline std::optional<LossTerms> hybrid_loss_from_logits(std::span<const double> logits, std::span<const double> y,
                                                        std::span<const char> active, const LossConfig& cfg) {
  std::vector<double> yhat(logits.size()), bce(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    yhat[i] = detail::sigmoid(logits[i]);
    bce[i] = y[i] * detail::softplus(-logits[i]) + (1.0 - y[i]) * detail::softplus(logits[i]);
  }
  return detail::hybrid_terms(yhat, bce, y, active, cfg);
}

// ---------------------------------------------------------------------------
// Training samples and gradients

/// A prepared graph with targets: y = 0 merge (A), y = 1 flip-merge (C);
/// neutral (B) edges are inactive.
struct GraphSample {
  PreparedGraph graph;
  std::vector<double> y;
  std::vector<char> active;

  std::size_t active_count() const { return static_cast<std::size_t>(std::count(active.begin(), active.end(), 1)); }
};

inline GraphSample make_sample(const HamiltonianGraph& g, const EdgeLabels& labels) {
  GraphSample s{prepare(g), {}, {}};
  for (const EdgeKey& e : s.graph.keys) {
    auto it = labels.find(e);
    if (it == labels.end()) throw std::invalid_argument("no label for edge " + to_string(e));
    s.y.push_back(it->second == EdgeLabel::C ? 1.0 : 0.0);
    s.active.push_back(it->second == EdgeLabel::B ? 0 : 1);
  }
  return s;
}

/// Loss of one sample; nullopt if it has no non-neutral edge.
inline std::optional<double> sample_loss(const GnnParams& p, const GraphSample& s, const LossConfig& cfg) {
  const auto t = forward_trace(p, s.graph);
  auto terms = hybrid_loss_from_logits(t.logits, s.y, s.active, cfg);
  if (!terms) return std::nullopt;
  return terms->loss;
}

inline std::optional<double> sample_loss_and_gradient(const GnnParams& p, const GraphSample& s, const LossConfig& cfg,
                                                      GnnParams& grad) {
  const auto t = forward_trace(p, s.graph);
  auto terms = hybrid_loss_from_logits(t.logits, s.y, s.active, cfg);
  if (!terms) return std::nullopt;
  backward(p, s.graph, t, terms->d_logits, grad);
  return terms->loss;
}

struct BatchGradient {
  std::optional<double> loss;  // batch mean over samples with active edges
  std::size_t used = 0;        // samples contributing
  std::size_t skipped = 0;     // all-neutral samples
  GnnParams grad;
};

/// Exact gradient of the batch-mean hybrid loss. Per-sample work may run on
/// `jobs` threads; partial gradients are summed in batch order.
inline BatchGradient gradients(const GnnParams& p, std::span<const GraphSample* const> batch, const LossConfig& cfg,
                               int jobs = 1) {
  validate(cfg);
  validate(p);
  std::vector<std::optional<double>> losses(batch.size());
  std::vector<GnnParams> partial(batch.size());
  parallel_for(batch.size(), jobs, [&](std::size_t i) {
    partial[i] = p.zeros_like();
    losses[i] = sample_loss_and_gradient(p, *batch[i], cfg, partial[i]);
  });
  BatchGradient out;
  out.grad = p.zeros_like();
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!losses[i]) {
      ++out.skipped;
      continue;
    }
    total += *losses[i];
    out.grad += partial[i];
    ++out.used;
  }
  if (out.used == 0) return out;
  out.loss = total / static_cast<double>(out.used);
  out.grad.scale(1.0 / static_cast<double>(out.used));
  out.grad.for_each_block([](const std::string& name, const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) throw std::runtime_error("non-finite gradient in parameter block " + name);
  });
  return out;
}

}  // namespace granite
