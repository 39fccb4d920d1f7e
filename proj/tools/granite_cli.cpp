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

// granite: dataset generation, training, compression and evaluation.
//
// Exit status: 0 success, 1 rejected input or failed run, 2 usage error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "granite/granite.hpp"

namespace fs = std::filesystem;
using namespace granite;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

double to_double(const std::string& s, const std::string& flag) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(flag + ": not a number: '" + s + "'");
  }
}

int to_int(const std::string& s, const std::string& flag) {
  const double v = to_double(s, flag);
  if (v != static_cast<int>(v)) throw UsageError(flag + ": not an integer: '" + s + "'");
  return static_cast<int>(v);
}

// "2..12", "4,8,12" or a mix like "2..4,8".
std::vector<int> parse_int_list(const std::string& s, const std::string& flag) {
  std::vector<int> out;
  for (const auto& part : split_list(s)) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_int(part, flag));
      continue;
    }
    const int lo = to_int(part.substr(0, dots), flag);
    const int hi = to_int(part.substr(dots + 2), flag);
    if (hi < lo) throw UsageError(flag + ": empty range '" + part + "'");
    for (int v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const auto& part : split_list(s)) out.push_back(to_double(part, flag));
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

std::vector<Topology> parse_topologies(const std::string& s) {
  std::vector<Topology> out;
  for (const auto& part : split_list(s)) {
    if (part == "all") return {Topology::ER, Topology::BA, Topology::WS};
    try {
      out.push_back(parse_topology(part));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--topology: ") + e.what());
    }
  }
  if (out.empty()) throw UsageError("--topology: empty list");
  return out;
}

std::pair<int, int> parse_pair(const std::string& s, const std::string& flag) {
  const auto v = parse_int_list(s, flag);
  if (v.size() != 2) throw UsageError(flag + " expects two variables 'i,j'");
  return {v[0], v[1]};
}

void echo(const fs::path& path, const std::string& command, io::OrderedJson args) {
  io::OrderedJson doc;
  doc["command"] = command;
  doc["args"] = std::move(args);
  io::write_text(path, io::dump(doc));
}

// Options shared by commands that compress toward a size target. Ratios
// passed with --target-* are the fraction kept; --reduce-* give the
// fraction removed.
struct TargetOptions {
  std::optional<double> target_nodes, target_edges, reduce_nodes, reduce_edges;
  std::optional<int> target_count;

  void add(CLI::App* cmd) {
    cmd->add_option("--target-nodes", target_nodes, "Fraction of spins to keep");
    cmd->add_option("--target-edges", target_edges, "Fraction of edges to keep");
    cmd->add_option("--reduce-nodes", reduce_nodes, "Fraction of spins to remove");
    cmd->add_option("--reduce-edges", reduce_edges, "Fraction of edges to remove");
    cmd->add_option("--target-count", target_count, "Absolute number of spins to keep");
  }

  CompressionTarget resolve() const {
    const int given = !!target_nodes + !!target_edges + !!reduce_nodes + !!reduce_edges + !!target_count;
    if (given != 1) throw UsageError("give exactly one of --target-nodes, --target-edges, --reduce-nodes, --reduce-edges, --target-count");
    CompressionTarget t;
    if (target_nodes) t = CompressionTarget::node_ratio(*target_nodes);
    if (target_edges) t = CompressionTarget::edge_ratio(*target_edges);
    if (reduce_nodes) t = CompressionTarget::node_ratio(1.0 - *reduce_nodes);
    if (reduce_edges) t = CompressionTarget::edge_ratio(1.0 - *reduce_edges);
    if (target_count) t = CompressionTarget::nodes(*target_count);
    try {
      validate(t);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return t;
  }
};

io::OrderedJson target_json(const CompressionTarget& t) {
  io::OrderedJson doc;
  doc["mode"] = target_mode_name(t.mode);
  doc["value"] = t.value;
  return doc;
}

struct SaOptions {
  int sweeps = 2000;
  int restarts = 20;
  std::optional<double> t_hot;
  double t_cold = 0.01;

  void add(CLI::App* cmd) {
    cmd->add_option("--sweeps", sweeps, "Annealing sweeps per restart")->capture_default_str();
    cmd->add_option("--restarts", restarts, "Independent annealing restarts")->capture_default_str();
    cmd->add_option("--t-hot", t_hot, "Initial temperature (default 2 max|w|)");
    cmd->add_option("--t-cold", t_cold, "Final temperature")->capture_default_str();
  }

  SaConfig config(std::uint64_t seed) const {
    SaConfig c;
    c.sweeps = sweeps;
    c.restarts = restarts;
    c.t_hot = t_hot;
    c.t_cold = t_cold;
    c.seed = seed;
    return c;
  }

  io::OrderedJson json() const {
    io::OrderedJson doc;
    doc["sweeps"] = sweeps;
    doc["restarts"] = restarts;
    doc["t_hot"] = t_hot ? io::OrderedJson(*t_hot) : io::OrderedJson("2*max|w|");
    doc["t_cold"] = t_cold;
    return doc;
  }
};

SelectionRule parse_rule(const std::string& s) {
  if (s == "confidence") return SelectionRule::Confidence;
  if (s == "entropy") return SelectionRule::Entropy;
  throw UsageError("--rule must be 'confidence' or 'entropy'");
}

SolverKind parse_solver(const std::string& s) {
  if (s == "exact") return SolverKind::Exact;
  if (s == "sa") return SolverKind::Annealing;
  throw UsageError("--solver must be 'exact' or 'sa'");
}

struct Globals {
  std::uint64_t seed = 0;
  int jobs = 1;
};

// ---------------------------------------------------------------------------

struct GenOptions {
  std::string topology = "all";
  std::string sizes = "2..12";
  std::string degrees;
  int per_config = 20;
  double split = 0.8;
  double ws_beta = 0.2;
  double weight_lo = -5.0, weight_hi = 5.0;
  int max_spins = 24;
  std::string out;
};

int run_gen(const GenOptions& o, const Globals& g) {
  DatasetConfig cfg;
  cfg.topologies = parse_topologies(o.topology);
  cfg.sizes = parse_int_list(o.sizes, "--sizes");
  if (!o.degrees.empty()) cfg.degrees = parse_double_list(o.degrees, "--degrees");
  cfg.instances_per_config = o.per_config;
  cfg.split = o.split;
  cfg.ws_beta = o.ws_beta;
  cfg.weights = {o.weight_lo, o.weight_hi};
  if (!(o.weight_lo < o.weight_hi)) throw UsageError("--weight-lo must be below --weight-hi");
  cfg.master_seed = g.seed;
  cfg.oracle.max_free_spins = o.max_spins;
  cfg.jobs = g.jobs;
  const auto summary = build_dataset(cfg, o.out);
  io::OrderedJson args = config_to_json(cfg);
  args["jobs"] = g.jobs;
  echo(fs::path(o.out) / "run_config.json", "gen", args);
  std::cout << "wrote " << summary.instances << " instances (" << summary.train << " train) to " << o.out << "\n"
            << "labels: A=" << summary.labels.a << " B=" << summary.labels.b << " C=" << summary.labels.c << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct LabelOptions {
  std::string in, out;
  int max_spins = 24;
};

int run_label(const LabelOptions& o, const Globals& g) {
  OracleConfig oc;
  oc.max_free_spins = o.max_spins;
  oc.jobs = g.jobs;
  const auto graph = io::read_graph(o.in);
  const auto gs = enumerate_ground_states(graph, oc);
  LabeledInstance inst{graph, label_edges(graph, oc)};
  io::write_text(o.out, io::dump(labeled_to_json(inst)));
  const auto c = count_labels(inst.labels);
  std::cout << std::setprecision(17) << "e_min " << gs.e_min << ", " << gs.states.size() << " ground states\n"
            << "labels: A=" << c.a << " B=" << c.b << " C=" << c.c << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string dataset, out;
  int epochs = 300;
  double lr = 1e-3;
  double lambda = 0.5;
  double temperature = 1.0;
  bool power_weighting = false;
  int power = 2;
  int layers = 3;
  int node_dim = 16, edge_dim = 16, hidden = 32;
  int batch_size = 1;
  std::string sizes;
};

std::vector<GraphSample> samples_of(const Dataset& ds, bool train, const std::optional<std::vector<int>>& sizes) {
  std::vector<GraphSample> out;
  for (const auto& e : ds.entries) {
    if (e.meta.train != train) continue;
    if (sizes && std::find(sizes->begin(), sizes->end(), e.meta.n) == sizes->end()) continue;
    out.push_back(make_sample(e.instance.graph, e.instance.labels));
  }
  return out;
}

int run_train(const TrainOptions& o, const Globals& g) {
  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.max_epochs = o.epochs;
  cfg.loss = {o.lambda, o.temperature, o.power_weighting, o.power};
  cfg.shape = {o.layers, o.node_dim, o.edge_dim, o.hidden};
  cfg.batch_size = o.batch_size;
  cfg.seed = g.seed;
  cfg.jobs = g.jobs;
  if (o.layers < 1 || o.node_dim < 1 || o.edge_dim < 1 || o.hidden < 1) throw UsageError("network sizes must be >= 1");
  std::optional<std::vector<int>> sizes;
  if (!o.sizes.empty()) sizes = parse_int_list(o.sizes, "--sizes");

  const Dataset ds = load_dataset(o.dataset);
  const auto train_set = samples_of(ds, true, sizes);
  const auto val_set = samples_of(ds, false, sizes);
  const TrainResult r = train(train_set, val_set, cfg);

  const fs::path out(o.out);
  io::OrderedJson echo_cfg = train_config_to_json(cfg);
  io::write_text(out / "model.json", io::dump(checkpoint_to_json(r.params, echo_cfg, ds.manifest_hash)));
  io::write_text(out / "curve.csv", curve_csv(r.curve));
  io::OrderedJson args = echo_cfg;
  args["dataset"] = o.dataset;
  args["sizes"] = o.sizes;
  args["jobs"] = g.jobs;
  echo(out / "run_config.json", "train", args);
  const auto& best = r.curve[static_cast<std::size_t>(r.best_epoch - 1)];
  std::cout << std::setprecision(6) << "trained " << train_set.size() << " graphs for " << o.epochs
            << " epochs; best epoch " << r.best_epoch << " val loss " << r.best_val_loss << " val accuracy "
            << best.val_accuracy << "\n";
  if (r.skipped_train || r.skipped_val)
    std::cout << "all-neutral graphs skipped: " << r.skipped_train << " train, " << r.skipped_val << " val\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct CompressOptions {
  std::string model, in, out;
  bool oracle_scores = false;
  std::string rule = "confidence";
  TargetOptions target;
};

int run_compress(const CompressOptions& o, const Globals& g, bool random_baseline) {
  const CompressionTarget target = o.target.resolve();
  const HamiltonianGraph graph = io::read_graph(o.in);
  io::OrderedJson args;
  args["in"] = o.in;
  args["target"] = target_json(target);
  CompressionResult r;
  if (random_baseline) {
    args["seed"] = g.seed;
    r = random_compress(graph, target, g.seed);
  } else {
    const SelectionRule rule = parse_rule(o.rule);
    args["rule"] = o.rule;
    if (o.oracle_scores) {
      if (!o.model.empty()) throw UsageError("--model and --oracle-scores are exclusive");
      args["scores"] = "oracle";
      r = compress(graph, oracle_scorer(), target, rule);
    } else {
      if (o.model.empty()) throw UsageError("--model (or GRANITE_MODEL) is required unless --oracle-scores is given");
      args["model"] = o.model;
      r = compress(graph, read_checkpoint(o.model), target, rule);
    }
  }
  const fs::path out(o.out);
  io::write_graph(out / "reduced.json", r.reduced);
  io::write_text(out / "log.json", io::dump(io::log_to_json(r.log)));
  io::write_text(out / "trace.csv", trace_csv(r.trace));
  echo(out / "run_config.json", random_baseline ? "baseline" : "compress", args);
  std::cout << "spins " << graph.free_spin_count() << " -> " << r.reduced.free_spin_count() << ", edges "
            << graph.edge_count() << " -> " << r.reduced.edge_count() << ", " << r.log.records.size()
            << " contractions\n";
  if (r.exhausted) std::cout << "note: ran out of edges before reaching the target\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SolveOptions {
  std::string in, out, log, original;
  std::string solver = "exact";
  int max_spins = 24;
  SaOptions sa;
};

int run_solve(const SolveOptions& o, const Globals& g) {
  const SolverKind kind = parse_solver(o.solver);
  const HamiltonianGraph graph = io::read_graph(o.in);
  SolveResult sol;
  io::OrderedJson args;
  args["in"] = o.in;
  args["solver"] = o.solver;
  if (kind == SolverKind::Exact) {
    OracleConfig oc;
    oc.max_free_spins = o.max_spins;
    oc.jobs = g.jobs;
    sol = exact_solve(graph, oc);
  } else {
    SaConfig sc = o.sa.config(g.seed);
    sc.jobs = g.jobs;
    args["sa"] = o.sa.json();
    args["seed"] = g.seed;
    sol = graph.free_spin_count() == 0 ? SolveResult{{}, graph.offset()} : sa_solve(graph, sc);
  }
  io::OrderedJson doc;
  doc["solver"] = o.solver;
  doc["energy"] = sol.energy;
  doc["spins"] = io::assignment_to_json(sol.state);
  std::cout << std::setprecision(17) << "energy " << sol.energy << "\n";
  if (!o.log.empty()) {
    args["log"] = o.log;
    const ContractionLog log = io::log_from_json(io::parse(io::read_text(o.log), "log file " + o.log));
    const SpinAssignment lifted = lift(log, sol.state, graph);
    doc["lifted_spins"] = io::assignment_to_json(lifted);
    if (!o.original.empty()) {
      args["original"] = o.original;
      const double e = energy(io::read_graph(o.original), lifted);
      doc["lifted_energy"] = e;
      std::cout << "lifted energy " << e << "\n";
    }
  }
  io::write_text(o.out, io::dump(doc));
  echo(fs::path(o.out + ".config.json"), "solve", args);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalOptions {
  std::string dataset, out;
  std::vector<std::string> models;
  std::string targets = "0.875,0.75,0.5,0.25";
  std::string reductions;
  std::string mode = "node";
  std::string methods = "granite,random";
  std::string split = "val";
  std::string sizes;
  std::string topology = "all";
  std::string solver = "exact";
  std::string rule = "confidence";
  bool no_original = false;
  bool timing = false;
  int max_spins = 24;
  SaOptions sa;
};

std::string layers_csv(const EvalReport& report, const std::map<std::string, int>& layers_of) {
  using Key = std::tuple<std::string, int, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> opt;
  std::map<Key, std::vector<double>> red;
  for (const auto& r : report.rows) {
    auto it = layers_of.find(r.method);
    if (it == layers_of.end()) continue;
    Key k{r.method, static_cast<int>(r.target.mode), r.target.value};
    if (!opt.count(k) && !red.count(k)) order.push_back(k);
    auto& o = opt[k];
    auto& d = red[k];
    if (!r.available) continue;
    d.push_back(r.reduction);
    if (r.optimality) o.push_back(*r.optimality);
  }
  std::ostringstream out;
  out << std::setprecision(17);
  out << "method,layers,target_mode,target_value,optimality_mean,optimality_se,reduction_mean,instances\n";
  for (const auto& k : order) {
    const auto ms = mean_se(opt[k]);
    const auto rs = mean_se(red[k]);
    out << std::get<0>(k) << ',' << layers_of.at(std::get<0>(k)) << ','
        << target_mode_name(static_cast<TargetMode>(std::get<1>(k))) << ',' << std::get<2>(k) << ',';
    if (ms.count) {
      out << ms.mean << ',' << ms.se;
    } else {
      out << "NaN,NaN";
    }
    out << ',' << rs.mean << ',' << ms.count << '\n';
  }
  return out.str();
}

int run_eval(const EvalOptions& o, const Globals& g) {
  EvalConfig cfg;
  if (o.mode != "node" && o.mode != "edge") throw UsageError("--mode must be 'node' or 'edge'");
  const bool nodes = o.mode == "node";
  std::vector<double> alphas;
  if (!o.reductions.empty()) {
    for (double r : parse_double_list(o.reductions, "--reductions")) alphas.push_back(1.0 - r);
  } else {
    alphas = parse_double_list(o.targets, "--targets");
  }
  for (double a : alphas) {
    cfg.targets.push_back(nodes ? CompressionTarget::node_ratio(a) : CompressionTarget::edge_ratio(a));
    try {
      validate(cfg.targets.back());
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  cfg.solver = parse_solver(o.solver);
  cfg.sa = o.sa.config(0);
  cfg.oracle.max_free_spins = o.max_spins;
  cfg.include_original = !o.no_original;
  cfg.record_runtime = o.timing;
  cfg.seed = g.seed;
  cfg.jobs = g.jobs;
  const SelectionRule rule = parse_rule(o.rule);
  if (o.split != "val" && o.split != "train" && o.split != "all") throw UsageError("--split must be val, train or all");

  std::vector<EvalMethod> methods;
  std::map<std::string, int> layers_of;
  for (const auto& m : split_list(o.methods)) {
    if (m == "granite") {
      if (o.models.empty()) throw UsageError("method 'granite' needs --model (or GRANITE_MODEL)");
      for (std::size_t k = 0; k < o.models.size(); ++k) {
        const GnnParams params = read_checkpoint(o.models[k]);
        std::string name = "granite";
        if (o.models.size() > 1) {
          name += "-L" + std::to_string(params.shape.layers);
          if (layers_of.count(name)) name += "-" + std::to_string(k + 1);
        }
        layers_of[name] = params.shape.layers;
        methods.push_back(granite_method(params, name, rule));
      }
    } else if (m == "random") {
      methods.push_back(random_method());
    } else if (m == "oracle") {
      OracleConfig oc;
      oc.max_free_spins = o.max_spins;
      methods.push_back(oracle_method(oc));
    } else {
      throw UsageError("unknown method '" + m + "' (granite, random, oracle)");
    }
  }

  std::optional<std::vector<int>> sizes;
  if (!o.sizes.empty()) sizes = parse_int_list(o.sizes, "--sizes");
  const auto topologies = parse_topologies(o.topology);
  const Dataset ds = load_dataset(o.dataset);
  std::vector<EvalInstance> instances;
  for (const auto& e : ds.entries) {
    if (o.split == "val" && e.meta.train) continue;
    if (o.split == "train" && !e.meta.train) continue;
    if (sizes && std::find(sizes->begin(), sizes->end(), e.meta.n) == sizes->end()) continue;
    if (std::find(topologies.begin(), topologies.end(), e.meta.topology) == topologies.end()) continue;
    instances.push_back({e.meta.id, topology_name(e.meta.topology), e.meta.n, e.instance.graph});
  }
  if (instances.empty()) throw std::invalid_argument("no dataset instances match the selection");

  const EvalReport report = evaluate(instances, methods, cfg);
  const fs::path out(o.out);
  io::write_text(out / "results.csv", results_csv(report.aggregates, o.timing));
  io::write_text(out / "rows.csv", rows_csv(report.rows));
  if (o.models.size() > 1) io::write_text(out / "layers.csv", layers_csv(report, layers_of));

  io::OrderedJson args;
  args["dataset"] = o.dataset;
  args["models"] = o.models;
  io::OrderedJson targets = io::OrderedJson::array();
  for (const auto& t : cfg.targets) targets.push_back(target_json(t));
  args["targets"] = targets;
  args["methods"] = o.methods;
  args["split"] = o.split;
  args["sizes"] = o.sizes;
  args["topology"] = o.topology;
  args["solver"] = o.solver;
  if (cfg.solver == SolverKind::Annealing) args["sa"] = o.sa.json();
  args["rule"] = o.rule;
  args["seed"] = g.seed;
  args["jobs"] = g.jobs;
  echo(out / "run_config.json", "eval", args);

  std::cout << "evaluated " << instances.size() << " instances\n";
  std::cout << std::fixed << std::setprecision(2);
  for (const auto& a : report.aggregates) {
    std::cout << std::left << std::setw(4) << a.topology << " n=" << std::setw(4) << a.n << std::setw(15)
              << target_mode_name(a.target.mode) << std::setw(7) << a.target.value << std::setw(14) << a.method;
    if (a.optimality.count) {
      std::cout << " optimality " << a.optimality.mean << " +- " << a.optimality.se;
    } else {
      std::cout << " optimality n/a";
    }
    std::cout << "  reduction " << a.reduction_mean;
    if (a.degenerate) std::cout << "  (" << a.degenerate << " degenerate)";
    if (a.unavailable) std::cout << "  (" << a.unavailable << " unavailable)";
    std::cout << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct GradCheckOptions {
  int graphs = 5;
  int points = 10;
  int n = 8;
  std::string topology = "er";
  double degree = 3.0;
  int layers = 3;
  int node_dim = 16, edge_dim = 16, hidden = 32;
  double lambda = 0.5, temperature = 1.0;
  double step = 1e-5;
  std::size_t per_block = 0;
  double tolerance = 1e-4;
  std::string out;
};

int run_grad_check(const GradCheckOptions& o, const Globals& g) {
  const auto topo = parse_topologies(o.topology);
  if (topo.size() != 1) throw UsageError("--topology takes one name");
  if (o.n < 2) throw UsageError("--n must be >= 2");
  const GnnShape shape{o.layers, o.node_dim, o.edge_dim, o.hidden};
  const LossConfig loss{o.lambda, o.temperature, false, 2};
  validate(loss);
  std::vector<GraphSample> samples;
  for (std::uint64_t k = 0; samples.size() < static_cast<std::size_t>(o.graphs); ++k) {
    if (k > 1000) throw std::runtime_error("could not draw graphs with non-neutral edges");
    const auto param = degree_param_for(topo[0], o.n, o.degree, 0.2);
    const auto graph = gen_instance(topo[0], o.n, param, derive_seed(g.seed, {k}));
    auto s = make_sample(graph, label_edges(graph));
    if (s.active_count() > 0) samples.push_back(std::move(s));
  }
  double worst = 0.0;
  std::string worst_where;
  std::size_t checked = 0, skipped = 0;
  for (int pt = 0; pt < o.points; ++pt) {
    const GnnParams params = init_params(shape, derive_seed(g.seed, {1000, static_cast<std::uint64_t>(pt)}));
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const GraphSample* batch[] = {&samples[s]};
      const auto rep = gradient_check(params, batch, loss, o.step, o.per_block, derive_seed(g.seed, {2000, static_cast<std::uint64_t>(pt), s}));
      checked += rep.checked;
      skipped += rep.skipped_kinks;
      if (rep.max_relative_error > worst) {
        worst = rep.max_relative_error;
        worst_where = "point " + std::to_string(pt) + " graph " + std::to_string(s) + " " + rep.worst_block;
      }
    }
  }
  std::cout << std::setprecision(3) << "max relative error " << worst << " over " << checked << " components ("
            << skipped << " skipped at activation kinks)";
  if (!worst_where.empty()) std::cout << ", worst at " << worst_where;
  std::cout << "\n";
  if (!o.out.empty()) {
    io::OrderedJson doc;
    doc["max_relative_error"] = worst;
    doc["worst"] = worst_where;
    doc["checked"] = checked;
    doc["skipped_kinks"] = skipped;
    doc["tolerance"] = o.tolerance;
    io::write_text(o.out, io::dump(doc));
  }
  if (!(worst < o.tolerance)) {
    std::cerr << "error: gradient check exceeded tolerance " << o.tolerance << "\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SatOptions {
  std::string in, out, gadget, check;
  int max_spins = 24;
};

int run_sat2ising(const SatOptions& o, const Globals&) {
  CnfFormula f = parse_dimacs(io::read_text(o.in));
  if (!o.gadget.empty()) {
    const auto [i, j] = parse_pair(o.gadget, "--gadget");
    f = equality_gadget(f, i, j);
  }
  const HamiltonianGraph g = cnf_to_ising(f);
  io::write_graph(o.out, g);
  io::OrderedJson args;
  args["in"] = o.in;
  args["gadget"] = o.gadget;
  args["variables"] = f.num_vars;
  args["clauses"] = f.clauses.size();
  args["auxiliary_ids"] = io::OrderedJson::array({f.num_vars + 1, f.num_vars + static_cast<int>(f.clauses.size())});
  echo(fs::path(o.out + ".config.json"), "sat2ising", args);
  std::cout << f.num_vars << " variables, " << f.clauses.size() << " clauses -> " << g.free_spin_count() << " spins, "
            << g.edge_count() << " edges\n";
  if (!o.check.empty()) {
    const auto [i, j] = parse_pair(o.check, "--check");
    const AllSatEqual answer = check_all_sat_equal(f, i, j);
    std::cout << "all satisfying assignments have x" << i << " == x" << j << ": " << to_string(answer) << "\n";
    OracleConfig oc;
    oc.max_free_spins = o.max_spins;
    const auto gs = enumerate_ground_states(g, oc);
    std::cout << std::setprecision(17) << "ground energy " << gs.e_min << " ("
              << (gs.e_min < 0.5 ? "satisfiable" : "unsatisfiable") << "), spins equal in all ground states: "
              << (ground_states_equal(g, i, j, oc) ? "yes" : "no") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"granite: learned Ising model compression"};
  app.require_subcommand(1);
  Globals globals;
  app.add_option("--seed", globals.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--jobs", globals.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate and label a dataset");
  gen_cmd->add_option("--topology", gen.topology, "er, ba, ws, a comma list or all")->capture_default_str();
  gen_cmd->add_option("--sizes", gen.sizes, "Spin counts, e.g. 2..12 or 4,8")->capture_default_str();
  gen_cmd->add_option("--degrees", gen.degrees, "Average degrees (default: grid over 1..n-1)");
  gen_cmd->add_option("--per-config", gen.per_config, "Instances per (topology, n, degree)")->capture_default_str();
  gen_cmd->add_option("--split", gen.split, "Training fraction")->capture_default_str();
  gen_cmd->add_option("--ws-beta", gen.ws_beta, "Watts-Strogatz rewiring probability")->capture_default_str();
  gen_cmd->add_option("--weight-lo", gen.weight_lo)->capture_default_str();
  gen_cmd->add_option("--weight-hi", gen.weight_hi)->capture_default_str();
  gen_cmd->add_option("--max-spins", gen.max_spins, "Exhaustive search cap")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Dataset directory")->required();

  LabelOptions label;
  auto* label_cmd = app.add_subcommand("label", "Label the edges of one graph by exhaustive search");
  label_cmd->add_option("--in", label.in)->required();
  label_cmd->add_option("--out", label.out)->required();
  label_cmd->add_option("--max-spins", label.max_spins)->capture_default_str();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train the edge classifier");
  train_cmd->add_option("--dataset", tr.dataset)->envname("GRANITE_DATASET")->required();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--epochs", tr.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tr.lr)->capture_default_str();
  train_cmd->add_option("--lambda", tr.lambda, "Confidence weighting strength")->capture_default_str();
  train_cmd->add_option("--temperature", tr.temperature)->capture_default_str();
  train_cmd->add_flag("--power-weighting", tr.power_weighting, "Use |yhat-0.5|^p weights instead of softmax");
  train_cmd->add_option("--power", tr.power)->capture_default_str();
  train_cmd->add_option("--layers", tr.layers)->capture_default_str();
  train_cmd->add_option("--node-dim", tr.node_dim)->capture_default_str();
  train_cmd->add_option("--edge-dim", tr.edge_dim)->capture_default_str();
  train_cmd->add_option("--hidden", tr.hidden)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.batch_size)->capture_default_str();
  train_cmd->add_option("--sizes", tr.sizes, "Only use instances of these sizes");

  CompressOptions comp;
  auto* comp_cmd = app.add_subcommand("compress", "Compress a graph with a trained model");
  comp_cmd->add_option("--model", comp.model)->envname("GRANITE_MODEL");
  comp_cmd->add_flag("--oracle-scores", comp.oracle_scores, "Score edges by exhaustive ground-state labels");
  comp_cmd->add_option("--in", comp.in)->required();
  comp_cmd->add_option("--out", comp.out, "Output directory")->required();
  comp_cmd->add_option("--rule", comp.rule, "confidence or entropy")->capture_default_str();
  comp.target.add(comp_cmd);

  CompressOptions base;
  auto* base_cmd = app.add_subcommand("baseline", "Compress with random contractions");
  base_cmd->add_option("--in", base.in)->required();
  base_cmd->add_option("--out", base.out, "Output directory")->required();
  base.target.add(base_cmd);

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Find a low-energy state");
  solve_cmd->add_option("--in", solve.in)->required();
  solve_cmd->add_option("--out", solve.out, "Solution file")->required();
  solve_cmd->add_option("--solver", solve.solver, "exact or sa")->capture_default_str();
  solve_cmd->add_option("--log", solve.log, "Contraction log to lift the solution through");
  solve_cmd->add_option("--original", solve.original, "Original graph to score the lifted solution on");
  solve_cmd->add_option("--max-spins", solve.max_spins)->capture_default_str();
  solve.sa.add(solve_cmd);

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compress, solve and score a dataset split");
  eval_cmd->add_option("--dataset", ev.dataset)->envname("GRANITE_DATASET")->required();
  eval_cmd->add_option("--model", ev.models, "Checkpoint; repeat to compare models")->envname("GRANITE_MODEL");
  eval_cmd->add_option("--targets", ev.targets, "Fractions kept")->capture_default_str();
  eval_cmd->add_option("--reductions", ev.reductions, "Fractions removed (overrides --targets)");
  eval_cmd->add_option("--mode", ev.mode, "node or edge")->capture_default_str();
  eval_cmd->add_option("--methods", ev.methods, "granite, random, oracle")->capture_default_str();
  eval_cmd->add_option("--split", ev.split, "val, train or all")->capture_default_str();
  eval_cmd->add_option("--sizes", ev.sizes, "Only evaluate these sizes");
  eval_cmd->add_option("--topology", ev.topology)->capture_default_str();
  eval_cmd->add_option("--solver", ev.solver, "exact or sa")->capture_default_str();
  eval_cmd->add_option("--rule", ev.rule)->capture_default_str();
  eval_cmd->add_flag("--no-original", ev.no_original, "Skip the uncompressed reference rows");
  eval_cmd->add_flag("--timing", ev.timing, "Fill the runtime_ms column");
  eval_cmd->add_option("--max-spins", ev.max_spins)->capture_default_str();
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();
  ev.sa.add(eval_cmd);

  GradCheckOptions gc;
  auto* gc_cmd = app.add_subcommand("grad-check", "Compare gradients with finite differences");
  gc_cmd->add_option("--graphs", gc.graphs)->capture_default_str();
  gc_cmd->add_option("--points", gc.points, "Random parameter points")->capture_default_str();
  gc_cmd->add_option("--n", gc.n)->capture_default_str();
  gc_cmd->add_option("--topology", gc.topology)->capture_default_str();
  gc_cmd->add_option("--degree", gc.degree)->capture_default_str();
  gc_cmd->add_option("--layers", gc.layers)->capture_default_str();
  gc_cmd->add_option("--node-dim", gc.node_dim)->capture_default_str();
  gc_cmd->add_option("--edge-dim", gc.edge_dim)->capture_default_str();
  gc_cmd->add_option("--hidden", gc.hidden)->capture_default_str();
  gc_cmd->add_option("--lambda", gc.lambda)->capture_default_str();
  gc_cmd->add_option("--temperature", gc.temperature)->capture_default_str();
  gc_cmd->add_option("--step", gc.step)->capture_default_str();
  gc_cmd->add_option("--per-block", gc.per_block, "Components sampled per tensor (0: all)")->capture_default_str();
  gc_cmd->add_option("--tolerance", gc.tolerance)->capture_default_str();
  gc_cmd->add_option("--out", gc.out, "Report file");

  SatOptions sat;
  auto* sat_cmd = app.add_subcommand("sat2ising", "Encode a 3-SAT formula (DIMACS) as an Ising model");
  sat_cmd->add_option("--in", sat.in)->required();
  sat_cmd->add_option("--out", sat.out)->required();
  sat_cmd->add_option("--gadget", sat.gadget, "Conjoin x_i <-> x_j first, as 'i,j'");
  sat_cmd->add_option("--check", sat.check, "Compare all-SAT equality of 'i,j' with ground states");
  sat_cmd->add_option("--max-spins", sat.max_spins)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd) return run_gen(gen, globals);
    if (*label_cmd) return run_label(label, globals);
    if (*train_cmd) return run_train(tr, globals);
    if (*comp_cmd) return run_compress(comp, globals, false);
    if (*base_cmd) return run_compress(base, globals, true);
    if (*solve_cmd) return run_solve(solve, globals);
    if (*eval_cmd) return run_eval(ev, globals);
    if (*gc_cmd) return run_grad_check(gc, globals);
    if (*sat_cmd) return run_sat2ising(sat, globals);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
