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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "granite/gnn.hpp"
#include "granite/io.hpp"
#include "granite/random.hpp"

namespace granite {

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs = 300;
  LossConfig loss;
  GnnShape shape;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
};

inline void validate(const TrainConfig& c) {
  validate(c.loss);
  if (!(c.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (c.max_epochs < 1) throw std::invalid_argument("max epochs must be >= 1");
  if (c.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0))
    throw std::invalid_argument("moment decay rates must lie in [0, 1)");
  if (!(c.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

/// First/second-moment adaptive optimizer with bias correction.
class Adam {
 public:
  Adam(const GnnParams& like, double lr, double beta1, double beta2, double eps)
      : m_(like.zeros_like()), v_(like.zeros_like()), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(GnnParams& params, const GnnParams& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    std::vector<std::vector<double>*> p, m, v;
    std::vector<const std::vector<double>*> g;
    params.for_each_block([&](const std::string&, std::vector<double>& x) { p.push_back(&x); });
    m_.for_each_block([&](const std::string&, std::vector<double>& x) { m.push_back(&x); });
    v_.for_each_block([&](const std::string&, std::vector<double>& x) { v.push_back(&x); });
    grad.for_each_block([&](const std::string&, const std::vector<double>& x) { g.push_back(&x); });
    for (std::size_t b = 0; b < p.size(); ++b) {
      auto& pb = *p[b];
      auto& mb = *m[b];
      auto& vb = *v[b];
      const auto& gb = *g[b];
      for (std::size_t i = 0; i < pb.size(); ++i) {
        mb[i] = beta1_ * mb[i] + (1.0 - beta1_) * gb[i];
        vb[i] = beta2_ * vb[i] + (1.0 - beta2_) * gb[i] * gb[i];
        pb[i] -= lr_ * (mb[i] / c1) / (std::sqrt(vb[i] / c2) + eps_);
      }
    }
  }

 private:
  GnnParams m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  GnnParams params;  // best validation checkpoint
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::vector<EpochStats> curve;
  std::size_t skipped_train = 0;  // all-neutral samples
  std::size_t skipped_val = 0;
};

struct Evaluation {
  std::optional<double> mean_loss;
  double accuracy = 0.0;  // over non-neutral edges, yhat >= 0.5 means flip-merge
  std::size_t edges = 0;
  std::size_t skipped = 0;
};

inline Evaluation evaluate_samples(const GnnParams& p, std::span<const GraphSample> samples, const LossConfig& cfg,
                                   int jobs = 1) {
  struct Slot {
    std::optional<double> loss;
    std::size_t correct = 0, edges = 0;
  };
  std::vector<Slot> slots(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    const auto& s = samples[i];
    const auto t = forward_trace(p, s.graph);
    if (auto terms = hybrid_loss_from_logits(t.logits, s.y, s.active, cfg)) slots[i].loss = terms->loss;
    for (std::size_t e = 0; e < s.y.size(); ++e) {
      if (!s.active[e]) continue;
      slots[i].edges += 1;
      slots[i].correct += ((t.yhat[e] >= 0.5) == (s.y[e] > 0.5)) ? 1 : 0;
    }
  });
  Evaluation out;
  double total = 0.0;
  std::size_t used = 0, correct = 0;
  for (const auto& s : slots) {
    if (s.loss) {
      total += *s.loss;
      ++used;
    } else {
      ++out.skipped;
    }
    correct += s.correct;
    out.edges += s.edges;
  }
  if (used > 0) out.mean_loss = total / static_cast<double>(used);
  out.accuracy = out.edges ? static_cast<double>(correct) / static_cast<double>(out.edges) : 1.0;
  return out;
}

/// Trains from seeded initial parameters. One optimizer step per batch,
/// batches drawn from a seeded shuffle each epoch; the returned parameters
/// are those with the lowest validation loss seen after any epoch.
inline TrainResult train(std::span<const GraphSample> train_set, std::span<const GraphSample> val_set,
                         const TrainConfig& cfg) {
  validate(cfg);
  if (train_set.empty() || val_set.empty()) throw std::invalid_argument("training needs non-empty train and validation splits");
  GnnParams params = init_params(cfg.shape, derive_seed(cfg.seed, {1}));
  Adam adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  Rng rng(derive_seed(cfg.seed, {2}));

  TrainResult result;
  result.params = params;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    std::size_t used = 0, skipped = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<const GraphSample*> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size)); ++k)
        batch.push_back(&train_set[order[k]]);
      BatchGradient bg = gradients(params, batch, cfg.loss, cfg.jobs);
      skipped += bg.skipped;
      if (!bg.loss) continue;
      if (!std::isfinite(*bg.loss)) throw std::runtime_error("training diverged (non-finite loss) in epoch " + std::to_string(epoch));
      total += *bg.loss * static_cast<double>(bg.used);
      used += bg.used;
      adam.step(params, bg.grad);
    }
    const Evaluation val = evaluate_samples(params, val_set, cfg.loss, cfg.jobs);
    if (used == 0 || !val.mean_loss) throw std::invalid_argument("every training or validation sample is all-neutral");
    if (!std::isfinite(*val.mean_loss)) throw std::runtime_error("training diverged (non-finite loss) in epoch " + std::to_string(epoch));
    EpochStats st{epoch, total / static_cast<double>(used), *val.mean_loss, val.accuracy};
    result.curve.push_back(st);
    result.skipped_train = skipped;
    result.skipped_val = val.skipped;
    if (st.val_loss < result.best_val_loss) {
      result.best_val_loss = st.val_loss;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

inline std::string curve_csv(const std::vector<EpochStats>& curve) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "epoch,train_loss,val_loss,val_accuracy\n";
  for (const auto& s : curve) out << s.epoch << ',' << s.train_loss << ',' << s.val_loss << ',' << s.val_accuracy << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Checkpoints

inline io::OrderedJson train_config_to_json(const TrainConfig& c) {
  io::OrderedJson doc;
  doc["learning_rate"] = c.learning_rate;
  doc["max_epochs"] = c.max_epochs;
  doc["lambda"] = c.loss.lambda;
  doc["temperature"] = c.loss.temperature;
  doc["power_weighting"] = c.loss.power_weighting;
  doc["power"] = c.loss.power;
  doc["layers"] = c.shape.layers;
  doc["node_dim"] = c.shape.node_dim;
  doc["edge_dim"] = c.shape.edge_dim;
  doc["hidden"] = c.shape.hidden;
  doc["beta1"] = c.beta1;
  doc["beta2"] = c.beta2;
  doc["epsilon"] = c.epsilon;
  doc["batch_size"] = c.batch_size;
  doc["seed"] = c.seed;
  return doc;
}

inline io::OrderedJson checkpoint_to_json(const GnnParams& p, const io::OrderedJson& config_echo,
                                          std::uint64_t manifest_hash) {
  io::OrderedJson doc;
  doc["format"] = "granite-gnn-v1";
  doc["layers"] = p.shape.layers;
  doc["node_dims"] = io::OrderedJson::array();
  doc["edge_dims"] = io::OrderedJson::array();
  for (int l = 0; l <= p.shape.layers; ++l) {
    doc["node_dims"].push_back(p.shape.node_dim_at(l));
    doc["edge_dims"].push_back(p.shape.edge_dim_at(l));
  }
  doc["hidden"] = p.shape.hidden;
  io::OrderedJson tensors;
  p.for_each_block([&](const std::string& name, const std::vector<double>& v) { tensors[name] = v; });
  doc["params"] = std::move(tensors);
  doc["config"] = config_echo;
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << manifest_hash;
  doc["manifest_hash"] = hash.str();
  return doc;
}

inline GnnParams checkpoint_from_json(const io::Json& doc) {
  try {
    GnnShape shape;
    shape.layers = doc.at("layers").get<int>();
    const auto nd = doc.at("node_dims").get<std::vector<int>>();
    const auto ed = doc.at("edge_dims").get<std::vector<int>>();
    if (nd.size() != static_cast<std::size_t>(shape.layers + 1) || ed.size() != nd.size())
      throw std::invalid_argument("checkpoint dims do not match its layer count");
    shape.node_dim = nd.back();
    shape.edge_dim = ed.back();
    shape.hidden = doc.at("hidden").get<int>();
    GnnParams p = zero_params(shape);
    const auto& tensors = doc.at("params");
    p.for_each_block([&](const std::string& name, std::vector<double>& v) {
      const auto values = tensors.at(name).get<std::vector<double>>();
      if (values.size() != v.size()) throw std::invalid_argument("tensor " + name + " has the wrong size");
      v = values;
    });
    validate(p);
    return p;
  } catch (const io::Json::exception& e) {
    throw std::invalid_argument(std::string("malformed checkpoint: ") + e.what());
  }
}

inline GnnParams read_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(io::parse(io::read_text(path), "checkpoint " + path.string()));
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_block;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;  // perturbation crossed a ReLU or |.| kink
};

namespace detail {

// Signs of every ReLU pre-activation and of yhat - 0.5; the loss is smooth
// between two parameter points that share a pattern.
inline std::vector<char> activation_pattern(const GnnParams& p, std::span<const GraphSample* const> batch) {
  std::vector<char> out;
  for (const GraphSample* s : batch) {
    const auto t = forward_trace(p, s->graph);
    for (const auto* traces : {&t.node_mlp, &t.edge_mlp})
      for (const auto& tr : *traces)
        for (std::size_t k = 0; k + 1 < tr.pre.size(); ++k)
          for (double x : tr.pre[k]) out.push_back(x > 0.0 ? 1 : 0);
    for (double y : t.yhat) out.push_back(y > 0.5 ? 1 : (y < 0.5 ? 2 : 0));
  }
  return out;
}

inline double batch_loss(const GnnParams& p, std::span<const GraphSample* const> batch, const LossConfig& cfg) {
  double total = 0.0;
  std::size_t used = 0;
  for (const GraphSample* s : batch)
    if (auto l = sample_loss(p, *s, cfg)) {
      total += *l;
      ++used;
    }
  return used ? total / static_cast<double>(used) : 0.0;
}

}  // namespace detail

/// Compares reverse-mode gradients against central differences. With
/// `per_block` > 0 only that many randomly chosen components of each tensor
/// are checked; 0 checks every component. Relative error is
/// |g - fd| / max(|g|, |fd|, floor max(1, |loss|)). Rounding in the two loss
/// evaluations is about 10 ulp of the loss, which at step 1e-5 puts central
/// differences within ~1e-9 |loss| of the truth; components smaller than the
/// floor are therefore held to an absolute bound instead.
inline GradCheckReport gradient_check(const GnnParams& p, std::span<const GraphSample* const> batch, const LossConfig& cfg,
                                      double step = 1e-5, std::size_t per_block = 0, std::uint64_t seed = 0,
                                      double floor = 1e-5) {
  const BatchGradient analytic = gradients(p, batch, cfg);
  const double scaled_floor = floor * std::max(1.0, std::abs(analytic.loss.value_or(0.0)));
  const auto base_pattern = detail::activation_pattern(p, batch);
  GradCheckReport report;
  GnnParams probe = p;
  std::vector<std::pair<std::string, std::vector<double>*>> blocks;
  probe.for_each_block([&](const std::string& name, std::vector<double>& v) { blocks.emplace_back(name, &v); });
  std::vector<const std::vector<double>*> grads;
  analytic.grad.for_each_block([&](const std::string&, const std::vector<double>& v) { grads.push_back(&v); });
  Rng rng(seed);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& values = *blocks[b].second;
    std::vector<std::size_t> idx;
    if (per_block == 0 || per_block >= values.size()) {
      for (std::size_t i = 0; i < values.size(); ++i) idx.push_back(i);
    } else {
      for (std::size_t k = 0; k < per_block; ++k) idx.push_back(static_cast<std::size_t>(rng.below(values.size())));
    }
    for (std::size_t i : idx) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = detail::batch_loss(probe, batch, cfg);
      const bool same_up = detail::activation_pattern(probe, batch) == base_pattern;
      values[i] = saved - step;
      const double down = detail::batch_loss(probe, batch, cfg);
      const bool same_down = detail::activation_pattern(probe, batch) == base_pattern;
      values[i] = saved;
      if (!same_up || !same_down) {
        ++report.skipped_kinks;
        continue;
      }
      const double fd = (up - down) / (2.0 * step);
      const double g = (*grads[b])[i];
      const double rel = std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), scaled_floor});
      ++report.checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_block = blocks[b].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace granite
