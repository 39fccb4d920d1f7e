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

// JSON documents shared by the tools.
//
// Graph document:
//   {"n": int, "h": [h_1..h_n], "J": [[i, j, w], ...], "offset": real}
// with 1-based spin ids and i < j in every coupling. A graph whose free
// nodes are not exactly 1..n (the result of contractions) also carries
// "nodes": [ids...] after "offset". Writers emit keys in this order; readers
// accept any order.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "granite/ising.hpp"

namespace granite::io {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline Json parse(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw std::runtime_error("malformed " + what + ": " + e.what());
  }
}

inline std::string dump(const OrderedJson& doc) { return doc.dump(1) + "\n"; }

inline OrderedJson graph_to_json(const HamiltonianGraph& g) {
  const auto free = g.free_nodes();
  const NodeId n = free.empty() ? 0 : free.back();
  bool contiguous = static_cast<NodeId>(free.size()) == n;

  OrderedJson h = OrderedJson::array();
  for (NodeId v = 1; v <= n; ++v) h.push_back(g.weight(kAuxNode, v).value_or(0.0));
  OrderedJson couplings = OrderedJson::array();
  for (const auto& [e, w] : g.edges())
    if (e.lo != kAuxNode) couplings.push_back(OrderedJson::array({e.lo, e.hi, w}));

  OrderedJson doc;
  doc["n"] = n;
  doc["h"] = std::move(h);
  doc["J"] = std::move(couplings);
  doc["offset"] = g.offset();
  if (!contiguous) doc["nodes"] = free;
  return doc;
}

inline HamiltonianGraph graph_from_json(const Json& doc) {
  try {
    const auto n = doc.at("n").get<NodeId>();
    if (n < 0) throw std::invalid_argument("negative spin count");
    const auto& h = doc.at("h");
    if (!h.is_array() || static_cast<NodeId>(h.size()) != n)
      throw std::invalid_argument("\"h\" must be an array of length n");

    std::set<NodeId> free;
    if (doc.contains("nodes")) {
      for (const auto& v : doc.at("nodes")) {
        const auto id = v.get<NodeId>();
        if (id < 1 || id > n) throw std::invalid_argument("node id " + std::to_string(id) + " outside 1..n");
        free.insert(id);
      }
    } else {
      for (NodeId v = 1; v <= n; ++v) free.insert(v);
    }

    HamiltonianGraph g;
    for (NodeId v : free) g.add_node(v);
    for (NodeId v = 1; v <= n; ++v) {
      const double hv = h[static_cast<std::size_t>(v - 1)].get<double>();
      if (hv == 0.0) continue;
      if (!free.count(v)) throw std::invalid_argument("bias on absent node " + std::to_string(v));
      g.accumulate(kAuxNode, v, hv);
    }
    std::set<EdgeKey> seen;
    for (const auto& t : doc.at("J")) {
      if (!t.is_array() || t.size() != 3) throw std::invalid_argument("coupling entries must be [i, j, w]");
      const auto i = t[0].get<NodeId>();
      const auto j = t[1].get<NodeId>();
      const double w = t[2].get<double>();
      const std::string name = "[" + std::to_string(i) + ", " + std::to_string(j) + "]";
      if (!(i < j)) throw std::invalid_argument("coupling " + name + " must have i < j");
      if (!free.count(i) || !free.count(j)) throw std::invalid_argument("coupling " + name + " references an absent node");
      if (!seen.insert(EdgeKey::of(i, j)).second) throw std::invalid_argument("duplicate coupling " + name);
      if (w == 0.0) continue;
      g.accumulate(i, j, w);
    }
    g.set_offset(doc.value("offset", 0.0));
    return g;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed graph document: ") + e.what());
  }
}

inline HamiltonianGraph read_graph(const std::filesystem::path& path) {
  return graph_from_json(parse(read_text(path), "graph file " + path.string()));
}

inline void write_graph(const std::filesystem::path& path, const HamiltonianGraph& g) {
  write_text(path, dump(graph_to_json(g)));
}

inline OrderedJson log_to_json(const ContractionLog& log) {
  OrderedJson records = OrderedJson::array();
  for (const auto& r : log.records)
    records.push_back(OrderedJson::array({r.kept, r.removed, r.flipped, r.absorbed_offset}));
  OrderedJson doc;
  doc["records"] = std::move(records);
  return doc;
}

inline ContractionLog log_from_json(const Json& doc) {
  try {
    ContractionLog log;
    for (const auto& t : doc.at("records")) {
      if (!t.is_array() || t.size() != 4)
        throw std::invalid_argument("log records must be [kept, removed, flipped, absorbed_offset]");
      ContractionRecord r{t[0].get<NodeId>(), t[1].get<NodeId>(), t[2].get<bool>(), t[3].get<double>()};
      if (r.kept == r.removed || r.removed == kAuxNode) throw std::invalid_argument("malformed contraction record");
      log.records.push_back(r);
    }
    return log;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("malformed log document: ") + e.what());
  }
}

inline OrderedJson assignment_to_json(const SpinAssignment& s) {
  OrderedJson spins = OrderedJson::array();
  for (const auto& [v, x] : s.values()) spins.push_back(OrderedJson::array({v, static_cast<int>(x)}));
  return spins;
}

inline SpinAssignment assignment_from_json(const Json& spins) {
  SpinAssignment s;
  for (const auto& t : spins) s.set(t.at(0).get<NodeId>(), t.at(1).get<int>());
  return s;
}

}  // namespace granite::io
