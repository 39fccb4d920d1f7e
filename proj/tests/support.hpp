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

// Reference implementations used only by the tests. They are deliberately
// naive: plain loops over every assignment, scored with energy().

#include <sys/wait.h>
#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "granite/ising.hpp"

namespace granite::testing {

inline SpinAssignment assignment_from_bits(const std::vector<NodeId>& ids, std::uint64_t bits) {
  SpinAssignment s;
  for (std::size_t k = 0; k < ids.size(); ++k) s.set(ids[k], ((bits >> k) & 1U) ? -1 : 1);
  return s;
}

inline std::vector<SpinAssignment> all_assignments(const HamiltonianGraph& g) {
  const auto ids = g.free_nodes();
  std::vector<SpinAssignment> out;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << ids.size()); ++b) out.push_back(assignment_from_bits(ids, b));
  return out;
}

inline double brute_min(const HamiltonianGraph& g) {
  double best = 1e300;
  for (const auto& s : all_assignments(g)) best = std::min(best, energy(g, s));
  return best;
}

inline std::vector<SpinAssignment> brute_ground_states(const HamiltonianGraph& g, double tol = 1e-12) {
  const double e_min = brute_min(g);
  std::vector<SpinAssignment> out;
  for (const auto& s : all_assignments(g))
    if (energy(g, s) <= e_min + tol) out.push_back(s);
  return out;
}

// Dense random model on spins 1..n; each pair coupled with probability
// `density`, each bias present with probability `bias_density`.
inline HamiltonianGraph random_model(int n, double density, double bias_density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(-5.0, 5.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> h(static_cast<std::size_t>(n), 0.0);
  for (auto& x : h)
    if (u(rng) < bias_density) x = w(rng);
  std::vector<Coupling> j;
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b)
      if (u(rng) < density) j.push_back({a, b, w(rng)});
  return build_graph(h, j);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("granite_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct CommandResult {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

/// Runs a shell command line, capturing its combined output.
inline CommandResult run_command(const std::string& cmdline) {
  static int counter = 0;
  const auto capture = std::filesystem::temp_directory_path() /
                       ("granite_cmd_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".txt");
  const int status = std::system((cmdline + " > '" + capture.string() + "' 2>&1").c_str());
  CommandResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  std::ostringstream text;
  text << in.rdbuf();
  r.output = text.str();
  std::filesystem::remove(capture);
  return r;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace granite::testing
