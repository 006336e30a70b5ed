// Copyright 2026 The LGNSDE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lgnsde/graph.hpp"
#include "lgnsde/tensor.hpp"

namespace lgnsde::testing {

inline std::vector<double> uniform_values(std::size_t n, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Tensor random_tensor(Shape s, std::uint64_t seed, bool param = false) {
  auto v = uniform_values(s.size(), seed);
  return param ? Tensor::parameter(s, std::move(v)) : Tensor::from_values(s, std::move(v));
}

// Largest |analytic - central difference| / max(|a|, |n|, floor) over every
// entry of every leaf.
inline double max_gradient_error(std::vector<Tensor> leaves, const std::function<Tensor()>& loss,
                                 double h = 1e-5, double floor = 1e-6) {
  for (auto& p : leaves) p.zero_grad();
  backward(loss());
  double worst = 0.0;
  for (auto& p : leaves) {
    std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + h;
      const double up = loss().item();
      values[i] = keep - h;
      const double down = loss().item();
      values[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Random graph with Bernoulli(p) edges, Gaussian features and labels i % C.
inline Graph random_graph(std::size_t n, std::size_t d, int classes, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(p);
  std::vector<double> x(n * d);
  for (auto& v : x) v = normal(rng);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (coin(rng)) edges.emplace_back(u, v);
  Graph g = make_graph(n, d, std::move(x), std::move(labels), classes, edges);
  for (std::size_t i = 0; i < n; ++i) (i % 2 == 0 ? g.train_mask : g.test_mask)[i] = 1;
  return g;
}

// Node i of the result is node perm[i] of `g`.
inline Graph permute_graph(const Graph& g, const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inverse(g.n);
  for (std::size_t i = 0; i < g.n; ++i) inverse[perm[i]] = i;
  std::vector<double> x(g.n * g.d_in);
  std::vector<int> labels(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t k = 0; k < g.d_in; ++k) x[i * g.d_in + k] = g.features.at(perm[i], k);
    labels[i] = g.labels[perm[i]];
  }
  std::vector<Edge> edges;
  for (auto [u, v] : g.edges) edges.emplace_back(inverse[u], inverse[v]);
  Graph out = make_graph(g.n, g.d_in, std::move(x), std::move(labels), g.num_classes, edges);
  for (std::size_t i = 0; i < g.n; ++i) {
    out.train_mask[i] = g.train_mask[perm[i]];
    out.val_mask[i] = g.val_mask[perm[i]];
    out.test_mask[i] = g.test_mask[perm[i]];
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lgnsde_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lgnsde::testing
