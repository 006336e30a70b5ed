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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lgnsde/sparse.hpp"
#include "lgnsde/tensor.hpp"

namespace lgnsde {

using Edge = std::pair<std::size_t, std::size_t>;

// Node-classification graph. Immutable once built; `norm_adj` is the
// self-looped symmetric normalisation of `edges`.
struct Graph {
  std::size_t n = 0;
  std::size_t d_in = 0;
  Tensor features;  // n x d_in, constant
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<Edge> edges;  // undirected, u < v, no duplicates
  SparseMatrix norm_adj;
  Mask train_mask;
  Mask val_mask;
  Mask test_mask;
  std::vector<std::string> class_names;  // optional, from raw label strings
};

// D^{-1/2} (A + I) D^{-1/2} for an undirected edge list.
SparseMatrix normalized_adjacency(const std::vector<Edge>& edges, std::size_t n);

// Builds a graph after canonicalising edges (u < v, self-edges and
// duplicates removed). Masks start empty (all zero).
Graph make_graph(std::size_t n, std::size_t d_in, std::vector<double> features, std::vector<int> labels,
                 int num_classes, const std::vector<Edge>& edges);

// Generic bundle directory: nodes.tsv, edges.tsv, optional splits.json.
Graph load_bundle(const std::filesystem::path& dir);
void save_bundle(const Graph& graph, const std::filesystem::path& dir);

struct CoraLoad {
  Graph graph;
  std::size_t dropped_citations = 0;  // citations naming an unknown paper id
};

// Raw citation-network files: `<id>\t<binary features...>\t<label>` and
// `<cited>\t<citing>`.
CoraLoad load_cora_raw(const std::filesystem::path& content_path, const std::filesystem::path& cites_path);

struct SbmParams {
  int classes = 3;
  int nodes_per_class = 40;
  double p_in = 0.2;
  double p_out = 0.02;
  std::size_t feature_dim = 16;
  double feature_gap = 2.0;
  std::uint64_t seed = 0;
};

// Planted-partition graph with class-dependent Gaussian features: class c
// has mean feature_gap at coordinate (c mod feature_dim), unit variance.
Graph sbm_generate(const SbmParams& params);

// Fixed per-class train counts plus fixed-size val/test drawn from the rest.
struct PerClassCounts {
  int train_per_class = 20;
  int val_count = 500;
  int test_count = 1000;
};

// Stratified fractions per class.
struct SplitFractions {
  double train = 0.1;
  double val = 0.1;
  double test = 0.8;
};

struct SplitSpec {
  std::uint64_t seed = 0;
  std::variant<PerClassCounts, SplitFractions> scheme = SplitFractions{};
  std::optional<int> ood_class;
};

Graph make_splits(const Graph& graph, const SplitSpec& spec);

// Labels as seen by a classifier. Under leave-one-class-out the held-out
// class becomes -1 (never trained on) and the remaining classes are
// renumbered densely into [0, C-1).
struct Labeling {
  std::vector<int> labels;
  int num_classes = 0;
  Mask is_ood;
  std::optional<int> ood_class;
};

Labeling identity_labeling(const Graph& graph);
Labeling leave_one_out_labeling(const Graph& graph, int ood_class);

std::vector<std::size_t> mask_indices(const Mask& mask);

}  // namespace lgnsde
