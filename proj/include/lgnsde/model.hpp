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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lgnsde/graph.hpp"
#include "lgnsde/matrix.hpp"
#include "lgnsde/sde.hpp"
#include "lgnsde/tensor.hpp"

namespace lgnsde {

enum class Mode { Train, Eval };

struct ModelConfig {
  std::size_t hidden = 64;
  double dropout = 0.2;
  SdeConfig sde;
  PriorDrift prior;
  std::size_t mc_samples = 20;
  // Weight of the KL term in the training objective
  // kl_weight * kl - log_likelihood; the ELBO itself is reported unweighted.
  // Unset means |train| / (n * h): per-node likelihood against per-entry KL.
  std::optional<double> kl_weight;
};

// Latent graph neural SDE classifier.
//   encoder   H(t0) = dropout(X) W_enc + b_enc            (node-wise)
//   drift     F(H, t) = A tanh(A [H | t] W1 + b1) W2 + b2 (two GCN rounds)
//   decoder   logits = H(t1) W_dec + b_dec
// The prior drift is fixed; both processes share the diffusion g.
struct LgnsdeModel {
  ModelConfig config;
  Tensor enc_weight;    // d_in x h
  Tensor enc_bias;      // 1 x h
  Tensor drift_w1;      // (h+1) x h
  Tensor drift_b1;      // 1 x h
  Tensor drift_w2;      // h x h
  Tensor drift_b2;      // 1 x h
  Tensor dec_weight;    // h x C
  Tensor dec_bias;      // 1 x C

  // Glorot-uniform matrices, zero biases.
  static LgnsdeModel init(std::size_t d_in, std::size_t num_classes, const ModelConfig& config, std::uint64_t seed);

  std::size_t input_dim() const { return enc_weight.rows(); }
  std::size_t num_classes() const { return dec_weight.cols(); }

  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  // Independent copy of every parameter (fresh leaves).
  LgnsdeModel clone() const;
};

Tensor encode(const Graph& graph, const LgnsdeModel& model, Mode mode, Rng& rng);
Tensor posterior_drift(const Tensor& state, double t, const SparseMatrix& adj, const LgnsdeModel& model, Mode mode,
                       Rng& rng);
Tensor decode(const Tensor& state, const LgnsdeModel& model);

// Drift closures bound to a graph/model; `rng` must outlive the closure.
DriftFn make_posterior_drift(const Graph& graph, const LgnsdeModel& model, Mode mode, Rng& rng);
DriftFn make_prior_drift(const LgnsdeModel& model);

struct ElboTerms {
  Tensor elbo;            // log_likelihood - kl
  Tensor log_likelihood;  // summed over training nodes
  Tensor kl;
};

ElboTerms elbo(const Graph& graph, const Labeling& labeling, const LgnsdeModel& model, const BrownianPath& path,
               Mode mode, Rng& rng);

struct PredictiveOutput {
  Matrix probs;                 // n x C, row-stochastic
  std::vector<Matrix> samples;  // per-path probabilities when requested
};

// Monte-Carlo posterior predictive over `samples` independent paths whose
// seeds derive from `seed`. Eval mode; paths run concurrently.
PredictiveOutput predict(const Graph& graph, const LgnsdeModel& model, std::size_t samples, std::uint64_t seed,
                         bool keep_samples = false);
PredictiveOutput predict_with_seeds(const Graph& graph, const LgnsdeModel& model,
                                    std::span<const std::uint64_t> path_seeds, bool keep_samples = false);
std::vector<std::uint64_t> predictive_path_seeds(std::uint64_t seed, std::size_t samples);

// Two-layer GCN baseline: A relu(A dropout(X) W1) W2 with dropout on the
// hidden layer.
struct GcnModel {
  double dropout = 0.2;
  Tensor w1;  // d_in x h
  Tensor w2;  // h x C

  static GcnModel init(std::size_t d_in, std::size_t hidden, std::size_t num_classes, double dropout,
                       std::uint64_t seed);
  std::vector<Tensor> parameters() const;
  GcnModel clone() const;
};

Tensor gcn_forward(const Graph& graph, const GcnModel& model, Mode mode, Rng& rng);
PredictiveOutput gcn_predict(const Graph& graph, const GcnModel& model);
// Mean of member softmax outputs.
PredictiveOutput ensemble_predict(const Graph& graph, std::span<const GcnModel> members);

Matrix softmax_matrix(const Tensor& logits);

}  // namespace lgnsde
