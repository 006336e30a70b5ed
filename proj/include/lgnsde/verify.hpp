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

// Empirical checks of the model's stability guarantees:
//   * output variance bounded by L_h^2 times latent variance,
//   * coupled-noise deviation bounded by eps * exp((L_f + L_g^2/2) t),
//   * Euler-Maruyama solve == explicit residual network with noise.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgnsde/graph.hpp"
#include "lgnsde/model.hpp"
#include "lgnsde/sde.hpp"

namespace lgnsde::verify {

struct LipschitzEstimates {
  double drift = 0.0;      // L_f
  double diffusion = 0.0;  // L_g, exactly 0 for constant diffusion
  double decoder = 0.0;    // L_h, spectral norm of the decoder weight
};

// Largest singular value by power iteration on W^T W.
double spectral_norm(const Tensor& weight, double tol = 1e-10, std::size_t max_iter = 100000);

struct LipschitzSampling {
  std::size_t samples = 1000;  // random pairs
  std::vector<double> radii = {1e-3, 1e-2, 1e-1, 1.0};
  std::size_t power_iterations = 30;  // per-anchor Jacobian norm refinement; 0 disables
  std::uint64_t seed = 0;
};

struct Anchor {
  Tensor state;
  double t = 0.0;
};

// max over sampled pairs H1 = A + r u1, H2 = A + r u2 around the anchors of
// |F(H1,t) - F(H2,t)|_F / |H1 - H2|_F, raised to the Jacobian spectral norm
// at each anchor when power iterations are enabled. The Jacobian products
// use backward(), so parameter leaves reached by `drift` accumulate
// gradients. Degenerate pairs are skipped; throws std::invalid_argument if
// every pair is degenerate or samples < 2.
double estimate_drift_lipschitz(const DriftFn& drift, std::span<const Anchor> anchors,
                                const LipschitzSampling& sampling);

// Anchors are the states of a few eval-mode posterior trajectories at every
// solver time.
LipschitzEstimates estimate_lipschitz(const LgnsdeModel& model, const Graph& graph, const LipschitzSampling& sampling);

// Solver indices of a `points`-point grid ending at t1.
std::vector<std::size_t> grid_indices(std::size_t steps, std::size_t points);

struct Lemma1Options {
  std::size_t paths = 10000;
  std::size_t grid_points = 8;
  std::size_t batch = 500;  // paths integrated together as one stacked system
  std::uint64_t seed = 0;
};

struct Lemma1Report {
  std::size_t paths = 0;
  double decoder_lipschitz = 0.0;
  double slack = 0.0;  // 3 / sqrt(M)
  std::vector<double> t;
  std::vector<double> var_latent;     // sum of per-coordinate variances of H(t)
  std::vector<double> var_latent_se;  // its standard error
  std::vector<double> var_output;     // same for the pre-softmax logits
  std::vector<double> bound;          // L_h^2 Var(H(t)) (1 + slack)
  std::vector<bool> pass;
  std::vector<double> diffusion_bound;  // g^2 t n h (1 + slack)
  std::vector<bool> diffusion_pass;
  bool all_pass = false;
};

// Builds a drift acting on `copies` independent stacked copies of the
// system (rows = copies * n).
using BatchedDriftFactory = std::function<DriftFn(std::size_t copies)>;

Lemma1Report lemma1_check(const Tensor& initial, const BatchedDriftFactory& drift, const Tensor& dec_weight,
                          const Tensor& dec_bias, const SdeConfig& config, const Lemma1Options& options);
Lemma1Report lemma1_check(const LgnsdeModel& model, const Graph& graph, const Lemma1Options& options);

struct PerturbationSpec {
  double epsilon = 1e-2;
  std::size_t trials = 50;
  std::size_t grid_points = 8;
  std::uint64_t seed = 0;
};

// Random direction with unit Frobenius norm.
Tensor unit_direction(std::size_t rows, std::size_t cols, std::uint64_t seed);

struct CoupledRun {
  std::vector<double> deviation;  // |H_j - H~_j|_F for j = 0..L
  double max_drift_ratio = 0.0;   // over paired drift evaluations
  bool noise_identical = false;   // accumulated g dW agree bitwise
};

// Integrates both initial conditions under the same noise. Throws
// InvalidStateError when the two paths do not share a seed.
CoupledRun coupled_deviation(const DriftFn& drift, const Tensor& initial, const Tensor& perturbed,
                             const SdeConfig& config, const BrownianPath& path, const BrownianPath& perturbed_path);

struct Lemma2Report {
  double epsilon = 0.0;
  std::size_t trials = 0;
  double lf_sampled = 0.0;     // from estimate_drift_lipschitz
  double lf_trajectory = 0.0;  // max ratio along the realized coupled runs
  double lg = 0.0;
  std::vector<double> t;
  std::vector<double> measured;  // mean over trials of |H(t) - H~(t)|_F
  std::vector<double> bound;     // eps exp((lf_sampled + lg^2/2) t)
  std::vector<bool> pass;
  bool all_pass = false;
  // "pass", "lf_underestimated" (violations vanish with lf_trajectory) or
  // "violation".
  std::string verdict;
};

Lemma2Report lemma2_check(const DriftFn& drift, const Tensor& initial, const SdeConfig& config,
                          const PerturbationSpec& spec, double lf_sampled);
Lemma2Report lemma2_check(const LgnsdeModel& model, const Graph& graph, const PerturbationSpec& spec,
                          const LipschitzSampling& sampling);

// Explicit L-layer residual network: layer j maps H to
// H + F(H, t_j) dt + g dW_j with shared drift weights.
class NoisyGraphResNet {
 public:
  NoisyGraphResNet(DriftFn drift, const SdeConfig& config, const BrownianPath& path);
  std::vector<Tensor> forward(const Tensor& input) const;
  std::size_t depth() const { return times_.size(); }

 private:
  DriftFn drift_;
  double dt_;
  double g_;
  std::vector<double> times_;
  std::vector<Tensor> noise_;
};

// Max elementwise |ResNet state - solver state| over all layers. Throws
// std::invalid_argument unless the scheme is Euler-Maruyama. g = 0 is
// accepted here and compared against plain explicit Euler steps.
double resnet_equivalence(const DriftFn& drift, const Tensor& initial, const SdeConfig& config,
                          const BrownianPath& path);
double resnet_equivalence(const LgnsdeModel& model, const Graph& graph, const BrownianPath& path);

nlohmann::json to_json(const Lemma1Report& r);
nlohmann::json to_json(const Lemma2Report& r);
std::string to_csv(const Lemma1Report& r);
std::string to_csv(const Lemma2Report& r);

// Block-diagonal stack of `copies` copies of `adj`.
SparseMatrix block_diagonal(const SparseMatrix& adj, std::size_t copies);

}  // namespace lgnsde::verify
