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
#include <functional>
#include <span>
#include <vector>

#include "lgnsde/tensor.hpp"

namespace lgnsde {

enum class Scheme { EulerMaruyama, StochasticRungeKutta };

struct SdeConfig {
  double t0 = 0.0;
  double t1 = 1.0;
  std::size_t steps = 16;
  double diffusion = 1.0;  // constant g, shared by prior and posterior
  Scheme scheme = Scheme::StochasticRungeKutta;

  double dt() const { return (t1 - t0) / static_cast<double>(steps); }
  double time(std::size_t j) const { return t0 + static_cast<double>(j) * dt(); }
  // Throws std::invalid_argument unless t1 > t0, steps >= 1, g > 0.
  void validate() const;
};

// Step-indexed Wiener increments, each entry ~ N(0, dt). Increment j is a
// pure function of (seed, j, rows, cols, dt), so two paths built from the
// same arguments are bitwise identical.
class BrownianPath {
 public:
  BrownianPath(std::uint64_t seed, std::size_t steps, std::size_t rows, std::size_t cols, double t0 = 0.0,
               double t1 = 1.0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t steps() const noexcept { return increments_.size(); }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double dt() const noexcept { return dt_; }
  const Tensor& increment(std::size_t j) const { return increments_.at(j); }

  // Same noise with rows reordered: row i of the result is row perm[i].
  BrownianPath permuted_rows(std::span<const std::size_t> perm) const;

 private:
  BrownianPath() = default;
  std::uint64_t seed_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  double dt_ = 0.0;
  std::vector<Tensor> increments_;
};

using DriftFn = std::function<Tensor(const Tensor& state, double t)>;

// H + F dt + g dW
Tensor em_step(const Tensor& state, const Tensor& drift, double g, const Tensor& dw, double dt);

// Additive-noise Heun scheme:
//   K1 = F(H, t), K2 = F(H + K1 dt + g dW, t + dt),
//   H' = H + (K1 + K2) dt / 2 + g dW.
Tensor srk_step(const Tensor& state, const DriftFn& drift, double g, const Tensor& dw, double dt, double t);

struct TrajectoryRecord {
  std::vector<Tensor> states;  // H(t_0) .. H(t_L)
  Tensor kl;                   // sum_j 1/2 |(F_post - F_prior)/g|_F^2 dt
};

// Solves the posterior SDE driven by `path` and accumulates the pathwise KL
// against `prior` at the left endpoint of every step. Throws DivergedError
// naming the first step whose state is not finite.
TrajectoryRecord integrate(const Tensor& initial, const DriftFn& posterior, const DriftFn& prior,
                           const SdeConfig& config, const BrownianPath& path);

// Prior drift: constant mu everywhere, or mean reversion theta (mu - H).
struct PriorDrift {
  enum class Kind { Constant, OrnsteinUhlenbeck };
  Kind kind = Kind::Constant;
  double mu = 0.0;
  double theta = 1.0;

  Tensor operator()(const Tensor& state, double t) const;
};

bool all_finite(std::span<const double> values);

}  // namespace lgnsde
