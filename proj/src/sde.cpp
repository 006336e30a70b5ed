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

#include "lgnsde/sde.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "lgnsde/errors.hpp"
#include "lgnsde/random.hpp"

namespace lgnsde {

void SdeConfig::validate() const {
  if (!(t1 > t0)) throw std::invalid_argument("sde config: t1 must exceed t0");
  if (steps < 1) throw std::invalid_argument("sde config: steps must be >= 1");
  if (!(diffusion > 0.0)) throw std::invalid_argument("sde config: diffusion must be > 0");
}

BrownianPath::BrownianPath(std::uint64_t seed, std::size_t steps, std::size_t rows, std::size_t cols, double t0,
                           double t1)
    : seed_(seed), rows_(rows), cols_(cols), dt_((t1 - t0) / static_cast<double>(steps)) {
  if (steps < 1) throw std::invalid_argument("brownian path: steps must be >= 1");
  if (!(t1 > t0)) throw std::invalid_argument("brownian path: t1 must exceed t0");
  const double sd = std::sqrt(dt_);
  increments_.reserve(steps);
  for (std::size_t j = 0; j < steps; ++j) {
    Rng rng(derive_seed(seed, {j, rows, cols}));
    std::normal_distribution<double> normal(0.0, sd);
    std::vector<double> values(rows * cols);
    for (auto& v : values) v = normal(rng);
    increments_.push_back(Tensor::from_values({rows, cols}, std::move(values)));
  }
}

BrownianPath BrownianPath::permuted_rows(std::span<const std::size_t> perm) const {
  if (perm.size() != rows_) throw DimensionError("permuted_rows: permutation length differs from row count");
  BrownianPath out;
  out.seed_ = seed_;
  out.rows_ = rows_;
  out.cols_ = cols_;
  out.dt_ = dt_;
  for (const auto& inc : increments_) {
    auto src = inc.values();
    std::vector<double> values(src.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t c = 0; c < cols_; ++c) values[i * cols_ + c] = src[perm[i] * cols_ + c];
    out.increments_.push_back(Tensor::from_values({rows_, cols_}, std::move(values)));
  }
  return out;
}

Tensor em_step(const Tensor& state, const Tensor& drift, double g, const Tensor& dw, double dt) {
  if (state.shape() != drift.shape() || state.shape() != dw.shape())
    throw DimensionError("em_step: state " + state.shape().str() + ", drift " + drift.shape().str() + ", noise " +
                         dw.shape().str());
  return add(add(state, scale(drift, dt)), scale(dw, g));
}

namespace {

Tensor srk_from_k1(const Tensor& state, const Tensor& k1, const DriftFn& drift, double g, const Tensor& dw, double dt,
                   double t) {
  if (state.shape() != k1.shape() || state.shape() != dw.shape())
    throw DimensionError("srk_step: state " + state.shape().str() + ", drift " + k1.shape().str() + ", noise " +
                         dw.shape().str());
  const Tensor noise = scale(dw, g);
  const Tensor predictor = add(add(state, scale(k1, dt)), noise);
  const Tensor k2 = drift(predictor, t + dt);
  return add(add(state, scale(add(k1, k2), 0.5 * dt)), noise);
}

}  // namespace

Tensor srk_step(const Tensor& state, const DriftFn& drift, double g, const Tensor& dw, double dt, double t) {
  return srk_from_k1(state, drift(state, t), drift, g, dw, dt, t);
}

TrajectoryRecord integrate(const Tensor& initial, const DriftFn& posterior, const DriftFn& prior,
                           const SdeConfig& config, const BrownianPath& path) {
  config.validate();
  if (path.steps() != config.steps || path.rows() != initial.rows() || path.cols() != initial.cols())
    throw DimensionError("integrate: path is " + std::to_string(path.steps()) + " steps of [" +
                         std::to_string(path.rows()) + "x" + std::to_string(path.cols()) + "], state " +
                         initial.shape().str() + " with " + std::to_string(config.steps) + " steps");
  const double dt = config.dt();
  const double g = config.diffusion;
  const double kl_weight = 0.5 * dt / (g * g);

  TrajectoryRecord rec;
  rec.states.reserve(config.steps + 1);
  rec.states.push_back(initial);
  Tensor kl = Tensor::scalar(0.0);
  for (std::size_t j = 0; j < config.steps; ++j) {
    const double t = config.time(j);
    const Tensor& h = rec.states.back();
    const Tensor f_post = posterior(h, t);
    const Tensor f_prior = prior(h, t);
    kl = add(kl, scale(sum_squares(sub(f_post, f_prior)), kl_weight));
    Tensor next = config.scheme == Scheme::EulerMaruyama
                      ? em_step(h, f_post, g, path.increment(j), dt)
                      : srk_from_k1(h, f_post, posterior, g, path.increment(j), dt, t);
    if (!all_finite(next.values())) throw DivergedError(j + 1);
    rec.states.push_back(std::move(next));
  }
  rec.kl = kl;
  return rec;
}

Tensor PriorDrift::operator()(const Tensor& state, double) const {
  if (kind == Kind::Constant) return Tensor::constant(state.shape(), mu);
  return scale(sub(state, Tensor::constant(state.shape(), mu)), -theta);
}

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace lgnsde
