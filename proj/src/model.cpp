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

#include "lgnsde/model.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>

#include "lgnsde/errors.hpp"
#include "lgnsde/random.hpp"

namespace lgnsde {

namespace {

constexpr std::uint64_t kPredictStream = 0x70726564;  // "pred"

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-a, a);
  std::vector<double> v(fan_in * fan_out);
  for (auto& x : v) x = u(rng);
  return Tensor::parameter({fan_in, fan_out}, std::move(v));
}

Tensor zero_bias(std::size_t width) { return Tensor::parameter({1, width}, std::vector<double>(width, 0.0)); }

void check_row_stochastic(const Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double s = 0.0;
    for (double v : m.row(r)) s += v;
    if (std::abs(s - 1.0) > 1e-9) throw std::logic_error("predictive row " + std::to_string(r) + " sums to " + std::to_string(s));
  }
}

}  // namespace

LgnsdeModel LgnsdeModel::init(std::size_t d_in, std::size_t num_classes, const ModelConfig& config,
                              std::uint64_t seed) {
  config.sde.validate();
  if (config.hidden < 1) throw std::invalid_argument("hidden dimension must be >= 1");
  if (config.mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
  if (config.kl_weight && !(*config.kl_weight >= 0.0)) throw std::invalid_argument("kl_weight must be >= 0");
  const std::size_t h = config.hidden;
  Rng rng(seed);
  LgnsdeModel m;
  m.config = config;
  m.enc_weight = glorot(d_in, h, rng);
  m.enc_bias = zero_bias(h);
  m.drift_w1 = glorot(h + 1, h, rng);
  m.drift_b1 = zero_bias(h);
  m.drift_w2 = glorot(h, h, rng);
  m.drift_b2 = zero_bias(h);
  m.dec_weight = glorot(h, num_classes, rng);
  m.dec_bias = zero_bias(num_classes);
  return m;
}

std::vector<Tensor> LgnsdeModel::parameters() const {
  return {enc_weight, enc_bias, drift_w1, drift_b1, drift_w2, drift_b2, dec_weight, dec_bias};
}

std::vector<std::pair<std::string, Tensor>> LgnsdeModel::named_parameters() const {
  return {{"enc_weight", enc_weight}, {"enc_bias", enc_bias}, {"drift_w1", drift_w1}, {"drift_b1", drift_b1},
          {"drift_w2", drift_w2},     {"drift_b2", drift_b2}, {"dec_weight", dec_weight}, {"dec_bias", dec_bias}};
}

LgnsdeModel LgnsdeModel::clone() const {
  LgnsdeModel m;
  m.config = config;
  m.enc_weight = enc_weight.detach(true);
  m.enc_bias = enc_bias.detach(true);
  m.drift_w1 = drift_w1.detach(true);
  m.drift_b1 = drift_b1.detach(true);
  m.drift_w2 = drift_w2.detach(true);
  m.drift_b2 = drift_b2.detach(true);
  m.dec_weight = dec_weight.detach(true);
  m.dec_bias = dec_bias.detach(true);
  return m;
}

Tensor encode(const Graph& graph, const LgnsdeModel& model, Mode mode, Rng& rng) {
  if (graph.d_in != model.input_dim())
    throw DimensionError("encode: graph has " + std::to_string(graph.d_in) + " features, encoder expects " +
                         std::to_string(model.input_dim()));
  const Tensor x = dropout(graph.features, model.config.dropout, mode == Mode::Train, rng);
  return add_row_bias(matmul(x, model.enc_weight), model.enc_bias);
}

Tensor posterior_drift(const Tensor& state, double t, const SparseMatrix& adj, const LgnsdeModel& model, Mode mode,
                       Rng& rng) {
  if (state.cols() + 1 != model.drift_w1.rows())
    throw DimensionError("posterior_drift: state " + state.shape().str() + " vs drift weights " +
                         model.drift_w1.shape().str());
  const Tensor with_time = concat_cols(state, Tensor::constant({state.rows(), 1}, t));
  const Tensor hidden =
      activate(add_row_bias(matmul(spmm(adj, with_time), model.drift_w1), model.drift_b1), Activation::Tanh);
  const Tensor dropped = dropout(hidden, model.config.dropout, mode == Mode::Train, rng);
  return add_row_bias(matmul(spmm(adj, dropped), model.drift_w2), model.drift_b2);
}

Tensor decode(const Tensor& state, const LgnsdeModel& model) {
  return add_row_bias(matmul(state, model.dec_weight), model.dec_bias);
}

DriftFn make_posterior_drift(const Graph& graph, const LgnsdeModel& model, Mode mode, Rng& rng) {
  return [&graph, &model, mode, &rng](const Tensor& h, double t) {
    return posterior_drift(h, t, graph.norm_adj, model, mode, rng);
  };
}

DriftFn make_prior_drift(const LgnsdeModel& model) {
  return [prior = model.config.prior](const Tensor& h, double t) { return prior(h, t); };
}

ElboTerms elbo(const Graph& graph, const Labeling& labeling, const LgnsdeModel& model, const BrownianPath& path,
               Mode mode, Rng& rng) {
  const auto train_count = static_cast<double>(mask_indices(graph.train_mask).size());
  if (train_count == 0) throw std::invalid_argument("elbo: training mask is empty");
  const Tensor h0 = encode(graph, model, mode, rng);
  const auto traj = integrate(h0, make_posterior_drift(graph, model, mode, rng), make_prior_drift(model),
                              model.config.sde, path);
  const Tensor logits = decode(traj.states.back(), model);
  const Tensor log_likelihood = scale(masked_cross_entropy(logits, labeling.labels, graph.train_mask), -train_count);
  return {sub(log_likelihood, traj.kl), log_likelihood, traj.kl};
}

Matrix softmax_matrix(const Tensor& logits) {
  const Tensor p = softmax_rows(logits);
  return Matrix(p.rows(), p.cols(), std::vector<double>(p.values().begin(), p.values().end()));
}

std::vector<std::uint64_t> predictive_path_seeds(std::uint64_t seed, std::size_t samples) {
  std::vector<std::uint64_t> seeds(samples);
  for (std::size_t i = 0; i < samples; ++i) seeds[i] = derive_seed(seed, {kPredictStream, i});
  return seeds;
}

PredictiveOutput predict(const Graph& graph, const LgnsdeModel& model, std::size_t samples, std::uint64_t seed,
                         bool keep_samples) {
  if (samples < 1) throw std::invalid_argument("predict: need at least one sample");
  const auto seeds = predictive_path_seeds(seed, samples);
  return predict_with_seeds(graph, model, seeds, keep_samples);
}

PredictiveOutput predict_with_seeds(const Graph& graph, const LgnsdeModel& model,
                                    std::span<const std::uint64_t> path_seeds, bool keep_samples) {
  const std::size_t samples = path_seeds.size();
  if (samples < 1) throw std::invalid_argument("predict: need at least one sample");
  const auto& cfg = model.config.sde;
  Tensor h0;
  {
    NoGradGuard no_grad;
    Rng unused(0);
    h0 = encode(graph, model, Mode::Eval, unused);
  }

  std::vector<Matrix> per_sample(samples);
  std::exception_ptr failure;
  const auto count = static_cast<std::int64_t>(samples);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t s = 0; s < count; ++s) {
    try {
      NoGradGuard no_grad;
      Rng unused(0);
      const BrownianPath path(path_seeds[static_cast<std::size_t>(s)], cfg.steps, graph.n, model.config.hidden,
                              cfg.t0, cfg.t1);
      const auto traj = integrate(h0, make_posterior_drift(graph, model, Mode::Eval, unused),
                                  make_prior_drift(model), cfg, path);
      per_sample[static_cast<std::size_t>(s)] = softmax_matrix(decode(traj.states.back(), model));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  // Fixed summation order keeps the result independent of thread count.
  PredictiveOutput out;
  out.probs = Matrix(graph.n, model.num_classes());
  for (const auto& m : per_sample)
    for (std::size_t i = 0; i < m.data.size(); ++i) out.probs.data[i] += m.data[i];
  for (auto& v : out.probs.data) v /= static_cast<double>(samples);
  check_row_stochastic(out.probs);
  if (keep_samples) out.samples = std::move(per_sample);
  return out;
}

GcnModel GcnModel::init(std::size_t d_in, std::size_t hidden, std::size_t num_classes, double dropout,
                        std::uint64_t seed) {
  Rng rng(seed);
  GcnModel m;
  m.dropout = dropout;
  m.w1 = glorot(d_in, hidden, rng);
  m.w2 = glorot(hidden, num_classes, rng);
  return m;
}

std::vector<Tensor> GcnModel::parameters() const { return {w1, w2}; }

GcnModel GcnModel::clone() const {
  GcnModel m;
  m.dropout = dropout;
  m.w1 = w1.detach(true);
  m.w2 = w2.detach(true);
  return m;
}

Tensor gcn_forward(const Graph& graph, const GcnModel& model, Mode mode, Rng& rng) {
  if (graph.d_in != model.w1.rows())
    throw DimensionError("gcn_forward: graph has " + std::to_string(graph.d_in) + " features, model expects " +
                         std::to_string(model.w1.rows()));
  const bool training = mode == Mode::Train;
  const Tensor x = dropout(graph.features, model.dropout, training, rng);
  const Tensor hidden = activate(spmm(graph.norm_adj, matmul(x, model.w1)), Activation::Relu);
  return spmm(graph.norm_adj, matmul(dropout(hidden, model.dropout, training, rng), model.w2));
}

PredictiveOutput gcn_predict(const Graph& graph, const GcnModel& model) {
  NoGradGuard no_grad;
  Rng unused(0);
  PredictiveOutput out;
  out.probs = softmax_matrix(gcn_forward(graph, model, Mode::Eval, unused));
  return out;
}

PredictiveOutput ensemble_predict(const Graph& graph, std::span<const GcnModel> members) {
  if (members.empty()) throw std::invalid_argument("ensemble_predict: empty ensemble");
  PredictiveOutput out;
  for (const auto& member : members) {
    const Matrix p = gcn_predict(graph, member).probs;
    if (out.probs.data.empty()) out.probs = Matrix(p.rows, p.cols);
    for (std::size_t i = 0; i < p.data.size(); ++i) out.probs.data[i] += p.data[i];
  }
  for (auto& v : out.probs.data) v /= static_cast<double>(members.size());
  return out;
}

}  // namespace lgnsde
