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

#include "lgnsde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

#include "lgnsde/errors.hpp"
#include "lgnsde/random.hpp"

namespace lgnsde::verify {

namespace {

constexpr std::uint64_t kLemma1Stream = 0x6c31;
constexpr std::uint64_t kLemma2PathStream = 0x6c32;
constexpr std::uint64_t kLemma2DirStream = 0x6c33;
constexpr std::uint64_t kAnchorStream = 0x616e;

double frobenius(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<double> unit_vector(std::size_t size, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(size);
  double norm = 0.0;
  while (norm == 0.0) {
    for (auto& x : v) x = normal(rng);
    norm = frobenius(v);
  }
  for (auto& x : v) x /= norm;
  return v;
}

Tensor offset(const Tensor& base, std::span<const double> dir, double r) {
  auto b = base.values();
  std::vector<double> out(b.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] + r * dir[i];
  return Tensor::from_values(base.shape(), std::move(out));
}

// J^T w at `state` through the tape; zero when the drift ignores its input.
std::vector<double> vjp(const DriftFn& drift, const Tensor& state, double t, std::span<const double> w) {
  Tensor x = state.detach(true);
  const Tensor y = drift(x, t);
  if (!y.requires_grad()) return std::vector<double>(state.size(), 0.0);
  const Tensor weights = Tensor::from_values(y.shape(), std::vector<double>(w.begin(), w.end()));
  backward(sum(mul(y, weights)));
  if (!x.has_grad()) return std::vector<double>(state.size(), 0.0);
  auto g = x.grad();
  return {g.begin(), g.end()};
}

double jacobian_norm(const DriftFn& drift, const Anchor& anchor, std::size_t iterations, Rng& rng) {
  const std::size_t size = anchor.state.size();
  std::vector<double> v = unit_vector(size, rng);
  const double step = 1e-6 * std::max(1.0, frobenius(anchor.state.values()) / std::sqrt(static_cast<double>(size)));
  double best = 0.0;
  for (std::size_t k = 0; k < iterations; ++k) {
    std::vector<double> jv(size);
    {
      NoGradGuard guard;
      const Tensor up = drift(offset(anchor.state, v, step), anchor.t);
      const Tensor down = drift(offset(anchor.state, v, -step), anchor.t);
      auto a = up.values(), b = down.values();
      for (std::size_t i = 0; i < size; ++i) jv[i] = (a[i] - b[i]) / (2.0 * step);
    }
    const double jv_norm = frobenius(jv);
    if (jv_norm == 0.0) break;
    for (auto& x : jv) x /= jv_norm;
    std::vector<double> jtw = vjp(drift, anchor.state, anchor.t, jv);
    const double sigma = frobenius(jtw);
    if (sigma == 0.0) break;
    best = std::max(best, sigma);
    for (std::size_t i = 0; i < size; ++i) v[i] = jtw[i] / sigma;
  }
  return best;
}

// Advances `initial` with the configured scheme; no KL. Records the states
// at `keep` (sorted solver indices).
std::vector<Tensor> solve_at(const Tensor& initial, const DriftFn& drift, const SdeConfig& config,
                             const BrownianPath& path, const std::vector<std::size_t>& keep) {
  std::vector<Tensor> out;
  out.reserve(keep.size());
  std::size_t next = 0;
  Tensor h = initial;
  const double dt = config.dt();
  for (std::size_t j = 0; j <= config.steps && next < keep.size(); ++j) {
    if (keep[next] == j) {
      out.push_back(h);
      ++next;
    }
    if (j == config.steps) break;
    const double t = config.time(j);
    h = config.scheme == Scheme::EulerMaruyama
            ? em_step(h, drift(h, t), config.diffusion, path.increment(j), dt)
            : srk_step(h, drift, config.diffusion, path.increment(j), dt, t);
    if (!all_finite(h.values())) throw DivergedError(j + 1);
  }
  return out;
}

Tensor tile_rows(const Tensor& x, std::size_t copies) {
  auto v = x.values();
  std::vector<double> out;
  out.reserve(v.size() * copies);
  for (std::size_t k = 0; k < copies; ++k) out.insert(out.end(), v.begin(), v.end());
  return Tensor::from_values({x.rows() * copies, x.cols()}, std::move(out));
}

// Shifted power sums S_p = sum (x - shift)^p, p = 1..4, per coordinate.
struct Moments {
  std::vector<double> s1, s2, s3, s4;
  explicit Moments(std::size_t n = 0) : s1(n), s2(n), s3(n), s4(n) {}

  void add(std::size_t c, double d) {
    const double d2 = d * d;
    s1[c] += d;
    s2[c] += d2;
    s3[c] += d2 * d;
    s4[c] += d2 * d2;
  }
  void merge(const Moments& o) {
    for (std::size_t c = 0; c < s1.size(); ++c) {
      s1[c] += o.s1[c];
      s2[c] += o.s2[c];
      s3[c] += o.s3[c];
      s4[c] += o.s4[c];
    }
  }
  // Sum of unbiased per-coordinate variances and the standard error of that
  // sum (coordinates treated as independent).
  std::pair<double, double> total_variance(double m) const {
    double total = 0.0, se2 = 0.0;
    for (std::size_t c = 0; c < s1.size(); ++c) {
      const double mean = s1[c] / m;
      const double var = std::max(0.0, (s2[c] - s1[c] * mean) / (m - 1.0));
      const double e2 = s2[c] / m, e3 = s3[c] / m, e4 = s4[c] / m;
      const double mu4 = e4 - 4.0 * mean * e3 + 6.0 * mean * mean * e2 - 3.0 * mean * mean * mean * mean;
      total += var;
      se2 += std::max(0.0, (mu4 - var * var * (m - 3.0) / (m - 1.0)) / m);
    }
    return {total, std::sqrt(se2)};
  }
};

void check_config_shape(const SdeConfig& config, bool allow_zero_diffusion) {
  if (!(config.t1 > config.t0)) throw std::invalid_argument("sde config: t1 must exceed t0");
  if (config.steps < 1) throw std::invalid_argument("sde config: steps must be >= 1");
  if (allow_zero_diffusion ? !(config.diffusion >= 0.0) : !(config.diffusion > 0.0))
    throw std::invalid_argument("sde config: diffusion out of range");
}

DriftFn eval_drift(std::shared_ptr<const SparseMatrix> adj, const LgnsdeModel& model) {
  auto rng = std::make_shared<Rng>(0);
  return [adj = std::move(adj), &model, rng](const Tensor& h, double t) {
    return posterior_drift(h, t, *adj, model, Mode::Eval, *rng);
  };
}

Tensor eval_encoding(const Graph& graph, const LgnsdeModel& model) {
  NoGradGuard guard;
  Rng unused(0);
  return encode(graph, model, Mode::Eval, unused).detach();
}

}  // namespace

double spectral_norm(const Tensor& weight, double tol, std::size_t max_iter) {
  const std::size_t rows = weight.rows(), cols = weight.cols();
  auto w = weight.values();
  if (w.empty() || frobenius(w) == 0.0) return 0.0;
  Rng rng(0x5eed);
  std::vector<double> v = unit_vector(cols, rng);
  std::vector<double> u(rows);
  double sigma = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::fill(u.begin(), u.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) u[r] += w[r * cols + c] * v[c];
    std::vector<double> next(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) next[c] += w[r * cols + c] * u[r];
    const double norm = frobenius(next);
    if (norm == 0.0) return 0.0;
    const double estimate = std::sqrt(norm);
    for (std::size_t c = 0; c < cols; ++c) v[c] = next[c] / norm;
    const bool done = std::abs(estimate - sigma) <= tol * estimate;
    sigma = estimate;
    if (done) break;
  }
  return sigma;
}

double estimate_drift_lipschitz(const DriftFn& drift, std::span<const Anchor> anchors,
                                const LipschitzSampling& sampling) {
  if (sampling.samples < 2) throw std::invalid_argument("estimate_lipschitz: need at least 2 samples");
  if (anchors.empty()) throw std::invalid_argument("estimate_lipschitz: no anchors");
  if (sampling.radii.empty()) throw std::invalid_argument("estimate_lipschitz: no radii");
  Rng rng(sampling.seed);
  std::uniform_int_distribution<std::size_t> pick_anchor(0, anchors.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_radius(0, sampling.radii.size() - 1);

  double best = 0.0;
  std::size_t usable = 0;
  {
    NoGradGuard guard;
    for (std::size_t s = 0; s < sampling.samples; ++s) {
      const Anchor& a = anchors[pick_anchor(rng)];
      const double r = sampling.radii[pick_radius(rng)];
      const auto u1 = unit_vector(a.state.size(), rng);
      const auto u2 = unit_vector(a.state.size(), rng);
      const Tensor h1 = offset(a.state, u1, r);
      const Tensor h2 = offset(a.state, u2, r);
      const double den = distance(h1.values(), h2.values());
      if (!(den > 0.0)) continue;
      const double num = distance(drift(h1, a.t).values(), drift(h2, a.t).values());
      ++usable;
      best = std::max(best, num / den);
    }
  }
  if (usable == 0) throw std::invalid_argument("estimate_lipschitz: every sampled pair was degenerate");
  if (sampling.power_iterations > 0)
    for (const auto& a : anchors) best = std::max(best, jacobian_norm(drift, a, sampling.power_iterations, rng));
  return best;
}

LipschitzEstimates estimate_lipschitz(const LgnsdeModel& model, const Graph& graph, const LipschitzSampling& sampling) {
  // Jacobian products write gradients; keep them off the caller's leaves.
  const LgnsdeModel local = model.clone();
  const SdeConfig& cfg = local.config.sde;
  cfg.validate();
  auto adj = std::make_shared<const SparseMatrix>(graph.norm_adj);
  const DriftFn drift = eval_drift(adj, local);
  const Tensor h0 = eval_encoding(graph, local);

  std::vector<std::size_t> all(cfg.steps + 1);
  for (std::size_t j = 0; j <= cfg.steps; ++j) all[j] = j;
  std::vector<Anchor> anchors;
  for (std::uint64_t p = 0; p < 2; ++p) {
    NoGradGuard guard;
    const BrownianPath path(derive_seed(sampling.seed, {kAnchorStream, p}), cfg.steps, h0.rows(), h0.cols(), cfg.t0,
                            cfg.t1);
    const auto states = solve_at(h0, drift, cfg, path, all);
    for (std::size_t j = 0; j < states.size(); ++j) anchors.push_back({states[j], cfg.time(j)});
  }
  LipschitzEstimates est;
  est.drift = estimate_drift_lipschitz(drift, anchors, sampling);
  est.diffusion = 0.0;
  est.decoder = spectral_norm(local.dec_weight);
  return est;
}

std::vector<std::size_t> grid_indices(std::size_t steps, std::size_t points) {
  if (points == 0) throw std::invalid_argument("time grid needs at least one point");
  if (steps == 0) throw std::invalid_argument("time grid needs at least one solver step");
  std::vector<std::size_t> idx;
  for (std::size_t k = 1; k <= points; ++k) {
    const std::size_t j = std::max<std::size_t>(1, (k * steps + points / 2) / points);
    if (idx.empty() || idx.back() != j) idx.push_back(j);
  }
  return idx;
}

SparseMatrix block_diagonal(const SparseMatrix& adj, std::size_t copies) {
  const auto v = adj.view();
  std::vector<Triplet> entries;
  entries.reserve(adj.nnz() * copies);
  for (std::size_t k = 0; k < copies; ++k)
    for (std::size_t r = 0; r < v.rows; ++r)
      for (std::size_t p = v.row_ptr[r]; p < v.row_ptr[r + 1]; ++p)
        entries.push_back({k * v.rows + r, k * v.cols + v.col_idx[p], v.values[p]});
  return SparseMatrix::from_triplets(v.rows * copies, v.cols * copies, entries);
}

Lemma1Report lemma1_check(const Tensor& initial, const BatchedDriftFactory& make_drift, const Tensor& dec_weight,
                          const Tensor& dec_bias, const SdeConfig& config, const Lemma1Options& options) {
  check_config_shape(config, true);
  if (options.paths < 1000) throw std::invalid_argument("lemma1_check: need at least 1000 paths");
  if (options.batch == 0) throw std::invalid_argument("lemma1_check: batch must be >= 1");
  if (dec_weight.rows() != initial.cols() || dec_bias.rows() != 1 || dec_bias.cols() != dec_weight.cols())
    throw DimensionError("lemma1_check: decoder " + dec_weight.shape().str() + " for state " +
                         initial.shape().str());

  const std::size_t n = initial.rows(), h = initial.cols(), classes = dec_weight.cols();
  const std::vector<std::size_t> grid = grid_indices(config.steps, options.grid_points);
  const std::size_t points = grid.size();
  const std::size_t batches = (options.paths + options.batch - 1) / options.batch;

  std::vector<double> y0;
  {
    NoGradGuard guard;
    const Tensor y = add_row_bias(matmul(initial, dec_weight), dec_bias);
    y0.assign(y.values().begin(), y.values().end());
  }
  auto h0 = initial.values();

  std::vector<std::vector<Moments>> latent(batches), output(batches);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(batches); ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    try {
      NoGradGuard guard;
      const std::size_t copies = std::min(options.batch, options.paths - b * options.batch);
      const DriftFn drift = make_drift(copies);
      const BrownianPath path(derive_seed(options.seed, {kLemma1Stream, b}), config.steps, copies * n, h, config.t0,
                              config.t1);
      const auto states = solve_at(tile_rows(initial, copies), drift, config, path, grid);
      latent[b].assign(points, Moments(n * h));
      output[b].assign(points, Moments(n * classes));
      for (std::size_t k = 0; k < points; ++k) {
        const Tensor y = add_row_bias(matmul(states[k], dec_weight), dec_bias);
        auto hv = states[k].values();
        auto yv = y.values();
        for (std::size_t p = 0; p < copies; ++p) {
          for (std::size_t c = 0; c < n * h; ++c) latent[b][k].add(c, hv[p * n * h + c] - h0[c]);
          for (std::size_t c = 0; c < n * classes; ++c) output[b][k].add(c, yv[p * n * classes + c] - y0[c]);
        }
      }
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  Lemma1Report rep;
  rep.paths = options.paths;
  rep.decoder_lipschitz = spectral_norm(dec_weight);
  rep.slack = 3.0 / std::sqrt(static_cast<double>(options.paths));
  const double m = static_cast<double>(options.paths);
  const double g = config.diffusion;
  rep.all_pass = true;
  for (std::size_t k = 0; k < points; ++k) {
    Moments lat(n * h), out(n * classes);
    for (std::size_t b = 0; b < batches; ++b) {
      lat.merge(latent[b][k]);
      out.merge(output[b][k]);
    }
    const auto [var_h, se_h] = lat.total_variance(m);
    const double var_y = out.total_variance(m).first;
    const double t = config.time(grid[k]);
    rep.t.push_back(t);
    rep.var_latent.push_back(var_h);
    rep.var_latent_se.push_back(se_h);
    rep.var_output.push_back(var_y);
    const double bound = rep.decoder_lipschitz * rep.decoder_lipschitz * var_h * (1.0 + rep.slack);
    rep.bound.push_back(bound);
    rep.pass.push_back(var_y <= bound);
    const double diff_bound = g * g * (t - config.t0) * static_cast<double>(n * h) * (1.0 + rep.slack);
    rep.diffusion_bound.push_back(diff_bound);
    rep.diffusion_pass.push_back(var_h <= diff_bound);
    rep.all_pass = rep.all_pass && rep.pass.back();
  }
  return rep;
}

Lemma1Report lemma1_check(const LgnsdeModel& model, const Graph& graph, const Lemma1Options& options) {
  model.config.sde.validate();
  const Tensor h0 = eval_encoding(graph, model);
  const BatchedDriftFactory factory = [&graph, &model](std::size_t copies) {
    auto adj = std::make_shared<const SparseMatrix>(copies == 1 ? graph.norm_adj
                                                                : block_diagonal(graph.norm_adj, copies));
    return eval_drift(std::move(adj), model);
  };
  return lemma1_check(h0, factory, model.dec_weight, model.dec_bias, model.config.sde, options);
}

Tensor unit_direction(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows * cols == 0) throw std::invalid_argument("unit_direction: empty shape");
  Rng rng(seed);
  return Tensor::from_values({rows, cols}, unit_vector(rows * cols, rng));
}

CoupledRun coupled_deviation(const DriftFn& drift, const Tensor& initial, const Tensor& perturbed,
                             const SdeConfig& config, const BrownianPath& path, const BrownianPath& perturbed_path) {
  if (path.seed() != perturbed_path.seed())
    throw InvalidStateError("coupled_deviation: paths have different seeds (" + std::to_string(path.seed()) + " vs " +
                            std::to_string(perturbed_path.seed()) + ")");
  config.validate();
  if (initial.shape() != perturbed.shape())
    throw DimensionError("coupled_deviation: " + initial.shape().str() + " vs " + perturbed.shape().str());
  for (const BrownianPath* p : {&path, &perturbed_path})
    if (p->steps() != config.steps || p->rows() != initial.rows() || p->cols() != initial.cols())
      throw DimensionError("coupled_deviation: path dimensions do not match the state");

  NoGradGuard guard;
  // Pairs up the i-th drift evaluation of each run, predictor stages
  // included, so the realized ratio covers every point the scheme touched.
  std::vector<std::pair<Tensor, Tensor>> calls_a, calls_b;
  const auto recording = [&drift](std::vector<std::pair<Tensor, Tensor>>& log) -> DriftFn {
    return [&drift, &log](const Tensor& h, double t) {
      Tensor f = drift(h, t);
      log.emplace_back(h, f);
      return f;
    };
  };
  const DriftFn drift_a = recording(calls_a), drift_b = recording(calls_b);

  CoupledRun run;
  run.noise_identical = true;
  const double dt = config.dt(), g = config.diffusion;
  Tensor a = initial, b = perturbed;
  std::vector<double> noise_a(initial.size(), 0.0), noise_b(initial.size(), 0.0);
  run.deviation.push_back(distance(a.values(), b.values()));
  for (std::size_t j = 0; j < config.steps; ++j) {
    const double t = config.time(j);
    const Tensor& dw_a = path.increment(j);
    const Tensor& dw_b = perturbed_path.increment(j);
    if (config.scheme == Scheme::EulerMaruyama) {
      a = em_step(a, drift_a(a, t), g, dw_a, dt);
      b = em_step(b, drift_b(b, t), g, dw_b, dt);
    } else {
      a = srk_step(a, drift_a, g, dw_a, dt, t);
      b = srk_step(b, drift_b, g, dw_b, dt, t);
    }
    if (!all_finite(a.values()) || !all_finite(b.values())) throw DivergedError(j + 1);
    auto va = dw_a.values(), vb = dw_b.values();
    for (std::size_t i = 0; i < noise_a.size(); ++i) {
      noise_a[i] += g * va[i];
      noise_b[i] += g * vb[i];
    }
    for (std::size_t i = 0; i < calls_a.size() && i < calls_b.size(); ++i) {
      const double den = distance(calls_a[i].first.values(), calls_b[i].first.values());
      if (den > 0.0)
        run.max_drift_ratio =
            std::max(run.max_drift_ratio, distance(calls_a[i].second.values(), calls_b[i].second.values()) / den);
    }
    calls_a.clear();
    calls_b.clear();
    run.deviation.push_back(distance(a.values(), b.values()));
  }
  run.noise_identical = noise_a == noise_b;
  return run;
}

Lemma2Report lemma2_check(const DriftFn& drift, const Tensor& initial, const SdeConfig& config,
                          const PerturbationSpec& spec, double lf_sampled) {
  if (!(spec.epsilon >= 0.0)) throw std::invalid_argument("lemma2_check: epsilon must be >= 0");
  if (spec.trials == 0) throw std::invalid_argument("lemma2_check: need at least one trial");
  if (!(lf_sampled >= 0.0)) throw std::invalid_argument("lemma2_check: Lipschitz estimate must be >= 0");
  config.validate();
  const std::vector<std::size_t> grid = grid_indices(config.steps, spec.grid_points);

  Lemma2Report rep;
  rep.epsilon = spec.epsilon;
  rep.trials = spec.trials;
  rep.lf_sampled = lf_sampled;
  rep.lg = 0.0;
  std::vector<double> total(grid.size(), 0.0);
  for (std::size_t k = 0; k < spec.trials; ++k) {
    const Tensor dir = unit_direction(initial.rows(), initial.cols(), derive_seed(spec.seed, {kLemma2DirStream, k}));
    Tensor perturbed;
    {
      NoGradGuard guard;
      perturbed = add(initial, scale(dir, spec.epsilon)).detach();
    }
    const BrownianPath path(derive_seed(spec.seed, {kLemma2PathStream, k}), config.steps, initial.rows(),
                            initial.cols(), config.t0, config.t1);
    const CoupledRun run = coupled_deviation(drift, initial, perturbed, config, path, path);
    for (std::size_t i = 0; i < grid.size(); ++i) total[i] += run.deviation[grid[i]];
    rep.lf_trajectory = std::max(rep.lf_trajectory, run.max_drift_ratio);
  }

  const auto bounds_with = [&](double lf) {
    std::vector<double> b(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
      b[i] = spec.epsilon * std::exp((lf + 0.5 * rep.lg * rep.lg) * (config.time(grid[i]) - config.t0));
    return b;
  };
  rep.bound = bounds_with(lf_sampled);
  std::size_t violations = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rep.t.push_back(config.time(grid[i]));
    rep.measured.push_back(total[i] / static_cast<double>(spec.trials));
    rep.pass.push_back(rep.measured[i] <= rep.bound[i] * (1.0 + 1e-6));
    if (!rep.pass.back()) ++violations;
  }
  rep.all_pass = violations == 0;
  if (rep.all_pass) {
    rep.verdict = "pass";
  } else {
    const auto relaxed = bounds_with(std::max(lf_sampled, rep.lf_trajectory));
    bool ok = true;
    for (std::size_t i = 0; i < grid.size(); ++i) ok = ok && rep.measured[i] <= relaxed[i] * (1.0 + 1e-6);
    rep.verdict = ok ? "lf_underestimated" : "violation";
  }
  return rep;
}

Lemma2Report lemma2_check(const LgnsdeModel& model, const Graph& graph, const PerturbationSpec& spec,
                          const LipschitzSampling& sampling) {
  const LipschitzEstimates est = estimate_lipschitz(model, graph, sampling);
  auto adj = std::make_shared<const SparseMatrix>(graph.norm_adj);
  Lemma2Report rep =
      lemma2_check(eval_drift(std::move(adj), model), eval_encoding(graph, model), model.config.sde, spec, est.drift);
  rep.lg = est.diffusion;
  return rep;
}

NoisyGraphResNet::NoisyGraphResNet(DriftFn drift, const SdeConfig& config, const BrownianPath& path)
    : drift_(std::move(drift)), dt_(config.dt()), g_(config.diffusion) {
  if (config.scheme != Scheme::EulerMaruyama)
    throw std::invalid_argument("residual network view requires the Euler-Maruyama scheme");
  check_config_shape(config, true);
  if (path.steps() != config.steps) throw DimensionError("residual network: path length differs from steps");
  for (std::size_t j = 0; j < config.steps; ++j) {
    times_.push_back(config.time(j));
    noise_.push_back(path.increment(j));
  }
}

std::vector<Tensor> NoisyGraphResNet::forward(const Tensor& input) const {
  std::vector<Tensor> out{input};
  for (std::size_t j = 0; j < times_.size(); ++j) {
    const Tensor& h = out.back();
    if (noise_[j].shape() != h.shape()) throw DimensionError("residual layer: noise " + noise_[j].shape().str());
    const Tensor f = drift_(h, times_[j]);
    auto hv = h.values(), fv = f.values(), wv = noise_[j].values();
    std::vector<double> next(hv.size());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = (hv[i] + fv[i] * dt_) + wv[i] * g_;
    out.push_back(Tensor::from_values(h.shape(), std::move(next)));
  }
  return out;
}

double resnet_equivalence(const DriftFn& drift, const Tensor& initial, const SdeConfig& config,
                          const BrownianPath& path) {
  NoGradGuard guard;
  const NoisyGraphResNet net(drift, config, path);
  const auto layers = net.forward(initial);

  std::vector<Tensor> reference;
  if (config.diffusion > 0.0) {
    const DriftFn zero = [](const Tensor& h, double) { return Tensor::zeros(h.shape()); };
    reference = integrate(initial, drift, zero, config, path).states;
  } else {
    reference.push_back(initial);
    for (std::size_t j = 0; j < config.steps; ++j)
      reference.push_back(em_step(reference.back(), drift(reference.back(), config.time(j)), 0.0,
                                  path.increment(j), config.dt()));
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < layers.size(); ++j) {
    auto a = layers[j].values(), b = reference[j].values();
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

double resnet_equivalence(const LgnsdeModel& model, const Graph& graph, const BrownianPath& path) {
  auto adj = std::make_shared<const SparseMatrix>(graph.norm_adj);
  return resnet_equivalence(eval_drift(std::move(adj), model), eval_encoding(graph, model), model.config.sde, path);
}

namespace {

nlohmann::json bools(const std::vector<bool>& v) {
  auto j = nlohmann::json::array();
  for (bool b : v) j.push_back(b);
  return j;
}

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string s;
  for (const auto& c : cells) {
    if (!s.empty()) s += ',';
    s += c;
  }
  return s + '\n';
}

std::string num(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

}  // namespace

nlohmann::json to_json(const Lemma1Report& r) {
  return {{"check", "variance_bound"},
          {"paths", r.paths},
          {"decoder_lipschitz", r.decoder_lipschitz},
          {"slack", r.slack},
          {"t", r.t},
          {"var_latent", r.var_latent},
          {"var_latent_se", r.var_latent_se},
          {"measured", r.var_output},
          {"bound", r.bound},
          {"pass", bools(r.pass)},
          {"diffusion_bound", r.diffusion_bound},
          {"diffusion_pass", bools(r.diffusion_pass)},
          {"all_pass", r.all_pass}};
}

nlohmann::json to_json(const Lemma2Report& r) {
  return {{"check", "perturbation_bound"},
          {"epsilon", r.epsilon},
          {"trials", r.trials},
          {"lf_sampled", r.lf_sampled},
          {"lf_trajectory", r.lf_trajectory},
          {"lg", r.lg},
          {"t", r.t},
          {"measured", r.measured},
          {"bound", r.bound},
          {"pass", bools(r.pass)},
          {"all_pass", r.all_pass},
          {"verdict", r.verdict}};
}

std::string to_csv(const Lemma1Report& r) {
  std::string out = "t,var_latent,var_latent_se,measured,bound,pass,diffusion_bound,diffusion_pass\n";
  for (std::size_t i = 0; i < r.t.size(); ++i)
    out += csv_row({num(r.t[i]), num(r.var_latent[i]), num(r.var_latent_se[i]), num(r.var_output[i]),
                    num(r.bound[i]), r.pass[i] ? "1" : "0", num(r.diffusion_bound[i]),
                    r.diffusion_pass[i] ? "1" : "0"});
  return out;
}

std::string to_csv(const Lemma2Report& r) {
  std::string out = "t,measured,bound,pass\n";
  for (std::size_t i = 0; i < r.t.size(); ++i)
    out += csv_row({num(r.t[i]), num(r.measured[i]), num(r.bound[i]), r.pass[i] ? "1" : "0"});
  return out;
}

}  // namespace lgnsde::verify
