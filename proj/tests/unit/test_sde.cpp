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

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "lgnsde/errors.hpp"
#include "lgnsde/sde.hpp"
#include "sde_oracles.hpp"
#include "test_support.hpp"

namespace lgnsde {
namespace {

using testing::moment_error;

Tensor zero_drift(const Tensor& h, double) { return Tensor::zeros(h.shape()); }

SdeConfig config(std::size_t steps, double g, Scheme scheme) {
  SdeConfig c;
  c.steps = steps;
  c.diffusion = g;
  c.scheme = scheme;
  return c;
}

TEST(SdeConfig, Validation) {
  SdeConfig c;
  EXPECT_NO_THROW(c.validate());
  c.t1 = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.steps = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.diffusion = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(EmStep, DirectSubstitution) {
  const auto out = em_step(Tensor::scalar(1.0), Tensor::scalar(2.0), 0.5, Tensor::scalar(0.3), 0.1);
  EXPECT_NEAR(out.item(), 1.35, 1e-15);
}

TEST(EmStep, NoDriftNoNoiseIsIdentity) {
  const auto h = testing::random_tensor({3, 2}, 1);
  const auto out = em_step(h, Tensor::zeros({3, 2}), 0.0, testing::random_tensor({3, 2}, 2), 0.1);
  EXPECT_TRUE(std::equal(out.values().begin(), out.values().end(), h.values().begin()));
}

TEST(EmStep, ShapeMismatch) {
  EXPECT_THROW(em_step(Tensor::zeros({2, 2}), Tensor::zeros({2, 1}), 1.0, Tensor::zeros({2, 2}), 0.1), DimensionError);
}

TEST(EmStep, TelescopesWithoutDrift) {
  const BrownianPath path(5, 10, 3, 2);
  const double g = 0.7;
  Tensor h = testing::random_tensor({3, 2}, 3);
  std::vector<double> expected(h.values().begin(), h.values().end());
  for (std::size_t j = 0; j < 10; ++j) {
    h = em_step(h, Tensor::zeros({3, 2}), g, path.increment(j), path.dt());
    for (std::size_t i = 0; i < 6; ++i) expected[i] = expected[i] + g * path.increment(j).values()[i];
  }
  EXPECT_EQ(std::vector<double>(h.values().begin(), h.values().end()), expected);
}

TEST(SrkStep, ConstantDriftEqualsEm) {
  const auto h = testing::random_tensor({4, 3}, 4);
  const auto c = testing::random_tensor({4, 3}, 5);
  const auto dw = testing::random_tensor({4, 3}, 6);
  const auto srk = srk_step(h, [&](const Tensor&, double) { return c; }, 0.9, dw, 0.05, 0.2);
  const auto em = em_step(h, c, 0.9, dw, 0.05);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(srk.values()[i], em.values()[i], 1e-15);
}

TEST(SrkStep, LocalErrorIsThirdOrder) {
  // g = 0, F = -H: one step gives (1 - dt + dt^2/2) H; exp(-dt) differs by dt^3/6.
  const auto decay = [](const Tensor& h, double) { return scale(h, -1.0); };
  double previous = 0.0;
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) {
    const auto out = srk_step(Tensor::scalar(1.0), decay, 0.0, Tensor::scalar(0.0), dt, 0.0);
    const double err = std::abs(out.item() - std::exp(-dt));
    EXPECT_NEAR(err / (dt * dt * dt), 1.0 / 6.0, 0.02);
    if (previous > 0.0) { EXPECT_NEAR(previous / err, 8.0, 0.5); }
    previous = err;
  }
}

TEST(BrownianPath, DeterministicAndSeedSensitive) {
  const BrownianPath a(11, 4, 3, 2), b(11, 4, 3, 2), c(12, 4, 3, 2);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_TRUE(std::equal(a.increment(j).values().begin(), a.increment(j).values().end(),
                           b.increment(j).values().begin()));
    EXPECT_NE(a.increment(j).values()[0], c.increment(j).values()[0]);
  }
}

TEST(BrownianPath, IncrementVarianceIsDt) {
  const BrownianPath path(3, 8, 100, 100, 0.0, 2.0);
  for (std::size_t j = 0; j < path.steps(); ++j) {
    const auto v = path.increment(j).values();
    const double m = static_cast<double>(v.size());
    double s2 = 0.0, mean = 0.0;
    for (double x : v) mean += x;
    mean /= m;
    for (double x : v) s2 += x * x;
    // E[x^2] = dt, Var[x^2] = 2 dt^2.
    EXPECT_NEAR(s2 / m, path.dt(), 3.0 * std::sqrt(2.0 / m) * path.dt());
    EXPECT_NEAR(mean, 0.0, 3.0 * std::sqrt(path.dt() / m));
  }
}

TEST(BrownianPath, PermutedRowsMoveRows) {
  const BrownianPath path(2, 3, 4, 2);
  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  const auto p = path.permuted_rows(perm);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(p.increment(j).at(i, c), path.increment(j).at(perm[i], c));
}

TEST(Integrate, FirstStateIsInitialAndKlNonNegative) {
  const auto h0 = testing::random_tensor({3, 2}, 7);
  const auto post = [](const Tensor& h, double t) { return add(scale(h, -0.5), Tensor::constant(h.shape(), t)); };
  const auto rec = integrate(h0, post, zero_drift, config(8, 1.0, Scheme::StochasticRungeKutta), BrownianPath(1, 8, 3, 2));
  ASSERT_EQ(rec.states.size(), 9u);
  EXPECT_EQ(rec.states.front().node(), h0.node());
  EXPECT_GE(rec.kl.item(), 0.0);
}

TEST(Integrate, IdenticalDriftsGiveZeroKl) {
  const auto drift = [](const Tensor& h, double) { return activate(h, Activation::Tanh); };
  for (auto scheme : {Scheme::EulerMaruyama, Scheme::StochasticRungeKutta}) {
    const auto rec = integrate(testing::random_tensor({5, 3}, 8), drift, drift, config(16, 1.0, scheme),
                               BrownianPath(2, 16, 5, 3));
    EXPECT_EQ(rec.kl.item(), 0.0);
  }
}

TEST(Integrate, ConstantOffsetKlClosedForm) {
  const double delta = 0.37;
  const std::size_t n = 5, d = 3;
  for (double g : {0.5, 1.0, 2.0}) {
    SdeConfig c = config(64, g, Scheme::StochasticRungeKutta);
    c.t0 = 0.25;
    c.t1 = 1.75;
    const auto prior = [](const Tensor& h, double) { return scale(h, -0.8); };
    const auto post = [&](const Tensor& h, double t) { return add(prior(h, t), Tensor::constant(h.shape(), delta)); };
    const auto rec = integrate(testing::random_tensor({n, d}, 9), post, prior, c, BrownianPath(3, 64, n, d, 0.25, 1.75));
    const double expected = 0.5 * static_cast<double>(n * d) * (delta / g) * (delta / g) * (c.t1 - c.t0);
    EXPECT_LT(std::abs(rec.kl.item() - expected) / expected, 1e-3);
  }
}

TEST(Integrate, KlDecreasesAsDiffusionGrows) {
  const auto prior = [](const Tensor& h, double) { return scale(h, -1.0); };
  const auto post = [&](const Tensor& h, double t) {
    return add(prior(h, t), Tensor::constant(h.shape(), std::sin(3.0 * t) + 0.5));
  };
  double previous = std::numeric_limits<double>::infinity();
  for (double g : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0}) {
    const double kl = integrate(Tensor::zeros({2, 2}), post, prior, config(16, g, Scheme::EulerMaruyama),
                                BrownianPath(4, 16, 2, 2))
                          .kl.item();
    EXPECT_LT(kl, previous);
    previous = kl;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(Integrate, KlQuadratureConverges) {
  const auto prior = [](const Tensor& h, double) { return scale(h, -1.0); };
  const auto post = [&](const Tensor& h, double t) {
    return add(prior(h, t), Tensor::constant(h.shape(), std::cos(3.0 * t)));
  };
  std::vector<double> kl;
  for (std::size_t steps : {8, 16, 32, 64, 128}) {
    kl.push_back(integrate(Tensor::zeros({2, 1}), post, prior, config(steps, 1.0, Scheme::StochasticRungeKutta),
                           BrownianPath(5, steps, 2, 1))
                     .kl.item());
  }
  for (std::size_t i = 0; i + 2 < kl.size(); ++i) {
    const double ratio = std::abs(kl[i] - kl[i + 1]) / std::abs(kl[i + 1] - kl[i + 2]);
    EXPECT_GT(ratio, 1.7) << i;  // observed order >= 1 (ratio 2)
  }
}

TEST(Integrate, KlGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto w = testing::random_tensor({3, 3}, seed, true);
    auto b = testing::random_tensor({1, 3}, seed + 50, true);
    for (auto* p : {&w, &b}) {
      auto vals = p->mutable_values();
      for (auto& v : vals) v *= 0.3;
    }
    const auto h0 = testing::random_tensor({4, 3}, seed + 100);
    const BrownianPath path(seed, 6, 4, 3);
    const auto post = [&](const Tensor& h, double) { return add_row_bias(activate(matmul(h, w), Activation::Tanh), b); };
    PriorDrift prior{PriorDrift::Kind::OrnsteinUhlenbeck, 0.2, 1.0};
    const auto loss = [&] { return integrate(h0, post, prior, config(6, 0.8, Scheme::StochasticRungeKutta), path).kl; };
    EXPECT_LT(testing::max_gradient_error({w, b}, loss), 1e-4) << seed;
  }
}

TEST(Integrate, DivergenceNamesStep) {
  const auto post = [](const Tensor& h, double t) {
    return Tensor::constant(h.shape(), t > 0.2 ? std::numeric_limits<double>::quiet_NaN() : 0.0);
  };
  try {
    integrate(Tensor::zeros({2, 2}), post, zero_drift, config(10, 1.0, Scheme::EulerMaruyama), BrownianPath(0, 10, 2, 2));
    FAIL();
  } catch (const DivergedError& e) {
    EXPECT_EQ(e.step(), 4u);  // first NaN drift at t = 0.3 produces state 4
  }
}

TEST(Integrate, PathShapeMustMatch) {
  EXPECT_THROW(integrate(Tensor::zeros({2, 2}), zero_drift, zero_drift, config(4, 1.0, Scheme::EulerMaruyama),
                         BrownianPath(0, 5, 2, 2)),
               DimensionError);
}

TEST(Integrate, CoupledPathsDeviateByDriftAlone) {
  const double lambda = -0.8;
  const auto linear = [&](const Tensor& h, double) { return scale(h, lambda); };
  const auto h0 = testing::random_tensor({3, 3}, 10);
  const auto h1 = add(h0, scale(testing::random_tensor({3, 3}, 11), 1e-2));
  const BrownianPath path(6, 32, 3, 3);
  const auto c = config(32, 1.0, Scheme::StochasticRungeKutta);
  const auto a = integrate(h0, linear, zero_drift, c, path);
  const auto b = integrate(h1, linear, zero_drift, c, path);
  const double factor = std::pow(1.0 + lambda * c.dt() + 0.5 * lambda * lambda * c.dt() * c.dt(), 32);
  for (std::size_t i = 0; i < 9; ++i) {
    const double d0 = h1.values()[i] - h0.values()[i];
    EXPECT_NEAR(b.states.back().values()[i] - a.states.back().values()[i], factor * d0, 1e-14);
  }
}

TEST(PriorDrift, ConstantAndMeanReverting) {
  const auto h = Tensor::from_values({1, 2}, {1.0, -1.0});
  const PriorDrift constant{PriorDrift::Kind::Constant, 0.5, 1.0};
  const PriorDrift ou{PriorDrift::Kind::OrnsteinUhlenbeck, 0.5, 2.0};
  EXPECT_EQ(constant(h, 0.0).values()[1], 0.5);
  EXPECT_DOUBLE_EQ(ou(h, 0.0).values()[0], -1.0);
  EXPECT_DOUBLE_EQ(ou(h, 0.0).values()[1], 3.0);
}

TEST(WeakConvergence, EulerMaruyamaErrorHalves) {
  for (std::size_t steps : {10, 20, 40, 80}) {
    const double ratio = moment_error(Scheme::EulerMaruyama, steps) / moment_error(Scheme::EulerMaruyama, 2 * steps);
    EXPECT_NEAR(ratio, 2.0, 0.6) << steps;
  }
}

TEST(WeakConvergence, SrkBeatsEulerMaruyama) {
  for (std::size_t steps : {5, 10, 20, 40})
    EXPECT_LT(moment_error(Scheme::StochasticRungeKutta, steps), moment_error(Scheme::EulerMaruyama, steps));
}

TEST(OuMoments, MonteCarloWithinThreeStandardErrors) {
  const std::size_t m = 10000;
  const double h0 = 1.0;
  const auto drift = [](const Tensor& h, double) { return scale(h, -1.0); };
  const auto rec = integrate(Tensor::constant({m, 1}, h0), drift, drift, config(100, 1.0, Scheme::StochasticRungeKutta),
                             BrownianPath(17, 100, m, 1));
  const auto v = rec.states.back().values();
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(m);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) m2 += (x - mean) * (x - mean), m4 += std::pow(x - mean, 4);
  m2 /= static_cast<double>(m - 1);
  m4 /= static_cast<double>(m);
  EXPECT_NEAR(mean, std::exp(-1.0) * h0, 3.0 * std::sqrt(m2 / static_cast<double>(m)));
  EXPECT_NEAR(m2, (1.0 - std::exp(-2.0)) / 2.0, 3.0 * std::sqrt((m4 - m2 * m2) / static_cast<double>(m)));
}

}  // namespace
}  // namespace lgnsde
