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

#include "lgnsde/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "lgnsde/graph.hpp"
#include "lgnsde/model.hpp"
#include "lgnsde/random.hpp"

namespace lgnsde {

namespace {

constexpr std::uint64_t kGraphStream = 0x6763;
constexpr std::uint64_t kGcPathStream = 0x6770;
constexpr std::uint64_t kGcDropStream = 0x6764;

Graph random_graph(std::uint64_t seed, const GradcheckOptions& o) {
  Rng rng(derive_seed(seed, {kGraphStream}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> x(o.nodes * o.features);
  for (auto& v : x) v = normal(rng);
  std::vector<int> labels(o.nodes);
  for (std::size_t i = 0; i < o.nodes; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(o.classes));
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < o.nodes; ++u)
    for (std::size_t v = u + 1; v < o.nodes; ++v)
      if (coin(rng)) edges.emplace_back(u, v);
  Graph g = make_graph(o.nodes, o.features, std::move(x), std::move(labels), o.classes, edges);
  g.train_mask.assign(o.nodes, 0);
  for (std::size_t i = 0; i < o.nodes; i += 2) g.train_mask[i] = 1;
  g.train_mask[1] = 1;
  g.val_mask.assign(o.nodes, 0);
  g.test_mask.assign(o.nodes, 0);
  return g;
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradcheckResult elbo_gradcheck(std::uint64_t seed, const GradcheckOptions& o) {
  if (o.nodes < 2 || o.classes < 2 || o.hidden < 1 || o.features < 1)
    throw std::invalid_argument("gradcheck: graph needs >= 2 nodes, >= 2 classes, hidden >= 1, features >= 1");
  if (!(o.step > 0.0)) throw std::invalid_argument("gradcheck: step must be > 0");
  const Graph graph = random_graph(seed, o);
  const Labeling labeling = identity_labeling(graph);

  ModelConfig cfg;
  cfg.hidden = o.hidden;
  cfg.dropout = o.dropout;
  cfg.sde.steps = o.steps;
  cfg.sde.scheme = o.scheme;
  LgnsdeModel model = LgnsdeModel::init(o.features, static_cast<std::size_t>(o.classes), cfg, seed);
  // Non-zero biases so their gradients are exercised away from the origin.
  {
    Rng rng(derive_seed(seed, {kGraphStream, 1}));
    std::normal_distribution<double> normal(0.0, 0.3);
    for (Tensor* b : {&model.enc_bias, &model.drift_b1, &model.drift_b2, &model.dec_bias})
      for (auto& v : b->mutable_values()) v = normal(rng);
  }

  const BrownianPath path(derive_seed(seed, {kGcPathStream}), cfg.sde.steps, graph.n, cfg.hidden, cfg.sde.t0,
                          cfg.sde.t1);
  const auto loss = [&]() {
    Rng rng(derive_seed(seed, {kGcDropStream}));
    return scale(elbo(graph, labeling, model, path, Mode::Train, rng).elbo, -1.0);
  };

  auto params = model.named_parameters();
  for (auto& [name, p] : params) p.zero_grad();
  backward(loss());

  GradcheckResult res;
  res.seed = seed;
  NoGradGuard guard;
  for (auto& [name, p] : params) {
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + o.step;
      const double up = loss().item();
      values[i] = orig - o.step;
      const double down = loss().item();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * o.step);
      const double rel = relative_error(analytic[i], numeric, o.floor);
      res.max_abs_error = std::max(res.max_abs_error, std::abs(analytic[i] - numeric));
      if (rel >= res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_parameter = name + "[" + std::to_string(i) + "]";
      }
      ++res.entries;
    }
  }
  return res;
}

}  // namespace lgnsde
