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

#include "lgnsde/training.hpp"

#include <chrono>
#include <cmath>

#include "lgnsde/errors.hpp"
#include "lgnsde/random.hpp"

namespace lgnsde {

namespace {

constexpr std::uint64_t kPathStream = 1;
constexpr std::uint64_t kDropoutStream = 2;
constexpr std::uint64_t kValidationStream = 3;

using Clock = std::chrono::steady_clock;

bool any_set(const Mask& m) {
  for (auto v : m)
    if (v) return true;
  return false;
}

bool parameters_finite(const std::vector<Tensor>& params) {
  for (const auto& p : params)
    if (!all_finite(p.values())) return false;
  return true;
}

// Early-stopping bookkeeping shared by both trainers.
struct Tracker {
  double best_accuracy = -1.0;
  std::size_t since_best = 0;

  // True when the new score is the best so far.
  bool update(double accuracy, std::size_t stride) {
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      since_best = 0;
      return true;
    }
    since_best += stride;
    return false;
  }
};

}  // namespace

double effective_kl_weight(const Graph& graph, const ModelConfig& config) {
  if (config.kl_weight) return *config.kl_weight;
  return static_cast<double>(mask_indices(graph.train_mask).size()) / static_cast<double>(graph.n * config.hidden);
}

MaskedScores score_predictions(const Matrix& probs, const Labeling& labeling, const Mask& mask) {
  MaskedScores s;
  double correct = 0.0;
  for (std::size_t i = 0; i < probs.rows; ++i) {
    if (!mask[i]) continue;
    const int y = labeling.labels[i];
    if (y < 0 || y >= static_cast<int>(probs.cols)) continue;
    const auto row = probs.row(i);
    std::size_t arg = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[arg]) arg = c;
    correct += arg == static_cast<std::size_t>(y) ? 1.0 : 0.0;
    s.nll -= std::log(std::max(row[static_cast<std::size_t>(y)], 1e-300));
    ++s.count;
  }
  if (s.count > 0) {
    s.accuracy = correct / static_cast<double>(s.count);
    s.nll /= static_cast<double>(s.count);
  }
  return s;
}

LgnsdeTraining train_lgnsde(const Graph& graph, const Labeling& labeling, LgnsdeModel model,
                            const TrainOptions& options) {
  auto params = model.parameters();
  AdamState adam(params, AdamOptions{.lr = options.lr});
  const bool validate = any_set(graph.val_mask);
  const std::size_t stride = std::max<std::size_t>(1, options.eval_every);
  const auto& cfg = model.config.sde;
  const double kl_weight = effective_kl_weight(graph, model.config);

  LgnsdeTraining out{model.clone(), {}};
  Tracker tracker;
  const auto start = Clock::now();
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    Rng dropout_rng(derive_seed(options.seed, {kDropoutStream, epoch}));
    const BrownianPath path(derive_seed(options.seed, {kPathStream, epoch}), cfg.steps, graph.n,
                            model.config.hidden, cfg.t0, cfg.t1);
    try {
      const auto terms = elbo(graph, labeling, model, path, Mode::Train, dropout_rng);
      const Tensor loss = kl_weight == 1.0 ? scale(terms.elbo, -1.0)
                                           : sub(scale(terms.kl, kl_weight), terms.log_likelihood);
      backward(loss);
      adam_step(params, adam);
      zero_grads(params);
      rec.train_loss = loss.item();
      rec.kl = terms.kl.item();
      if (!std::isfinite(rec.train_loss) || !parameters_finite(params)) throw DivergedError(0);

      if (validate && epoch % stride == 0) {
        const auto pred = predict(graph, model, options.val_mc_samples, derive_seed(options.seed, {kValidationStream}));
        const auto scores = score_predictions(pred.probs, labeling, graph.val_mask);
        rec.val_accuracy = scores.accuracy;
        rec.val_nll = scores.nll;
        if (tracker.update(scores.accuracy, stride)) {
          out.model = model.clone();
          out.log.best_epoch = epoch;
        }
      }
    } catch (const DivergedError& e) {
      out.log.diverged = true;
      out.log.diverged_at_step = e.step();
      break;
    }
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    out.log.epochs.push_back(rec);
    if (validate && tracker.since_best >= options.patience) {
      out.log.early_stopped = true;
      break;
    }
  }
  if (!validate && !out.log.diverged) {
    out.model = model.clone();
    out.log.best_epoch = out.log.epochs.size();
  }
  return out;
}

GcnTraining train_gcn(const Graph& graph, const Labeling& labeling, GcnModel model, const TrainOptions& options) {
  auto params = model.parameters();
  AdamState adam(params, AdamOptions{.lr = options.lr});
  const bool validate = any_set(graph.val_mask);
  const std::size_t stride = std::max<std::size_t>(1, options.eval_every);

  GcnTraining out{model.clone(), {}};
  Tracker tracker;
  const auto start = Clock::now();
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    Rng dropout_rng(derive_seed(options.seed, {kDropoutStream, epoch}));
    const Tensor logits = gcn_forward(graph, model, Mode::Train, dropout_rng);
    const Tensor loss = masked_cross_entropy(logits, labeling.labels, graph.train_mask);
    backward(loss);
    adam_step(params, adam);
    zero_grads(params);
    rec.train_loss = loss.item();
    if (!std::isfinite(rec.train_loss) || !parameters_finite(params)) {
      out.log.diverged = true;
      break;
    }
    if (validate && epoch % stride == 0) {
      const auto scores = score_predictions(gcn_predict(graph, model).probs, labeling, graph.val_mask);
      rec.val_accuracy = scores.accuracy;
      rec.val_nll = scores.nll;
      if (tracker.update(scores.accuracy, stride)) {
        out.model = model.clone();
        out.log.best_epoch = epoch;
      }
    }
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    out.log.epochs.push_back(rec);
    if (validate && tracker.since_best >= options.patience) {
      out.log.early_stopped = true;
      break;
    }
  }
  if (!validate && !out.log.diverged) {
    out.model = model.clone();
    out.log.best_epoch = out.log.epochs.size();
  }
  return out;
}

}  // namespace lgnsde
