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
#include <vector>

#include "lgnsde/adam.hpp"
#include "lgnsde/graph.hpp"
#include "lgnsde/model.hpp"

namespace lgnsde {

struct TrainOptions {
  std::size_t epochs = 300;
  std::size_t patience = 50;  // epochs without val-accuracy gain before stopping
  double lr = 0.01;
  std::size_t val_mc_samples = 4;
  std::size_t eval_every = 1;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // minimized objective: kl_weight * kl - log_likelihood, or mean NLL for GCN
  double kl = 0.0;
  std::optional<double> val_accuracy;
  std::optional<double> val_nll;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
  bool diverged = false;
  std::optional<std::size_t> diverged_at_step;
};

double effective_kl_weight(const Graph& graph, const ModelConfig& config);

struct LgnsdeTraining {
  LgnsdeModel model;  // best-by-validation snapshot
  TrainLog log;
};

// Adam on -ELBO with one fresh Brownian path per epoch. When the solver
// diverges training stops and the last good snapshot is returned with
// `log.diverged` set.
LgnsdeTraining train_lgnsde(const Graph& graph, const Labeling& labeling, LgnsdeModel model,
                            const TrainOptions& options);

struct GcnTraining {
  GcnModel model;
  TrainLog log;
};

GcnTraining train_gcn(const Graph& graph, const Labeling& labeling, GcnModel model, const TrainOptions& options);

// Classification accuracy and mean NLL over the rows selected by `mask`
// whose label is a valid class.
struct MaskedScores {
  double accuracy = 0.0;
  double nll = 0.0;
  std::size_t count = 0;
};
MaskedScores score_predictions(const Matrix& probs, const Labeling& labeling, const Mask& mask);

}  // namespace lgnsde
