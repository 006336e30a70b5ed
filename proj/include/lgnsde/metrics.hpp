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

#include <nlohmann/json.hpp>

#include "lgnsde/matrix.hpp"

namespace lgnsde::metrics {

// Natural-log entropy of a probability row; 0 log 0 := 0.
double entropy(std::span<const double> probs);

std::size_t argmax(std::span<const double> row);

// ROC area via the Mann-Whitney rank statistic with midranks for ties.
// Throws UndefinedMetricError unless both classes are present.
double binary_auroc(std::span<const double> scores, std::span<const std::uint8_t> positive);

// Pools all n*C one-vs-rest (probability, indicator) pairs into one ROC.
double micro_auroc(const Matrix& probs, std::span<const int> labels);

// Mean selective risk as coverage grows through samples sorted by
// descending confidence (ties keep index order).
double aurc(std::span<const double> confidence, std::span<const std::uint8_t> correct);

struct OodBlock {
  double auroc_ood = 0.0;  // entropy as OOD score, OOD = positive
  double aurc_ood = 0.0;   // OOD rows always count as errors
  double mean_entropy_in = 0.0;
  double mean_entropy_ood = 0.0;
};

// `labels` are in-distribution class indices (ignored where is_ood).
OodBlock ood_evaluate(const Matrix& probs, std::span<const int> labels, std::span<const std::uint8_t> is_ood);

struct EvalReport {
  std::size_t num_samples = 0;
  double accuracy = 0.0;
  double micro_auroc = 0.0;
  double aurc = 0.0;
  std::optional<double> mean_entropy_correct;
  std::optional<double> mean_entropy_incorrect;
  std::optional<OodBlock> ood;
};

// Metrics over every row of `probs`; all labels must be valid classes.
EvalReport evaluate(const Matrix& probs, std::span<const int> labels);

// Recorded in every serialized report.
inline constexpr const char* kAurcConvention =
    "confidence=max predictive probability; risk(k)=errors in top-k/k; aurc=mean_k risk(k)";

nlohmann::json to_json(const EvalReport& report);

// CSV with columns bin_left,bin_right,<first_name>,<second_name>; bins
// span [0, max_entropy].
std::string entropy_histogram_csv(std::span<const double> entropies, std::span<const std::uint8_t> second_group,
                                  double max_entropy, std::size_t bins, const std::string& first_name,
                                  const std::string& second_name);

}  // namespace lgnsde::metrics
