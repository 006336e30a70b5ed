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

#include "lgnsde/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "lgnsde/errors.hpp"

namespace lgnsde::metrics {

double entropy(std::span<const double> probs) {
  double total = 0.0;
  double h = 0.0;
  for (double p : probs) {
    if (p < 0.0 || !std::isfinite(p)) throw std::invalid_argument("entropy: probabilities must be finite and >= 0");
    total += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("entropy: row sums to " + std::to_string(total));
  return h;
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

double binary_auroc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) throw std::invalid_argument("binary_auroc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos = 0.0;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share their mean.
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) {
        rank_sum += midrank;
        pos += 1.0;
      }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw UndefinedMetricError("AUROC needs both positive and negative samples");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double micro_auroc(const Matrix& probs, std::span<const int> labels) {
  if (labels.size() != probs.rows) throw std::invalid_argument("micro_auroc: label count differs from rows");
  if (probs.rows == 0) throw UndefinedMetricError("micro_auroc: no samples");
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw UndefinedMetricError("micro_auroc: need at least two distinct labels");

  std::vector<std::uint8_t> indicator(probs.data.size());
  for (std::size_t r = 0; r < probs.rows; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= probs.cols)
      throw std::invalid_argument("micro_auroc: label outside class range");
    indicator[r * probs.cols + static_cast<std::size_t>(labels[r])] = 1;
  }
  return binary_auroc(probs.data, indicator);
}

double aurc(std::span<const double> confidence, std::span<const std::uint8_t> correct) {
  if (confidence.size() != correct.size()) throw std::invalid_argument("aurc: size mismatch");
  if (confidence.empty()) throw std::invalid_argument("aurc: empty input");
  std::vector<std::size_t> order(confidence.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return confidence[a] > confidence[b]; });
  double errors = 0.0;
  double area = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!correct[order[k]]) errors += 1.0;
    area += errors / static_cast<double>(k + 1);
  }
  return area / static_cast<double>(order.size());
}

OodBlock ood_evaluate(const Matrix& probs, std::span<const int> labels, std::span<const std::uint8_t> is_ood) {
  if (labels.size() != probs.rows || is_ood.size() != probs.rows)
    throw std::invalid_argument("ood_evaluate: label/flag count differs from rows");
  std::vector<double> h(probs.rows);
  std::vector<double> conf(probs.rows);
  std::vector<std::uint8_t> correct(probs.rows);
  double sum_in = 0.0, sum_ood = 0.0, n_in = 0.0, n_ood = 0.0;
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const auto row = probs.row(r);
    h[r] = entropy(row);
    const std::size_t pred = argmax(row);
    conf[r] = row[pred];
    if (is_ood[r]) {
      sum_ood += h[r];
      n_ood += 1.0;
      correct[r] = 0;
    } else {
      sum_in += h[r];
      n_in += 1.0;
      correct[r] = static_cast<int>(pred) == labels[r] ? 1 : 0;
    }
  }
  if (n_in == 0.0 || n_ood == 0.0) throw UndefinedMetricError("ood_evaluate: need both in-distribution and OOD rows");
  OodBlock b;
  b.auroc_ood = binary_auroc(h, is_ood);
  b.aurc_ood = aurc(conf, correct);
  b.mean_entropy_in = sum_in / n_in;
  b.mean_entropy_ood = sum_ood / n_ood;
  return b;
}

EvalReport evaluate(const Matrix& probs, std::span<const int> labels) {
  if (labels.size() != probs.rows) throw std::invalid_argument("evaluate: label count differs from rows");
  if (probs.rows == 0) throw std::invalid_argument("evaluate: no samples");
  EvalReport rep;
  rep.num_samples = probs.rows;
  std::vector<double> conf(probs.rows);
  std::vector<std::uint8_t> correct(probs.rows);
  double h_ok = 0.0, h_bad = 0.0, n_ok = 0.0, n_bad = 0.0;
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const auto row = probs.row(r);
    const std::size_t pred = argmax(row);
    conf[r] = row[pred];
    correct[r] = static_cast<int>(pred) == labels[r] ? 1 : 0;
    const double h = entropy(row);
    if (correct[r]) {
      h_ok += h;
      n_ok += 1.0;
    } else {
      h_bad += h;
      n_bad += 1.0;
    }
  }
  rep.accuracy = n_ok / static_cast<double>(probs.rows);
  rep.micro_auroc = micro_auroc(probs, labels);
  rep.aurc = aurc(conf, correct);
  if (n_ok > 0.0) rep.mean_entropy_correct = h_ok / n_ok;
  if (n_bad > 0.0) rep.mean_entropy_incorrect = h_bad / n_bad;
  return rep;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["num_samples"] = r.num_samples;
  j["accuracy"] = r.accuracy;
  j["micro_auroc"] = r.micro_auroc;
  j["aurc"] = r.aurc;
  j["mean_entropy_correct"] = r.mean_entropy_correct ? nlohmann::json(*r.mean_entropy_correct) : nlohmann::json();
  j["mean_entropy_incorrect"] = r.mean_entropy_incorrect ? nlohmann::json(*r.mean_entropy_incorrect) : nlohmann::json();
  j["aurc_convention"] = kAurcConvention;
  if (r.ood) {
    j["auroc_ood"] = r.ood->auroc_ood;
    j["aurc_ood"] = r.ood->aurc_ood;
    j["mean_entropy_in"] = r.ood->mean_entropy_in;
    j["mean_entropy_ood"] = r.ood->mean_entropy_ood;
  }
  return j;
}

std::string entropy_histogram_csv(std::span<const double> entropies, std::span<const std::uint8_t> second_group,
                                  double max_entropy, std::size_t bins, const std::string& first_name,
                                  const std::string& second_name) {
  if (bins == 0 || !(max_entropy > 0.0)) throw std::invalid_argument("entropy histogram: need bins > 0 and range > 0");
  std::vector<std::size_t> first(bins, 0), second(bins, 0);
  const double width = max_entropy / static_cast<double>(bins);
  for (std::size_t i = 0; i < entropies.size(); ++i) {
    auto b = static_cast<std::size_t>(std::max(0.0, entropies[i]) / width);
    b = std::min(b, bins - 1);
    (second_group[i] ? second : first)[b] += 1;
  }
  std::ostringstream out;
  out.precision(17);
  out << "bin_left,bin_right," << first_name << ',' << second_name << '\n';
  for (std::size_t b = 0; b < bins; ++b)
    out << width * static_cast<double>(b) << ',' << width * static_cast<double>(b + 1) << ',' << first[b] << ','
        << second[b] << '\n';
  return out.str();
}

}  // namespace lgnsde::metrics
