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
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lgnsde/graph.hpp"
#include "lgnsde/model.hpp"
#include "lgnsde/training.hpp"

namespace lgnsde::app {

// Configuration problem; the message names the source, line and key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DatasetKind { Sbm, Bundle, CoraRaw };
enum class SplitKind { Auto, Bundle, Planetoid, Fraction };
enum class ModelKind { Lgnsde, Gcn, Ensemble };

struct VerifySettings {
  std::size_t paths = 10000;
  std::size_t grid_points = 8;
  std::size_t batch = 500;
  std::size_t trials = 50;
  double epsilon = 1e-2;
  std::size_t lipschitz_samples = 1000;
  std::size_t train_epochs = 0;  // train the model briefly before checking
};

struct GradcheckSettings {
  std::size_t seeds = 20;
  std::size_t nodes = 6;
  std::size_t hidden = 2;
  std::size_t steps = 4;
  double step = 1e-5;
  double threshold = 1e-4;
};

struct RunConfig {
  DatasetKind dataset = DatasetKind::Sbm;
  std::filesystem::path bundle_dir;
  std::filesystem::path cora_content;
  std::filesystem::path cora_cites;
  SbmParams sbm;
  std::optional<std::uint64_t> sbm_seed;  // defaults to the master seed

  SplitKind split = SplitKind::Auto;
  PerClassCounts counts;
  SplitFractions fractions;
  std::optional<int> ood_class;

  ModelKind model = ModelKind::Lgnsde;
  std::size_t ensemble_size = 5;
  ModelConfig lgnsde;
  std::size_t gcn_hidden = 64;
  TrainOptions train;

  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path out_dir = "out";
  std::filesystem::path checkpoint;
  std::size_t histogram_bins = 20;

  VerifySettings verify;
  GradcheckSettings gradcheck;

  // Directory containing the config file; relative paths resolve against it.
  std::filesystem::path base_dir;
};

// `key = value` lines; '#' starts a comment. Unknown or repeated keys and
// malformed values raise ConfigError("<source>:<line>: key '<k>': ...").
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

// Documented key list, one "key  default  description" line per key.
std::string config_reference();

}  // namespace lgnsde::app
