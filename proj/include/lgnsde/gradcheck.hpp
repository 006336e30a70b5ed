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
#include <string>

#include "lgnsde/sde.hpp"

namespace lgnsde {

// Frozen-path central-difference check of the full ELBO gradient on a small
// random graph. The Brownian path and the dropout stream are re-created for
// every evaluation, so the objective is a deterministic function of the
// parameters.
struct GradcheckOptions {
  std::size_t nodes = 6;
  std::size_t features = 3;
  int classes = 2;
  std::size_t hidden = 2;
  std::size_t steps = 4;
  double dropout = 0.2;
  Scheme scheme = Scheme::StochasticRungeKutta;
  double step = 1e-5;
  // |a - n| / max(|a|, |n|, floor); keeps entries whose true value is ~0
  // from dividing round-off by round-off.
  double floor = 1e-4;
};

struct GradcheckResult {
  std::uint64_t seed = 0;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_parameter;
};

double relative_error(double analytic, double numeric, double floor);

GradcheckResult elbo_gradcheck(std::uint64_t seed, const GradcheckOptions& options);

}  // namespace lgnsde
