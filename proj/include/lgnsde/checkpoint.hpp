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

#include <filesystem>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lgnsde/model.hpp"

namespace lgnsde {

// Versioned JSON checkpoint: {"format": "lgnsde-checkpoint", "version": 1,
// "kind": "lgnsde" | "gcn_ensemble", "config": {...},
// "tensors": {name: {"shape": [r, c], "values": [...]}}}. Doubles are
// written in shortest round-trip form, so save/load is exact.
using Checkpoint = std::variant<LgnsdeModel, std::vector<GcnModel>>;

inline constexpr int kCheckpointVersion = 1;

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lgnsde
