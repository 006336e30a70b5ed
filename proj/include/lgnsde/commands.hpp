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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lgnsde/config.hpp"

namespace lgnsde::app {

enum class Command { Generate, Train, Eval, Ood, Verify, Gradcheck };

std::optional<Command> parse_command(std::string_view name);
const char* command_name(Command c);

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

struct CommandResult {
  int exit_code = kExitOk;
  std::string summary;  // one line for stdout
  std::vector<std::filesystem::path> written;
};

// Runs one subcommand and writes its reports under `out_dir`. Reports are a
// pure function of the config, the input files and the seed; wall-clock
// measurements go to timing.csv only.
CommandResult run_command(Command command, const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace lgnsde::app
