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

#include "lgnsde/cli.hpp"

#include <cstdlib>
#include <exception>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "lgnsde/commands.hpp"
#include "lgnsde/config.hpp"
#include "lgnsde/errors.hpp"

namespace lgnsde::app {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent graph neural SDE node classifier"};
  app.footer("Config keys (key = value, '#' comments):\n" + config_reference());
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("command", command, "generate | train | eval | ood | verify | gradcheck")
      ->required()
      ->check(CLI::IsMember({"generate", "train", "eval", "ood", "verify", "gradcheck"}));
  app.add_option("--config", config_path, "key=value configuration file")->required();
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out_dir, "report directory (overrides LGNSDE_OUT_DIR and the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    std::filesystem::path dir;
    if (!out_dir.empty()) {
      dir = out_dir;
    } else if (const char* env = std::getenv("LGNSDE_OUT_DIR"); env && *env) {
      dir = env;
    } else {
      dir = cfg.out_dir.is_absolute() || cfg.base_dir.empty() ? cfg.out_dir : cfg.base_dir / cfg.out_dir;
    }
    const CommandResult res = run_command(*parse_command(command), cfg, dir);
    out << res.summary << '\n';
    return res.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
  } catch (const FormatError& e) {
    err << "input error: " << e.what() << '\n';
  } catch (const DivergedError& e) {
    err << "diverged: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitUsage;
}

}  // namespace lgnsde::app
