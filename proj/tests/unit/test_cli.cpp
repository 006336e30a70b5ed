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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "lgnsde/cli.hpp"
#include "test_support.hpp"

namespace lgnsde::app {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::read_file;
using testing::scratch_dir;
using testing::write_file;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lgnsde");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

const char* kSmall =
    "sbm_classes = 3\n"
    "sbm_nodes_per_class = 12\n"
    "sbm_p_in = 0.4\n"
    "sbm_p_out = 0.02\n"
    "sbm_feature_dim = 6\n"
    "hidden = 8\n"
    "steps = 4\n"
    "mc_samples = 4\n"
    "epochs = 6\n"
    "train_fraction = 0.3\n"
    "val_fraction = 0.2\n"
    "test_fraction = 0.5\n"
    "seed = 5\n";

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  write_file(dir / name, text);
  return dir / name;
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto dir = scratch_dir("cli_usage");
  const auto cfg = write_config(dir, "run.cfg", kSmall);
  EXPECT_EQ(cli({"fly", "--config", cfg.string()}).code, 2);
  EXPECT_EQ(cli({"train"}).code, 2);
  EXPECT_EQ(cli({"train", "--config", (dir / "absent.cfg").string()}).code, 2);
  const auto bad = write_config(dir, "bad.cfg", "hidden = 8\nwidth = 3\n");
  const auto r = cli({"train", "--config", bad.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.cfg:2:"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, EvalNeedsAnExistingCheckpoint) {
  const auto dir = scratch_dir("cli_eval_missing");
  const auto cfg = write_config(dir, "run.cfg", kSmall);
  EXPECT_EQ(cli({"eval", "--config", cfg.string(), "--out", (dir / "o").string()}).code, 2);
  const auto cfg2 = write_config(dir, "run2.cfg", std::string(kSmall) + "checkpoint = nowhere.json\n");
  const auto r = cli({"eval", "--config", cfg2.string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nowhere.json"), std::string::npos) << r.err;
}

TEST(Cli, OodWithoutHeldOutClassIsUsageError) {
  const auto dir = scratch_dir("cli_ood_missing");
  EXPECT_EQ(cli({"ood", "--config", write_config(dir, "run.cfg", kSmall).string()}).code, 2);
}

TEST(Cli, GenerateThenTrainAndEvalFromBundle) {
  const auto dir = scratch_dir("cli_bundle");
  const auto gen_cfg = write_config(dir, "gen.cfg", std::string(kSmall) + "out_dir = gen\n");
  const auto g = cli({"generate", "--config", gen_cfg.string()});
  ASSERT_EQ(g.code, 0) << g.err;
  ASSERT_TRUE(fs::exists(dir / "gen" / "bundle" / "nodes.tsv"));
  const auto gen = read_json(dir / "gen" / "generate.json");
  EXPECT_EQ(gen.at("dataset").at("nodes"), 36);

  // Move the bundle so nothing outside it can be consulted.
  fs::rename(dir / "gen" / "bundle", dir / "data");
  fs::remove_all(dir / "gen");
  const auto train_cfg = write_config(dir, "train.cfg",
                                      "dataset = bundle\nbundle_dir = data\nhidden = 8\nsteps = 4\n"
                                      "mc_samples = 4\nepochs = 6\nout_dir = run\n");
  const auto t = cli({"train", "--config", train_cfg.string()});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto rep = read_json(dir / "run" / "train.json");
  EXPECT_EQ(rep.at("dataset").at("split"), "bundle");
  EXPECT_EQ(rep.at("dataset").at("train"), gen.at("dataset").at("train"));
  EXPECT_EQ(rep.at("dataset").at("test"), gen.at("dataset").at("test"));
  EXPECT_EQ(rep.at("test").at("num_samples"), gen.at("dataset").at("test"));
  for (const char* f : {"checkpoint.json", "train_log.csv", "predictions.csv", "entropy.csv", "timing.csv"})
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  EXPECT_EQ(read_file(dir / "run" / "train_log.csv").substr(0, 44), "member,epoch,train_loss,kl,val_accuracy,val_");

  const auto eval_cfg = write_config(dir, "eval.cfg",
                                     "dataset = bundle\nbundle_dir = data\nhidden = 8\n"
                                     "checkpoint = run/checkpoint.json\nout_dir = ev\n");
  const auto e = cli({"eval", "--config", eval_cfg.string()});
  ASSERT_EQ(e.code, 0) << e.err;
  // eval reproduces the training run's test metrics from the checkpoint.
  EXPECT_EQ(read_json(dir / "ev" / "eval.json").at("test"), rep.at("test"));
  EXPECT_EQ(read_file(dir / "ev" / "predictions.csv"), read_file(dir / "run" / "predictions.csv"));
}

// Raw citation format with planetoid splits, on a made-up 3-topic graph.
TEST(Cli, RawCitationGraphWithPlanetoidSplit) {
  const auto dir = scratch_dir("cli_raw");
  const char* topics[] = {"Theory", "Neural_Networks", "Rule_Learning"};
  std::string content, cites;
  for (int i = 0; i < 30; ++i) {
    const int c = i % 3;
    content += "p" + std::to_string(100 + i);
    for (int k = 0; k < 6; ++k) content += (k / 2 == c || (i + k) % 5 == 0) ? "\t1" : "\t0";
    content += std::string("\t") + topics[c] + "\n";
    cites += "p" + std::to_string(100 + i) + "\tp" + std::to_string(100 + (i + 3) % 30) + "\n";
  }
  cites += "p100\tmissing\n";
  write_file(dir / "raw" / "x.content", content);
  write_file(dir / "raw" / "x.cites", cites);
  const auto cfg = write_config(dir, "raw.cfg",
                                "dataset = cora_raw\ncora_content = raw/x.content\ncora_cites = raw/x.cites\n"
                                "train_per_class = 2\nval_count = 6\ntest_count = 12\nhidden = 8\nsteps = 4\n"
                                "mc_samples = 4\nepochs = 5\nout_dir = run\n");
  const auto t = cli({"train", "--config", cfg.string()});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto rep = read_json(dir / "run" / "train.json");
  EXPECT_EQ(rep.at("dataset").at("nodes"), 30);
  EXPECT_EQ(rep.at("dataset").at("split"), "planetoid");
  EXPECT_EQ(rep.at("dataset").at("train"), 6);
  EXPECT_EQ(rep.at("dataset").at("val"), 6);
  EXPECT_EQ(rep.at("dataset").at("test"), 12);
  EXPECT_EQ(rep.at("dataset").at("dropped_citations"), 1);
}

TEST(Cli, OutputDirectoryPrecedence) {
  const auto dir = scratch_dir("cli_outdir");
  const auto cfg = write_config(dir, "run.cfg", std::string(kSmall) + "out_dir = from_config\n");
  ASSERT_EQ(cli({"generate", "--config", cfg.string()}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "from_config" / "generate.json"));

  ::setenv("LGNSDE_OUT_DIR", (dir / "from_env").c_str(), 1);
  ASSERT_EQ(cli({"generate", "--config", cfg.string()}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "from_env" / "generate.json"));
  ASSERT_EQ(cli({"generate", "--config", cfg.string(), "--out", (dir / "from_flag").string()}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "from_flag" / "generate.json"));
  ::unsetenv("LGNSDE_OUT_DIR");
}

TEST(Cli, SeedFlagOverridesConfig) {
  const auto dir = scratch_dir("cli_seed");
  const auto cfg = write_config(dir, "run.cfg", kSmall);
  ASSERT_EQ(cli({"generate", "--config", cfg.string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(cli({"generate", "--config", cfg.string(), "--seed", "5", "--out", (dir / "b").string()}).code, 0);
  ASSERT_EQ(cli({"generate", "--config", cfg.string(), "--seed", "6", "--out", (dir / "c").string()}).code, 0);
  EXPECT_EQ(read_file(dir / "a" / "bundle" / "nodes.tsv"), read_file(dir / "b" / "bundle" / "nodes.tsv"));
  EXPECT_NE(read_file(dir / "a" / "bundle" / "nodes.tsv"), read_file(dir / "c" / "bundle" / "nodes.tsv"));
  EXPECT_EQ(read_json(dir / "c" / "generate.json").at("seed"), 6);
}

std::vector<fs::path> report_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "timing.csv") files.push_back(fs::relative(e.path(), dir));
  std::sort(files.begin(), files.end());
  return files;
}

TEST(Cli, RepeatedRunsWriteIdenticalReports) {
  const auto dir = scratch_dir("cli_repeat");
  const auto cfg = write_config(dir, "run.cfg",
                                std::string(kSmall) + "ood_class = 1\nverify_paths = 1000\nverify_trials = 3\n"
                                                      "verify_lipschitz_samples = 50\ngradcheck_seeds = 2\n");
  for (const char* cmd : {"generate", "train", "ood", "verify", "gradcheck"}) {
    const auto a = cli({cmd, "--config", cfg.string(), "--out", (dir / cmd / "a").string()});
    const auto b = cli({cmd, "--config", cfg.string(), "--out", (dir / cmd / "b").string()});
    ASSERT_EQ(a.code, b.code) << cmd;
    EXPECT_EQ(a.out, b.out) << cmd;
    const auto fa = report_files(dir / cmd / "a"), fb = report_files(dir / cmd / "b");
    ASSERT_EQ(fa, fb) << cmd;
    ASSERT_FALSE(fa.empty()) << cmd;
    for (const auto& f : fa)
      EXPECT_EQ(read_file(dir / cmd / "a" / f), read_file(dir / cmd / "b" / f)) << cmd << " " << f;
  }
}

TEST(Cli, GradcheckOnDefaultTinyConfigPasses) {
  const auto dir = scratch_dir("cli_gradcheck");
  const auto cfg = write_config(dir, "run.cfg", "");
  const auto r = cli({"gradcheck", "--config", cfg.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const auto j = read_json(dir / "gradcheck.json");
  EXPECT_LT(j.at("max_rel_error").get<double>(), 1e-4);
  EXPECT_EQ(j.at("seeds").size(), 20u);
  EXPECT_TRUE(j.at("pass").get<bool>());
}

TEST(Cli, OodOnSeparableSbmRaisesEntropyOfHeldOutClass) {
  const auto dir = scratch_dir("cli_ood");
  const auto cfg = write_config(dir, "run.cfg",
                                "sbm_classes = 4\nsbm_nodes_per_class = 40\nhidden = 16\nepochs = 60\n"
                                "ood_class = 3\nseed = 2\n");
  const auto r = cli({"ood", "--config", cfg.string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto test = read_json(dir / "ood.json").at("test");
  EXPECT_GT(test.at("mean_entropy_ood").get<double>(), test.at("mean_entropy_in").get<double>());
  EXPECT_EQ(read_file(dir / "ood_entropy.csv").substr(0, 38), "bin_left,bin_right,in_distribution,ood");
}

TEST(Cli, VerifyWritesAllReports) {
  const auto dir = scratch_dir("cli_verify");
  const auto cfg = write_config(dir, "run.cfg",
                                "sbm_classes = 3\nsbm_nodes_per_class = 4\nsbm_p_in = 0.5\nsbm_p_out = 0.1\n"
                                "sbm_feature_dim = 4\nhidden = 8\nverify_paths = 2000\nverify_trials = 10\n"
                                "verify_lipschitz_samples = 200\n");
  const auto r = cli({"verify", "--config", cfg.string(), "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  const auto j = read_json(dir / "verify.json");
  EXPECT_TRUE(j.at("pass").get<bool>());
  EXPECT_EQ(j.at("perturbation_verdict"), "pass");
  EXPECT_LT(j.at("resnet_max_abs_deviation").get<double>(), 1e-12);
  EXPECT_EQ(read_json(dir / "verify_perturbation.json").at("t").size(), 8u);
  EXPECT_EQ(read_file(dir / "verify_perturbation.csv").substr(0, 22), "t,measured,bound,pass\n");
}

TEST(Cli, InstalledBinaryUsesSameExitCodes) {
  const auto dir = scratch_dir("cli_binary");
  const auto cfg = write_config(dir, "run.cfg", kSmall);
  const std::string exe = LGNSDE_CLI_PATH;
  const auto status = [&](const std::string& args) {
    const int raw = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("generate --config " + cfg.string() + " --out " + (dir / "o").string()), 0);
  EXPECT_EQ(status("bogus --config " + cfg.string()), 2);
  EXPECT_EQ(status("eval --config " + cfg.string() + " --out " + (dir / "o").string()), 2);
  EXPECT_TRUE(fs::exists(dir / "o" / "generate.json"));
}

}  // namespace
}  // namespace lgnsde::app
