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

#include <string>

#include <gtest/gtest.h>

#include "lgnsde/config.hpp"
#include "test_support.hpp"

namespace lgnsde::app {
namespace {

std::string error_of(std::string_view text) {
  try {
    parse_config(text, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, DefaultHyperparameters) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.lgnsde.hidden, 64u);
  EXPECT_EQ(c.train.lr, 0.01);
  EXPECT_EQ(c.lgnsde.sde.diffusion, 1.0);
  EXPECT_EQ(c.lgnsde.dropout, 0.2);
  EXPECT_EQ(c.lgnsde.sde.t0, 0.0);
  EXPECT_EQ(c.lgnsde.sde.t1, 1.0);
  EXPECT_EQ(c.lgnsde.sde.steps, 16u);
  EXPECT_EQ(c.lgnsde.sde.scheme, Scheme::StochasticRungeKutta);
  EXPECT_EQ(c.lgnsde.mc_samples, 20u);
  EXPECT_FALSE(c.lgnsde.kl_weight.has_value());
  EXPECT_EQ(c.train.epochs, 300u);
  EXPECT_EQ(c.train.patience, 50u);
  EXPECT_EQ(c.workers, 1u);
  EXPECT_EQ(c.dataset, DatasetKind::Sbm);
  EXPECT_FALSE(c.ood_class.has_value());
  EXPECT_EQ(c.out_dir, "out");
}

TEST(Config, ParsesValuesCommentsAndWhitespace) {
  const RunConfig c = parse_config(
      "# full-line comment\n"
      "\n"
      "  hidden = 12   # trailing comment\n"
      "scheme=em\n"
      "g = 0.5\r\n"
      "kl_weight = 1\n"
      "ood_class = 2\n"
      "prior = ou\n"
      "prior_theta = 3\n"
      "dataset = bundle\n"
      "bundle_dir = data/b\n"
      "split = fraction\n"
      "train_fraction = 0.5\n"
      "val_fraction = 0.25\n"
      "test_fraction = 0.25\n"
      "seed = 18446744073709551615\n");
  EXPECT_EQ(c.lgnsde.hidden, 12u);
  EXPECT_EQ(c.lgnsde.sde.scheme, Scheme::EulerMaruyama);
  EXPECT_EQ(c.lgnsde.sde.diffusion, 0.5);
  EXPECT_EQ(c.lgnsde.kl_weight, 1.0);
  EXPECT_EQ(c.ood_class, 2);
  EXPECT_EQ(c.lgnsde.prior.kind, PriorDrift::Kind::OrnsteinUhlenbeck);
  EXPECT_EQ(c.lgnsde.prior.theta, 3.0);
  EXPECT_EQ(c.dataset, DatasetKind::Bundle);
  EXPECT_EQ(c.bundle_dir, "data/b");
  EXPECT_EQ(c.split, SplitKind::Fraction);
  EXPECT_EQ(c.fractions.train, 0.5);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
}

TEST(Config, AutoAndNoneResetOptionals) {
  const RunConfig c = parse_config("kl_weight = auto\nood_class = none\n");
  EXPECT_FALSE(c.lgnsde.kl_weight.has_value());
  EXPECT_FALSE(c.ood_class.has_value());
}

TEST(Config, UnknownKeyNamesSourceAndLine) {
  const auto msg = error_of("hidden = 4\n\nhiden = 5\n");
  EXPECT_NE(msg.find("cfg:3:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("hiden"), std::string::npos) << msg;
}

TEST(Config, RepeatedKeyRejected) {
  const auto msg = error_of("lr = 0.1\nlr = 0.2\n");
  EXPECT_NE(msg.find("cfg:2:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("repeated"), std::string::npos) << msg;
}

TEST(Config, MalformedValuesRejectedWithKey) {
  for (const char* text : {"hidden = 0", "hidden = -3", "hidden = 4.5", "hidden = ", "lr = fast", "dropout = 1.5",
                           "g = 0", "g = -1", "scheme = rk4", "model = mlp", "steps = 1e3", "seed = -1",
                           "kl_weight = -0.5", "verify_epsilon = -1", "sbm_p_in = 2"}) {
    const auto msg = error_of(text);
    ASSERT_FALSE(msg.empty()) << text;
    EXPECT_NE(msg.find("cfg:1:"), std::string::npos) << msg;
    const std::string key(text, std::string_view(text).find(' '));
    EXPECT_NE(msg.find("'" + key + "'"), std::string::npos) << msg;
  }
  EXPECT_NE(error_of("just words").find("key = value"), std::string::npos);
  EXPECT_FALSE(error_of("= 3").empty());
}

TEST(Config, ConsistencyChecks) {
  EXPECT_NE(error_of("dataset = bundle").find("bundle_dir"), std::string::npos);
  EXPECT_NE(error_of("dataset = cora_raw\ncora_content = a").find("cora_cites"), std::string::npos);
  EXPECT_FALSE(error_of("split = bundle").empty());
  EXPECT_FALSE(error_of("train_fraction = 0.6\nval_fraction = 0.3\ntest_fraction = 0.3").empty());
  EXPECT_FALSE(error_of("sbm_p_in = 0.1\nsbm_p_out = 0.2").empty());
  EXPECT_FALSE(error_of("verify_paths = 999").empty());
  EXPECT_TRUE(error_of("verify_paths = 1000").empty());
}

TEST(Config, LoadRecordsBaseDirectory) {
  const auto dir = testing::scratch_dir("config_load");
  testing::write_file(dir / "nested" / "run.cfg", "epochs = 3\n");
  const RunConfig c = load_config(dir / "nested" / "run.cfg");
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_EQ(c.base_dir, dir / "nested");
  EXPECT_THROW(load_config(dir / "absent.cfg"), ConfigError);
  testing::write_file(dir / "bad.cfg", "epochs = 3\nepochs = 4\n");
  try {
    load_config(dir / "bad.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.cfg:2:"), std::string::npos) << e.what();
  }
}

TEST(Config, ReferenceListsEveryKeyOnce) {
  const std::string ref = config_reference();
  for (const char* key : {"dataset", "hidden", "lr", "g", "dropout", "steps", "scheme", "mc_samples", "epochs",
                          "patience", "ood_class", "seed", "out_dir", "workers", "verify_paths", "gradcheck_seeds"})
    EXPECT_NE(("\n" + ref).find("\n" + std::string(key) + " "), std::string::npos) << key;
  // Every documented key parses with its documented default.
  std::size_t start = 0;
  std::size_t lines = 0;
  while (start < ref.size()) {
    const auto end = ref.find('\n', start);
    const std::string line = ref.substr(start, end - start);
    start = end + 1;
    ++lines;
    const auto key = line.substr(0, line.find(' '));
    const auto rest = line.substr(line.find_first_not_of(' ', key.size()));
    const auto fallback = rest.substr(0, rest.find(' '));
    if (fallback == "-" || fallback == "<seed>") continue;
    if (key == "dataset" || key == "split" || key == "model") continue;
    EXPECT_NO_THROW(parse_config(key + " = " + fallback)) << line;
  }
  EXPECT_GT(lines, 40u);
}

}  // namespace
}  // namespace lgnsde::app
