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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "lgnsde/checkpoint.hpp"
#include "lgnsde/errors.hpp"
#include "test_support.hpp"

namespace lgnsde {
namespace {

using testing::scratch_dir;

void expect_same(const Tensor& a, const Tensor& b) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.values()[i], b.values()[i]);
}

LgnsdeModel awkward_model() {
  ModelConfig c;
  c.hidden = 3;
  c.dropout = 0.35;
  c.mc_samples = 7;
  c.sde.t0 = 0.125;
  c.sde.t1 = 1.7;
  c.sde.steps = 9;
  c.sde.diffusion = 0.3;
  c.sde.scheme = Scheme::EulerMaruyama;
  c.prior.kind = PriorDrift::Kind::OrnsteinUhlenbeck;
  c.prior.mu = -0.2;
  c.prior.theta = 2.5;
  auto m = LgnsdeModel::init(4, 2, c, 7);
  // Values whose shortest decimal form is long or extreme.
  auto w = m.enc_weight.mutable_values();
  w[0] = 0.1 + 0.2;
  w[1] = std::numeric_limits<double>::denorm_min();
  w[2] = -std::numeric_limits<double>::max();
  w[3] = 1.0 / 3.0;
  return m;
}

TEST(Checkpoint, LgnsdeRoundTripIsExact) {
  for (std::optional<double> weight : {std::optional<double>{}, std::optional<double>{0.1 + 0.2}}) {
    auto m = awkward_model();
    m.config.kl_weight = weight;
    const auto dir = scratch_dir("ckpt_lgnsde");
    save_checkpoint(dir / "sub" / "m.json", m);
    const auto back = std::get<LgnsdeModel>(load_checkpoint(dir / "sub" / "m.json"));
    const auto a = m.named_parameters(), b = back.named_parameters();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].first, b[i].first);
      expect_same(a[i].second, b[i].second);
      EXPECT_TRUE(b[i].second.requires_grad());
    }
    const auto& c = back.config;
    EXPECT_EQ(c.hidden, 3u);
    EXPECT_EQ(c.dropout, 0.35);
    EXPECT_EQ(c.mc_samples, 7u);
    EXPECT_EQ(c.kl_weight, weight);
    EXPECT_EQ(c.sde.t0, 0.125);
    EXPECT_EQ(c.sde.t1, 1.7);
    EXPECT_EQ(c.sde.steps, 9u);
    EXPECT_EQ(c.sde.diffusion, 0.3);
    EXPECT_EQ(c.sde.scheme, Scheme::EulerMaruyama);
    EXPECT_EQ(c.prior.kind, PriorDrift::Kind::OrnsteinUhlenbeck);
    EXPECT_EQ(c.prior.mu, -0.2);
    EXPECT_EQ(c.prior.theta, 2.5);
  }
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  const Graph g = testing::random_graph(6, 4, 2, 0.5, 1);
  const auto m = awkward_model();
  auto ok = m.clone();
  ok.enc_weight.mutable_values()[2] = 0.5;  // keep the forward pass finite
  const auto back = std::get<LgnsdeModel>(checkpoint_from_json(checkpoint_to_json(ok)));
  EXPECT_EQ(predict(g, ok, 3, 4).probs, predict(g, back, 3, 4).probs);
}

TEST(Checkpoint, EnsembleRoundTripIsExact) {
  std::vector<GcnModel> members;
  for (std::uint64_t s = 0; s < 3; ++s) members.push_back(GcnModel::init(5, 4, 3, 0.4, s));
  const auto dir = scratch_dir("ckpt_gcn");
  save_checkpoint(dir / "e.json", members);
  const auto back = std::get<std::vector<GcnModel>>(load_checkpoint(dir / "e.json"));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    expect_same(members[i].w1, back[i].w1);
    expect_same(members[i].w2, back[i].w2);
    EXPECT_EQ(back[i].dropout, 0.4);
  }
}

TEST(Checkpoint, HeaderAndKindAreChecked) {
  auto j = checkpoint_to_json(awkward_model());
  EXPECT_EQ(j.at("format"), "lgnsde-checkpoint");
  EXPECT_EQ(j.at("version"), kCheckpointVersion);
  EXPECT_EQ(j.at("kind"), "lgnsde");

  auto bad = j;
  bad["version"] = kCheckpointVersion + 1;
  EXPECT_THROW(checkpoint_from_json(bad), FormatError);
  bad = j;
  bad["format"] = "other";
  EXPECT_THROW(checkpoint_from_json(bad), FormatError);
  bad = j;
  bad["kind"] = "mlp";
  EXPECT_THROW(checkpoint_from_json(bad), FormatError);
  bad = j;
  bad["config"]["scheme"] = "rk4";
  EXPECT_THROW(checkpoint_from_json(bad), FormatError);
  bad = j;
  bad["tensors"].erase("drift_b2");
  EXPECT_THROW(checkpoint_from_json(bad), FormatError);
  bad = j;
  bad["tensors"]["dec_bias"]["values"].push_back(1.0);
  EXPECT_THROW(checkpoint_from_json(bad), FormatError);
  bad = j;
  bad["config"]["hidden"] = 5;
  EXPECT_THROW(checkpoint_from_json(bad), FormatError);
  bad = j;
  bad.erase("tensors");
  EXPECT_THROW(checkpoint_from_json(bad), FormatError);
}

TEST(Checkpoint, FileErrors) {
  const auto dir = scratch_dir("ckpt_files");
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), std::runtime_error);
  testing::write_file(dir / "broken.json", "{\"format\": ");
  EXPECT_THROW(load_checkpoint(dir / "broken.json"), ParseError);
}

}  // namespace
}  // namespace lgnsde
