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

#include "lgnsde/checkpoint.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

#include "lgnsde/errors.hpp"

namespace lgnsde {

using nlohmann::json;

namespace {

json tensor_json(const Tensor& t) {
  return {{"shape", {t.rows(), t.cols()}}, {"values", std::vector<double>(t.values().begin(), t.values().end())}};
}

Tensor tensor_from(const json& tensors, const std::string& name) {
  if (!tensors.contains(name)) throw FormatError("checkpoint lacks tensor '" + name + "'");
  const auto& j = tensors.at(name);
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2) throw FormatError("checkpoint tensor '" + name + "' is not 2-D");
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != shape[0] * shape[1])
    throw FormatError("checkpoint tensor '" + name + "' has " + std::to_string(values.size()) + " values for shape " +
                      std::to_string(shape[0]) + "x" + std::to_string(shape[1]));
  return Tensor::parameter({shape[0], shape[1]}, std::move(values));
}

const char* scheme_name(Scheme s) { return s == Scheme::EulerMaruyama ? "em" : "srk"; }

Scheme scheme_from(const std::string& s) {
  if (s == "em") return Scheme::EulerMaruyama;
  if (s == "srk") return Scheme::StochasticRungeKutta;
  throw FormatError("unknown scheme '" + s + "'");
}

json config_json(const ModelConfig& c) {
  return {{"hidden", c.hidden},
          {"dropout", c.dropout},
          {"mc_samples", c.mc_samples},
          {"kl_weight", c.kl_weight ? json(*c.kl_weight) : json()},
          {"t0", c.sde.t0},
          {"t1", c.sde.t1},
          {"steps", c.sde.steps},
          {"diffusion", c.sde.diffusion},
          {"scheme", scheme_name(c.sde.scheme)},
          {"prior", c.prior.kind == PriorDrift::Kind::Constant ? "constant" : "ou"},
          {"prior_mu", c.prior.mu},
          {"prior_theta", c.prior.theta}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.hidden = j.at("hidden").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.mc_samples = j.at("mc_samples").get<std::size_t>();
  if (const auto& w = j.at("kl_weight"); !w.is_null()) c.kl_weight = w.get<double>();
  c.sde.t0 = j.at("t0").get<double>();
  c.sde.t1 = j.at("t1").get<double>();
  c.sde.steps = j.at("steps").get<std::size_t>();
  c.sde.diffusion = j.at("diffusion").get<double>();
  c.sde.scheme = scheme_from(j.at("scheme").get<std::string>());
  const auto prior = j.at("prior").get<std::string>();
  if (prior != "constant" && prior != "ou") throw FormatError("unknown prior '" + prior + "'");
  c.prior.kind = prior == "constant" ? PriorDrift::Kind::Constant : PriorDrift::Kind::OrnsteinUhlenbeck;
  c.prior.mu = j.at("prior_mu").get<double>();
  c.prior.theta = j.at("prior_theta").get<double>();
  return c;
}

}  // namespace

json checkpoint_to_json(const Checkpoint& checkpoint) {
  json j{{"format", "lgnsde-checkpoint"}, {"version", kCheckpointVersion}};
  if (const auto* m = std::get_if<LgnsdeModel>(&checkpoint)) {
    j["kind"] = "lgnsde";
    j["config"] = config_json(m->config);
    json tensors = json::object();
    for (const auto& [name, t] : m->named_parameters()) tensors[name] = tensor_json(t);
    j["tensors"] = std::move(tensors);
  } else {
    const auto& members = std::get<std::vector<GcnModel>>(checkpoint);
    j["kind"] = "gcn_ensemble";
    j["config"] = {{"members", members.size()}, {"dropout", members.empty() ? 0.0 : members.front().dropout}};
    json tensors = json::object();
    for (std::size_t i = 0; i < members.size(); ++i) {
      tensors["member" + std::to_string(i) + ".w1"] = tensor_json(members[i].w1);
      tensors["member" + std::to_string(i) + ".w2"] = tensor_json(members[i].w2);
    }
    j["tensors"] = std::move(tensors);
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "lgnsde-checkpoint") throw FormatError("not an lgnsde checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto kind = j.at("kind").get<std::string>();
    const auto& tensors = j.at("tensors");
    if (kind == "lgnsde") {
      LgnsdeModel m;
      m.config = config_from(j.at("config"));
      m.enc_weight = tensor_from(tensors, "enc_weight");
      m.enc_bias = tensor_from(tensors, "enc_bias");
      m.drift_w1 = tensor_from(tensors, "drift_w1");
      m.drift_b1 = tensor_from(tensors, "drift_b1");
      m.drift_w2 = tensor_from(tensors, "drift_w2");
      m.drift_b2 = tensor_from(tensors, "drift_b2");
      m.dec_weight = tensor_from(tensors, "dec_weight");
      m.dec_bias = tensor_from(tensors, "dec_bias");
      if (m.drift_w1.rows() != m.config.hidden + 1 || m.enc_weight.cols() != m.config.hidden)
        throw FormatError("checkpoint tensor shapes disagree with hidden=" + std::to_string(m.config.hidden));
      return m;
    }
    if (kind == "gcn_ensemble") {
      const auto count = j.at("config").at("members").get<std::size_t>();
      const auto dropout = j.at("config").at("dropout").get<double>();
      std::vector<GcnModel> members(count);
      for (std::size_t i = 0; i < count; ++i) {
        members[i].dropout = dropout;
        members[i].w1 = tensor_from(tensors, "member" + std::to_string(i) + ".w1");
        members[i].w2 = tensor_from(tensors, "member" + std::to_string(i) + ".w2");
      }
      return members;
    }
    throw FormatError("unknown checkpoint kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << checkpoint_to_json(checkpoint).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
  return checkpoint_from_json(j);
}

}  // namespace lgnsde
