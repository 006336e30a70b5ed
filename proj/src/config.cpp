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

#include "lgnsde/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

namespace lgnsde::app {

namespace {

// Thrown by value parsers; the caller adds source/line/key context.
struct BadValue {
  std::string what;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view v, const char* expected) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) throw BadValue{std::string("expected ") + expected};
  return out;
}

std::size_t positive(std::string_view v) {
  const auto n = parse_number<std::size_t>(v, "a positive integer");
  if (n == 0) throw BadValue{"expected a positive integer"};
  return n;
}

std::size_t non_negative(std::string_view v) { return parse_number<std::size_t>(v, "a non-negative integer"); }

double real(std::string_view v) { return parse_number<double>(v, "a number"); }

double probability(std::string_view v) {
  const double p = real(v);
  if (!(p >= 0.0 && p <= 1.0)) throw BadValue{"expected a value in [0, 1]"};
  return p;
}

double positive_real(std::string_view v) {
  const double x = real(v);
  if (!(x > 0.0)) throw BadValue{"expected a number > 0"};
  return x;
}

template <typename E>
E choice(std::string_view v, std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, value] : options) {
    if (v == name) return value;
    names += names.empty() ? "" : "|";
    names += name;
  }
  throw BadValue{"expected one of " + names};
}

struct Key {
  const char* name;
  const char* fallback;
  const char* help;
  std::function<void(RunConfig&, std::string_view)> set;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"dataset", "sbm", "sbm | bundle | cora_raw",
       [](RunConfig& c, std::string_view v) {
         c.dataset = choice<DatasetKind>(
             v, {{"sbm", DatasetKind::Sbm}, {"bundle", DatasetKind::Bundle}, {"cora_raw", DatasetKind::CoraRaw}});
       }},
      {"bundle_dir", "", "bundle directory (nodes.tsv, edges.tsv, splits.json)",
       [](RunConfig& c, std::string_view v) { c.bundle_dir = std::string(v); }},
      {"cora_content", "", "raw .content file", [](RunConfig& c, std::string_view v) { c.cora_content = std::string(v); }},
      {"cora_cites", "", "raw .cites file", [](RunConfig& c, std::string_view v) { c.cora_cites = std::string(v); }},
      {"sbm_classes", "3", "SBM class count",
       [](RunConfig& c, std::string_view v) { c.sbm.classes = static_cast<int>(positive(v)); }},
      {"sbm_nodes_per_class", "40", "SBM nodes per class",
       [](RunConfig& c, std::string_view v) { c.sbm.nodes_per_class = static_cast<int>(positive(v)); }},
      {"sbm_p_in", "0.2", "intra-class edge probability", [](RunConfig& c, std::string_view v) { c.sbm.p_in = probability(v); }},
      {"sbm_p_out", "0.02", "inter-class edge probability",
       [](RunConfig& c, std::string_view v) { c.sbm.p_out = probability(v); }},
      {"sbm_feature_dim", "16", "SBM feature dimension",
       [](RunConfig& c, std::string_view v) { c.sbm.feature_dim = positive(v); }},
      {"sbm_feature_gap", "2.0", "class mean offset",
       [](RunConfig& c, std::string_view v) {
         c.sbm.feature_gap = real(v);
         if (!(c.sbm.feature_gap >= 0.0)) throw BadValue{"expected a number >= 0"};
       }},
      {"sbm_seed", "<seed>", "generator seed", [](RunConfig& c, std::string_view v) { c.sbm_seed = non_negative(v); }},
      {"split", "auto", "auto | bundle | planetoid | fraction (auto: bundle splits if present, planetoid for cora_raw, "
                        "else fraction)",
       [](RunConfig& c, std::string_view v) {
         c.split = choice<SplitKind>(v, {{"auto", SplitKind::Auto},
                                         {"bundle", SplitKind::Bundle},
                                         {"planetoid", SplitKind::Planetoid},
                                         {"fraction", SplitKind::Fraction}});
       }},
      {"train_per_class", "20", "planetoid train nodes per class",
       [](RunConfig& c, std::string_view v) { c.counts.train_per_class = static_cast<int>(positive(v)); }},
      {"val_count", "500", "planetoid validation size",
       [](RunConfig& c, std::string_view v) { c.counts.val_count = static_cast<int>(non_negative(v)); }},
      {"test_count", "1000", "planetoid test size",
       [](RunConfig& c, std::string_view v) { c.counts.test_count = static_cast<int>(non_negative(v)); }},
      {"train_fraction", "0.1", "stratified train share",
       [](RunConfig& c, std::string_view v) { c.fractions.train = probability(v); }},
      {"val_fraction", "0.1", "stratified validation share",
       [](RunConfig& c, std::string_view v) { c.fractions.val = probability(v); }},
      {"test_fraction", "0.8", "stratified test share",
       [](RunConfig& c, std::string_view v) { c.fractions.test = probability(v); }},
      {"ood_class", "none", "class left out of training (ood command)",
       [](RunConfig& c, std::string_view v) {
         if (v == "none") c.ood_class.reset();
         else c.ood_class = static_cast<int>(non_negative(v));
       }},
      {"model", "lgnsde", "lgnsde | gcn | ensemble",
       [](RunConfig& c, std::string_view v) {
         c.model = choice<ModelKind>(
             v, {{"lgnsde", ModelKind::Lgnsde}, {"gcn", ModelKind::Gcn}, {"ensemble", ModelKind::Ensemble}});
       }},
      {"ensemble_size", "5", "GCN ensemble members",
       [](RunConfig& c, std::string_view v) { c.ensemble_size = positive(v); }},
      {"hidden", "64", "latent dimension h", [](RunConfig& c, std::string_view v) { c.lgnsde.hidden = positive(v); }},
      {"gcn_hidden", "64", "GCN baseline hidden width", [](RunConfig& c, std::string_view v) { c.gcn_hidden = positive(v); }},
      {"dropout", "0.2", "dropout probability",
       [](RunConfig& c, std::string_view v) {
         c.lgnsde.dropout = probability(v);
         if (c.lgnsde.dropout >= 1.0) throw BadValue{"expected a value in [0, 1)"};
       }},
      {"t1", "1.0", "integration end time (t0 = 0)", [](RunConfig& c, std::string_view v) { c.lgnsde.sde.t1 = positive_real(v); }},
      {"g", "1.0", "diffusion constant", [](RunConfig& c, std::string_view v) { c.lgnsde.sde.diffusion = positive_real(v); }},
      {"steps", "16", "solver steps L", [](RunConfig& c, std::string_view v) { c.lgnsde.sde.steps = positive(v); }},
      {"scheme", "srk", "em | srk",
       [](RunConfig& c, std::string_view v) {
         c.lgnsde.sde.scheme =
             choice<Scheme>(v, {{"em", Scheme::EulerMaruyama}, {"srk", Scheme::StochasticRungeKutta}});
       }},
      {"prior", "constant", "constant | ou",
       [](RunConfig& c, std::string_view v) {
         c.lgnsde.prior.kind = choice<PriorDrift::Kind>(
             v, {{"constant", PriorDrift::Kind::Constant}, {"ou", PriorDrift::Kind::OrnsteinUhlenbeck}});
       }},
      {"prior_mu", "0.0", "prior drift constant / OU mean", [](RunConfig& c, std::string_view v) { c.lgnsde.prior.mu = real(v); }},
      {"prior_theta", "1.0", "OU mean-reversion rate",
       [](RunConfig& c, std::string_view v) { c.lgnsde.prior.theta = positive_real(v); }},
      {"kl_weight", "auto", "KL weight in the training loss; auto = |train| / (n h)",
       [](RunConfig& c, std::string_view v) {
         if (v == "auto") {
           c.lgnsde.kl_weight.reset();
           return;
         }
         const double w = real(v);
         if (!(w >= 0.0)) throw BadValue{"expected auto or a number >= 0"};
         c.lgnsde.kl_weight = w;
       }},
      {"mc_samples", "20", "predictive Monte-Carlo paths N",
       [](RunConfig& c, std::string_view v) { c.lgnsde.mc_samples = positive(v); }},
      {"epochs", "300", "maximum training epochs", [](RunConfig& c, std::string_view v) { c.train.epochs = positive(v); }},
      {"patience", "50", "early-stopping patience (epochs)",
       [](RunConfig& c, std::string_view v) { c.train.patience = positive(v); }},
      {"lr", "0.01", "Adam learning rate",
       [](RunConfig& c, std::string_view v) {
         c.train.lr = real(v);
         if (!(c.train.lr >= 0.0)) throw BadValue{"expected a number >= 0"};
       }},
      {"val_mc_samples", "4", "MC paths for validation accuracy",
       [](RunConfig& c, std::string_view v) { c.train.val_mc_samples = positive(v); }},
      {"eval_every", "1", "validation stride (epochs)",
       [](RunConfig& c, std::string_view v) { c.train.eval_every = positive(v); }},
      {"seed", "0", "master seed", [](RunConfig& c, std::string_view v) { c.seed = non_negative(v); }},
      {"workers", "1", "OpenMP threads", [](RunConfig& c, std::string_view v) { c.workers = positive(v); }},
      {"out_dir", "out", "report directory", [](RunConfig& c, std::string_view v) { c.out_dir = std::string(v); }},
      {"checkpoint", "", "checkpoint to evaluate or verify",
       [](RunConfig& c, std::string_view v) { c.checkpoint = std::string(v); }},
      {"histogram_bins", "20", "entropy histogram bins",
       [](RunConfig& c, std::string_view v) { c.histogram_bins = positive(v); }},
      {"verify_paths", "10000", "variance-bound Monte-Carlo paths (>= 1000)",
       [](RunConfig& c, std::string_view v) { c.verify.paths = positive(v); }},
      {"verify_grid", "8", "verification time-grid points",
       [](RunConfig& c, std::string_view v) { c.verify.grid_points = positive(v); }},
      {"verify_batch", "500", "paths integrated per stacked batch",
       [](RunConfig& c, std::string_view v) { c.verify.batch = positive(v); }},
      {"verify_trials", "50", "perturbation trials", [](RunConfig& c, std::string_view v) { c.verify.trials = positive(v); }},
      {"verify_epsilon", "0.01", "initial perturbation norm",
       [](RunConfig& c, std::string_view v) {
         c.verify.epsilon = real(v);
         if (!(c.verify.epsilon >= 0.0)) throw BadValue{"expected a number >= 0"};
       }},
      {"verify_lipschitz_samples", "1000", "sampled pairs for the drift Lipschitz estimate",
       [](RunConfig& c, std::string_view v) { c.verify.lipschitz_samples = positive(v); }},
      {"verify_train_epochs", "0", "train this many epochs before verifying (no checkpoint)",
       [](RunConfig& c, std::string_view v) { c.verify.train_epochs = non_negative(v); }},
      {"gradcheck_seeds", "20", "random graphs checked", [](RunConfig& c, std::string_view v) { c.gradcheck.seeds = positive(v); }},
      {"gradcheck_nodes", "6", "nodes per graph", [](RunConfig& c, std::string_view v) { c.gradcheck.nodes = positive(v); }},
      {"gradcheck_hidden", "2", "latent dimension", [](RunConfig& c, std::string_view v) { c.gradcheck.hidden = positive(v); }},
      {"gradcheck_steps", "4", "solver steps", [](RunConfig& c, std::string_view v) { c.gradcheck.steps = positive(v); }},
      {"gradcheck_step", "1e-5", "central-difference step",
       [](RunConfig& c, std::string_view v) { c.gradcheck.step = positive_real(v); }},
      {"gradcheck_threshold", "1e-4", "maximum relative error",
       [](RunConfig& c, std::string_view v) { c.gradcheck.threshold = positive_real(v); }},
  };
  return table;
}

void check_consistency(const RunConfig& c, const std::string& source) {
  const auto fail = [&](const std::string& msg) { throw ConfigError(source + ": " + msg); };
  if (c.dataset == DatasetKind::Bundle && c.bundle_dir.empty()) fail("dataset=bundle requires bundle_dir");
  if (c.dataset == DatasetKind::CoraRaw && (c.cora_content.empty() || c.cora_cites.empty()))
    fail("dataset=cora_raw requires cora_content and cora_cites");
  if (c.dataset != DatasetKind::Bundle && c.split == SplitKind::Bundle) fail("split=bundle requires dataset=bundle");
  if (c.fractions.train + c.fractions.val + c.fractions.test > 1.0 + 1e-12)
    fail("train_fraction + val_fraction + test_fraction exceeds 1");
  if (c.sbm.p_out > c.sbm.p_in) fail("sbm_p_out must not exceed sbm_p_in");
  if (c.verify.paths < 1000) fail("verify_paths must be >= 1000");
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& source) {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value', got '" + std::string(line) + "'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key before '='");

    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
    if (it == table.end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) throw ConfigError(where + "key '" + std::string(key) + "' repeated");
    try {
      it->set(cfg, value);
    } catch (const BadValue& e) {
      throw ConfigError(where + "key '" + std::string(key) + "': " + e.what + ", got '" + std::string(value) + "'");
    }
  }
  check_consistency(cfg, source);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config(buf.str(), path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

std::string config_reference() {
  std::ostringstream out;
  for (const auto& k : keys()) {
    out << k.name;
    for (std::size_t pad = std::string_view(k.name).size(); pad < 26; ++pad) out << ' ';
    out << (*k.fallback ? k.fallback : "-");
    for (std::size_t pad = std::string_view(*k.fallback ? k.fallback : "-").size(); pad < 10; ++pad) out << ' ';
    out << k.help << '\n';
  }
  return out.str();
}

}  // namespace lgnsde::app
