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

#include "lgnsde/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <variant>

#include <nlohmann/json.hpp>

#include "lgnsde/checkpoint.hpp"
#include "lgnsde/errors.hpp"
#include "lgnsde/gradcheck.hpp"
#include "lgnsde/kernels.hpp"
#include "lgnsde/metrics.hpp"
#include "lgnsde/random.hpp"
#include "lgnsde/verify.hpp"

namespace lgnsde::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSplitStream = 0x73706c;
constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kTrainStream = 0x747261;
constexpr std::uint64_t kEvalStream = 0x6576616c;
constexpr std::uint64_t kVerifyStream = 0x766572;
constexpr std::uint64_t kGradStream = 0x67726164;

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

fs::path resolve(const RunConfig& cfg, const fs::path& p) {
  if (p.empty() || p.is_absolute() || cfg.base_dir.empty()) return p;
  return cfg.base_dir / p;
}

class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void text(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << content;
    written_.push_back(dir_ / name);
  }
  void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
  const fs::path& dir() const { return dir_; }
  std::vector<fs::path> take() { return std::move(written_); }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

bool any_set(const Mask& m) {
  return std::any_of(m.begin(), m.end(), [](auto v) { return v != 0; });
}

// Removes the held-out class from train/val and appends it to test.
void hold_out_class(Graph& g, int ood) {
  for (std::size_t i = 0; i < g.n; ++i)
    if (g.labels[i] == ood) {
      g.train_mask[i] = 0;
      g.val_mask[i] = 0;
      g.test_mask[i] = 1;
    }
}

struct Dataset {
  Graph graph;
  std::size_t dropped_citations = 0;
  std::string split_used;
};

Dataset load_dataset(const RunConfig& cfg, std::optional<int> ood_class) {
  Dataset d;
  switch (cfg.dataset) {
    case DatasetKind::Sbm: {
      SbmParams p = cfg.sbm;
      p.seed = cfg.sbm_seed.value_or(cfg.seed);
      d.graph = sbm_generate(p);
      break;
    }
    case DatasetKind::Bundle:
      d.graph = load_bundle(resolve(cfg, cfg.bundle_dir));
      break;
    case DatasetKind::CoraRaw: {
      auto loaded = load_cora_raw(resolve(cfg, cfg.cora_content), resolve(cfg, cfg.cora_cites));
      d.graph = std::move(loaded.graph);
      d.dropped_citations = loaded.dropped_citations;
      break;
    }
  }
  if (ood_class && (*ood_class < 0 || *ood_class >= d.graph.num_classes))
    throw ConfigError("ood_class " + std::to_string(*ood_class) + " outside [0, " +
                      std::to_string(d.graph.num_classes) + ")");

  SplitKind split = cfg.split;
  if (split == SplitKind::Auto) {
    if (cfg.dataset == DatasetKind::Bundle && any_set(d.graph.train_mask)) split = SplitKind::Bundle;
    else if (cfg.dataset == DatasetKind::CoraRaw) split = SplitKind::Planetoid;
    else split = SplitKind::Fraction;
  }
  if (split == SplitKind::Bundle) {
    if (!any_set(d.graph.train_mask)) throw ConfigError("split=bundle but the bundle has no training split");
    if (ood_class) hold_out_class(d.graph, *ood_class);
    d.split_used = "bundle";
    return d;
  }
  SplitSpec spec;
  spec.seed = derive_seed(cfg.seed, {kSplitStream});
  spec.ood_class = ood_class;
  if (split == SplitKind::Planetoid) {
    spec.scheme = cfg.counts;
    d.split_used = "planetoid";
  } else {
    spec.scheme = cfg.fractions;
    d.split_used = "fraction";
  }
  d.graph = make_splits(d.graph, spec);
  return d;
}

json dataset_json(const Dataset& d) {
  const Graph& g = d.graph;
  return {{"nodes", g.n},
          {"features", g.d_in},
          {"classes", g.num_classes},
          {"edges", g.edges.size()},
          {"train", mask_indices(g.train_mask).size()},
          {"val", mask_indices(g.val_mask).size()},
          {"test", mask_indices(g.test_mask).size()},
          {"split", d.split_used},
          {"dropped_citations", d.dropped_citations}};
}

const char* model_name(ModelKind k) {
  switch (k) {
    case ModelKind::Lgnsde: return "lgnsde";
    case ModelKind::Gcn: return "gcn";
    case ModelKind::Ensemble: return "ensemble";
  }
  return "?";
}

struct Trained {
  Checkpoint checkpoint;
  std::vector<TrainLog> logs;  // one per member
  std::optional<double> kl_weight;
};

Trained train_model(const RunConfig& cfg, const Graph& graph, const Labeling& labeling) {
  const auto classes = static_cast<std::size_t>(labeling.num_classes);
  Trained t;
  if (cfg.model == ModelKind::Lgnsde) {
    TrainOptions opts = cfg.train;
    opts.seed = derive_seed(cfg.seed, {kTrainStream});
    auto init = LgnsdeModel::init(graph.d_in, classes, cfg.lgnsde, derive_seed(cfg.seed, {kInitStream}));
    t.kl_weight = effective_kl_weight(graph, cfg.lgnsde);
    auto res = train_lgnsde(graph, labeling, std::move(init), opts);
    t.logs.push_back(std::move(res.log));
    t.checkpoint = std::move(res.model);
    return t;
  }
  const std::size_t members = cfg.model == ModelKind::Gcn ? 1 : cfg.ensemble_size;
  std::vector<GcnModel> trained;
  for (std::size_t m = 0; m < members; ++m) {
    TrainOptions opts = cfg.train;
    opts.seed = derive_seed(cfg.seed, {kTrainStream, m});
    auto init = GcnModel::init(graph.d_in, cfg.gcn_hidden, classes, cfg.lgnsde.dropout,
                               derive_seed(cfg.seed, {kInitStream, m}));
    auto res = train_gcn(graph, labeling, std::move(init), opts);
    t.logs.push_back(std::move(res.log));
    trained.push_back(std::move(res.model));
  }
  t.checkpoint = std::move(trained);
  return t;
}

Matrix predict_checkpoint(const Checkpoint& ck, const Graph& graph, std::uint64_t seed) {
  if (const auto* m = std::get_if<LgnsdeModel>(&ck))
    return predict(graph, *m, m->config.mc_samples, derive_seed(seed, {kEvalStream})).probs;
  return ensemble_predict(graph, std::get<std::vector<GcnModel>>(ck)).probs;
}

std::size_t checkpoint_classes(const Checkpoint& ck) {
  if (const auto* m = std::get_if<LgnsdeModel>(&ck)) return m->num_classes();
  const auto& members = std::get<std::vector<GcnModel>>(ck);
  if (members.empty()) throw FormatError("checkpoint holds an empty ensemble");
  return members.front().w2.cols();
}

struct Scored {
  metrics::EvalReport report;
  std::vector<std::size_t> rows;  // test rows in order
  std::vector<double> entropy;    // per test row
  Mask group;                     // incorrect (in-dist) or OOD flag per test row
  Mask correct;
  std::vector<std::size_t> predicted;
};

Scored score_test(const Graph& graph, const Labeling& labeling, const Matrix& probs) {
  Scored s;
  s.rows = mask_indices(graph.test_mask);
  if (s.rows.empty()) throw ConfigError("the split has no test nodes");
  std::vector<std::size_t> in_rows;
  std::vector<int> in_labels, all_labels;
  Mask is_ood;
  for (std::size_t r : s.rows) {
    const auto row = probs.row(r);
    const std::size_t pred = metrics::argmax(row);
    const bool ood = labeling.is_ood.size() == graph.n && labeling.is_ood[r];
    s.entropy.push_back(metrics::entropy(row));
    s.predicted.push_back(pred);
    s.correct.push_back(!ood && static_cast<int>(pred) == labeling.labels[r] ? 1 : 0);
    is_ood.push_back(ood ? 1 : 0);
    all_labels.push_back(labeling.labels[r]);
    if (!ood) {
      in_rows.push_back(r);
      in_labels.push_back(labeling.labels[r]);
    }
  }
  s.report = metrics::evaluate(select_rows(probs, in_rows), in_labels);
  if (labeling.ood_class) {
    s.report.ood = metrics::ood_evaluate(select_rows(probs, s.rows), all_labels, is_ood);
    s.group = is_ood;
  } else {
    for (auto c : s.correct) s.group.push_back(c ? 0 : 1);
  }
  return s;
}

std::string predictions_csv(const Scored& s, const Labeling& labeling, const Matrix& probs) {
  std::ostringstream out;
  out << "node,label,is_ood,predicted,correct,confidence,entropy";
  for (std::size_t c = 0; c < probs.cols; ++c) out << ",p" << c;
  out << '\n';
  for (std::size_t k = 0; k < s.rows.size(); ++k) {
    const std::size_t r = s.rows[k];
    const auto row = probs.row(r);
    const bool ood = labeling.is_ood.size() > r && labeling.is_ood[r];
    out << r << ',' << labeling.labels[r] << ',' << (ood ? 1 : 0) << ',' << s.predicted[k] << ','
        << static_cast<int>(s.correct[k]) << ',' << fmt(row[s.predicted[k]]) << ',' << fmt(s.entropy[k]);
    for (double p : row) out << ',' << fmt(p);
    out << '\n';
  }
  return out.str();
}

std::string train_log_csv(const std::vector<TrainLog>& logs) {
  std::ostringstream out;
  out << "member,epoch,train_loss,kl,val_accuracy,val_nll\n";
  for (std::size_t m = 0; m < logs.size(); ++m)
    for (const auto& e : logs[m].epochs) {
      out << m << ',' << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.kl) << ',';
      if (e.val_accuracy) out << fmt(*e.val_accuracy);
      out << ',';
      if (e.val_nll) out << fmt(*e.val_nll);
      out << '\n';
    }
  return out.str();
}

std::string timing_csv(const std::vector<TrainLog>& logs) {
  std::ostringstream out;
  out << "member,epoch,wall_seconds\n";
  for (std::size_t m = 0; m < logs.size(); ++m)
    for (const auto& e : logs[m].epochs) out << m << ',' << e.epoch << ',' << fmt(e.wall_seconds) << '\n';
  return out.str();
}

json logs_json(const std::vector<TrainLog>& logs) {
  json members = json::array();
  for (const auto& l : logs)
    members.push_back({{"epochs_run", l.epochs.size()},
                       {"best_epoch", l.best_epoch},
                       {"early_stopped", l.early_stopped},
                       {"diverged", l.diverged},
                       {"diverged_at_step", l.diverged_at_step ? json(*l.diverged_at_step) : json()}});
  return members;
}

bool any_diverged(const std::vector<TrainLog>& logs) {
  return std::any_of(logs.begin(), logs.end(), [](const TrainLog& l) { return l.diverged; });
}

CommandResult finish(Writer& w, int code, std::string summary) {
  CommandResult r;
  r.exit_code = code;
  r.summary = std::move(summary);
  r.written = w.take();
  return r;
}

CommandResult cmd_generate(const RunConfig& cfg, Writer& w) {
  const Dataset d = load_dataset(cfg, cfg.ood_class);
  save_bundle(d.graph, w.dir() / "bundle");
  json j{{"command", "generate"}, {"seed", cfg.seed}, {"bundle", "bundle"}, {"dataset", dataset_json(d)}};
  w.json_file("generate.json", j);
  return finish(w, kExitOk, "generate: wrote bundle with " + std::to_string(d.graph.n) + " nodes");
}

// Shared by train and ood: fit, save checkpoint, score the test split.
CommandResult train_and_report(const RunConfig& cfg, Writer& w, const std::string& command,
                               std::optional<int> ood_class) {
  const Dataset d = load_dataset(cfg, ood_class);
  const Labeling labeling = ood_class ? leave_one_out_labeling(d.graph, *ood_class) : identity_labeling(d.graph);
  const Trained t = train_model(cfg, d.graph, labeling);
  save_checkpoint(w.dir() / "checkpoint.json", t.checkpoint);

  const Matrix probs = predict_checkpoint(t.checkpoint, d.graph, cfg.seed);
  const Scored s = score_test(d.graph, labeling, probs);
  const double max_h = std::log(static_cast<double>(probs.cols));

  json j{{"command", command},
         {"model", model_name(cfg.model)},
         {"seed", cfg.seed},
         {"dataset", dataset_json(d)},
         {"ood_class", ood_class ? json(*ood_class) : json()},
         {"kl_weight", t.kl_weight ? json(*t.kl_weight) : json()},
         {"members", logs_json(t.logs)},
         {"checkpoint", "checkpoint.json"},
         {"test", metrics::to_json(s.report)}};
  w.json_file(command + ".json", j);
  w.text("train_log.csv", train_log_csv(t.logs));
  w.text("predictions.csv", predictions_csv(s, labeling, probs));
  if (ood_class)
    w.text("ood_entropy.csv", metrics::entropy_histogram_csv(s.entropy, s.group, max_h, cfg.histogram_bins,
                                                             "in_distribution", "ood"));
  else
    w.text("entropy.csv", metrics::entropy_histogram_csv(s.entropy, s.group, max_h, cfg.histogram_bins, "correct",
                                                         "incorrect"));
  w.text("timing.csv", timing_csv(t.logs));

  std::string summary = command + ": test accuracy " + fmt(s.report.accuracy) + ", micro-AUROC " +
                        fmt(s.report.micro_auroc);
  if (s.report.ood) summary += ", OOD AUROC " + fmt(s.report.ood->auroc_ood);
  if (any_diverged(t.logs)) return finish(w, kExitValidation, summary + " (training diverged; best snapshot kept)");
  return finish(w, kExitOk, summary);
}

CommandResult cmd_eval(const RunConfig& cfg, Writer& w) {
  if (cfg.checkpoint.empty()) throw ConfigError("eval requires the 'checkpoint' key");
  const fs::path path = resolve(cfg, cfg.checkpoint);
  if (!fs::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
  const Checkpoint ck = load_checkpoint(path);
  const Dataset d = load_dataset(cfg, cfg.ood_class);
  const Labeling labeling =
      cfg.ood_class ? leave_one_out_labeling(d.graph, *cfg.ood_class) : identity_labeling(d.graph);
  if (checkpoint_classes(ck) != static_cast<std::size_t>(labeling.num_classes))
    throw ConfigError("checkpoint predicts " + std::to_string(checkpoint_classes(ck)) + " classes, dataset has " +
                      std::to_string(labeling.num_classes));
  const Matrix probs = predict_checkpoint(ck, d.graph, cfg.seed);
  const Scored s = score_test(d.graph, labeling, probs);
  const double max_h = std::log(static_cast<double>(probs.cols));
  json j{{"command", "eval"},
         {"model", std::holds_alternative<LgnsdeModel>(ck) ? "lgnsde" : "gcn_ensemble"},
         {"seed", cfg.seed},
         {"dataset", dataset_json(d)},
         {"ood_class", cfg.ood_class ? json(*cfg.ood_class) : json()},
         {"test", metrics::to_json(s.report)}};
  w.json_file("eval.json", j);
  w.text("predictions.csv", predictions_csv(s, labeling, probs));
  w.text("entropy.csv", metrics::entropy_histogram_csv(s.entropy, s.group, max_h, cfg.histogram_bins,
                                                       cfg.ood_class ? "in_distribution" : "correct",
                                                       cfg.ood_class ? "ood" : "incorrect"));
  return finish(w, kExitOk, "eval: test accuracy " + fmt(s.report.accuracy));
}

CommandResult cmd_verify(const RunConfig& cfg, Writer& w) {
  const Dataset d = load_dataset(cfg, std::nullopt);
  LgnsdeModel model;
  if (!cfg.checkpoint.empty()) {
    const fs::path path = resolve(cfg, cfg.checkpoint);
    if (!fs::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
    auto ck = load_checkpoint(path);
    if (!std::holds_alternative<LgnsdeModel>(ck)) throw ConfigError("verify needs an lgnsde checkpoint");
    model = std::get<LgnsdeModel>(std::move(ck));
  } else {
    model = LgnsdeModel::init(d.graph.d_in, static_cast<std::size_t>(d.graph.num_classes), cfg.lgnsde,
                              derive_seed(cfg.seed, {kInitStream}));
    if (cfg.verify.train_epochs > 0) {
      TrainOptions opts = cfg.train;
      opts.epochs = cfg.verify.train_epochs;
      opts.seed = derive_seed(cfg.seed, {kTrainStream});
      model = train_lgnsde(d.graph, identity_labeling(d.graph), std::move(model), opts).model;
    }
  }

  verify::LipschitzSampling sampling;
  sampling.samples = cfg.verify.lipschitz_samples;
  sampling.seed = derive_seed(cfg.seed, {kVerifyStream, 0});
  verify::PerturbationSpec spec;
  spec.epsilon = cfg.verify.epsilon;
  spec.trials = cfg.verify.trials;
  spec.grid_points = cfg.verify.grid_points;
  spec.seed = derive_seed(cfg.seed, {kVerifyStream, 1});
  const auto perturbation = verify::lemma2_check(model, d.graph, spec, sampling);

  verify::Lemma1Options l1;
  l1.paths = cfg.verify.paths;
  l1.grid_points = cfg.verify.grid_points;
  l1.batch = cfg.verify.batch;
  l1.seed = derive_seed(cfg.seed, {kVerifyStream, 2});
  const auto variance = verify::lemma1_check(model, d.graph, l1);

  LgnsdeModel em = model.clone();
  em.config.sde.scheme = Scheme::EulerMaruyama;
  const BrownianPath path(derive_seed(cfg.seed, {kVerifyStream, 3}), em.config.sde.steps, d.graph.n,
                          em.config.hidden, em.config.sde.t0, em.config.sde.t1);
  const double resnet_dev = verify::resnet_equivalence(em, d.graph, path);
  const bool resnet_ok = resnet_dev < 1e-12;

  const bool pass = variance.all_pass && perturbation.all_pass && resnet_ok;
  json j{{"command", "verify"},
         {"seed", cfg.seed},
         {"dataset", dataset_json(d)},
         {"lipschitz",
          {{"drift", perturbation.lf_sampled},
           {"diffusion", perturbation.lg},
           {"decoder", variance.decoder_lipschitz}}},
         {"variance_bound_pass", variance.all_pass},
         {"perturbation_verdict", perturbation.verdict},
         {"resnet_max_abs_deviation", resnet_dev},
         {"resnet_pass", resnet_ok},
         {"pass", pass}};
  w.json_file("verify.json", j);
  w.json_file("verify_variance.json", verify::to_json(variance));
  w.text("verify_variance.csv", verify::to_csv(variance));
  w.json_file("verify_perturbation.json", verify::to_json(perturbation));
  w.text("verify_perturbation.csv", verify::to_csv(perturbation));
  return finish(w, pass ? kExitOk : kExitValidation,
                std::string("verify: ") + (pass ? "all checks passed" : "a bound was violated") +
                    " (perturbation verdict " + perturbation.verdict + ")");
}

CommandResult cmd_gradcheck(const RunConfig& cfg, Writer& w) {
  GradcheckOptions opts;
  opts.nodes = cfg.gradcheck.nodes;
  opts.hidden = cfg.gradcheck.hidden;
  opts.steps = cfg.gradcheck.steps;
  opts.step = cfg.gradcheck.step;
  opts.dropout = cfg.lgnsde.dropout;
  opts.scheme = cfg.lgnsde.sde.scheme;
  json seeds = json::array();
  std::ostringstream csv;
  csv << "seed,entries,max_rel_error,max_abs_error,worst_parameter\n";
  double worst = 0.0;
  for (std::size_t k = 0; k < cfg.gradcheck.seeds; ++k) {
    const auto r = elbo_gradcheck(derive_seed(cfg.seed, {kGradStream, k}), opts);
    worst = std::max(worst, r.max_rel_error);
    seeds.push_back({{"seed", r.seed},
                     {"entries", r.entries},
                     {"max_rel_error", r.max_rel_error},
                     {"max_abs_error", r.max_abs_error},
                     {"worst_parameter", r.worst_parameter}});
    csv << r.seed << ',' << r.entries << ',' << fmt(r.max_rel_error) << ',' << fmt(r.max_abs_error) << ','
        << r.worst_parameter << '\n';
  }
  const bool pass = worst < cfg.gradcheck.threshold;
  json j{{"command", "gradcheck"},
         {"seed", cfg.seed},
         {"threshold", cfg.gradcheck.threshold},
         {"relative_error_floor", opts.floor},
         {"max_rel_error", worst},
         {"pass", pass},
         {"seeds", seeds}};
  w.json_file("gradcheck.json", j);
  w.text("gradcheck.csv", csv.str());
  return finish(w, pass ? kExitOk : kExitValidation, "gradcheck: max relative error " + fmt(worst));
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  if (name == "generate") return Command::Generate;
  if (name == "train") return Command::Train;
  if (name == "eval") return Command::Eval;
  if (name == "ood") return Command::Ood;
  if (name == "verify") return Command::Verify;
  if (name == "gradcheck") return Command::Gradcheck;
  return std::nullopt;
}

const char* command_name(Command c) {
  switch (c) {
    case Command::Generate: return "generate";
    case Command::Train: return "train";
    case Command::Eval: return "eval";
    case Command::Ood: return "ood";
    case Command::Verify: return "verify";
    case Command::Gradcheck: return "gradcheck";
  }
  return "?";
}

CommandResult run_command(Command command, const RunConfig& config, const fs::path& out_dir) {
  kernels::set_threads(static_cast<int>(config.workers));
  Writer w(out_dir);
  switch (command) {
    case Command::Generate: return cmd_generate(config, w);
    case Command::Train: return train_and_report(config, w, "train", std::nullopt);
    case Command::Ood:
      if (!config.ood_class) throw ConfigError("ood requires the 'ood_class' key");
      return train_and_report(config, w, "ood", config.ood_class);
    case Command::Eval: return cmd_eval(config, w);
    case Command::Verify: return cmd_verify(config, w);
    case Command::Gradcheck: return cmd_gradcheck(config, w);
  }
  throw std::logic_error("unhandled command");
}

}  // namespace lgnsde::app
