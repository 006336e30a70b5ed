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

#include "lgnsde/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "lgnsde/errors.hpp"

namespace lgnsde {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  field = trim(field);
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty())
    throw ParseError("invalid " + std::string(what) + " '" + std::string(field) + "'", line);
  return value;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::vector<Edge> canonical_edges(const std::vector<Edge>& edges, std::size_t n) {
  std::set<Edge> unique;
  for (auto [u, v] : edges) {
    if (u >= n || v >= n)
      throw std::invalid_argument("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") outside [0, " +
                                  std::to_string(n) + ")");
    if (u == v) continue;
    unique.insert(u < v ? Edge{u, v} : Edge{v, u});
  }
  return {unique.begin(), unique.end()};
}

}  // namespace

SparseMatrix normalized_adjacency(const std::vector<Edge>& edges, std::size_t n) {
  const auto canon = canonical_edges(edges, n);
  std::vector<double> degree(n, 1.0);
  for (auto [u, v] : canon) {
    degree[u] += 1.0;
    degree[v] += 1.0;
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

  std::vector<Triplet> entries;
  entries.reserve(n + 2 * canon.size());
  for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, inv_sqrt[i] * inv_sqrt[i]});
  for (auto [u, v] : canon) {
    // Same product for both orientations keeps the matrix exactly symmetric.
    const double w = inv_sqrt[u] * inv_sqrt[v];
    entries.push_back({u, v, w});
    entries.push_back({v, u, w});
  }
  return SparseMatrix::from_triplets(n, n, std::move(entries));
}

Graph make_graph(std::size_t n, std::size_t d_in, std::vector<double> features, std::vector<int> labels,
                 int num_classes, const std::vector<Edge>& edges) {
  if (features.size() != n * d_in)
    throw FormatError("feature array holds " + std::to_string(features.size()) + " values, expected " +
                      std::to_string(n) + "x" + std::to_string(d_in));
  if (labels.size() != n) throw FormatError("label count " + std::to_string(labels.size()) + " != node count");
  for (int l : labels)
    if (l < 0 || l >= num_classes) throw FormatError("label " + std::to_string(l) + " outside class range");

  Graph g;
  g.n = n;
  g.d_in = d_in;
  g.features = Tensor::from_values({n, d_in}, std::move(features));
  g.labels = std::move(labels);
  g.num_classes = num_classes;
  g.edges = canonical_edges(edges, n);
  g.norm_adj = normalized_adjacency(g.edges, n);
  g.train_mask.assign(n, 0);
  g.val_mask.assign(n, 0);
  g.test_mask.assign(n, 0);
  return g;
}

Graph load_bundle(const std::filesystem::path& dir) {
  auto nodes_in = open_or_throw(dir / "nodes.tsv");
  std::map<std::size_t, std::pair<int, std::vector<double>>> rows;
  std::optional<std::size_t> width;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(nodes_in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_tabs(body);
    if (fields.size() < 2) throw ParseError("expected node_id<TAB>label<TAB>features", lineno);
    const auto id = parse_number<std::size_t>(fields[0], lineno, "node id");
    const int label = parse_number<int>(fields[1], lineno, "label");
    std::vector<double> feats;
    feats.reserve(fields.size() - 2);
    for (std::size_t i = 2; i < fields.size(); ++i) feats.push_back(parse_number<double>(fields[i], lineno, "feature"));
    if (width && *width != feats.size())
      throw FormatError("line " + std::to_string(lineno) + ": " + std::to_string(feats.size()) +
                        " features, earlier lines have " + std::to_string(*width));
    width = feats.size();
    if (label < 0) throw ParseError("negative label", lineno);
    if (!rows.emplace(id, std::make_pair(label, std::move(feats))).second)
      throw ParseError("duplicate node id " + std::to_string(id), lineno);
  }
  const std::size_t n = rows.size();
  if (n == 0) throw FormatError(dir.string() + "/nodes.tsv has no nodes");
  if (rows.rbegin()->first != n - 1) throw FormatError("node ids are not contiguous from 0");

  std::vector<double> features;
  features.reserve(n * *width);
  std::vector<int> labels;
  int num_classes = 0;
  for (auto& [id, row] : rows) {
    labels.push_back(row.first);
    num_classes = std::max(num_classes, row.first + 1);
    features.insert(features.end(), row.second.begin(), row.second.end());
  }

  std::vector<Edge> edges;
  auto edges_in = open_or_throw(dir / "edges.tsv");
  lineno = 0;
  while (std::getline(edges_in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_tabs(body);
    if (fields.size() != 2) throw ParseError("expected src<TAB>dst", lineno);
    const auto u = parse_number<std::size_t>(fields[0], lineno, "edge endpoint");
    const auto v = parse_number<std::size_t>(fields[1], lineno, "edge endpoint");
    if (u >= n || v >= n) throw ParseError("edge endpoint outside node range", lineno);
    edges.emplace_back(u, v);
  }

  Graph g = make_graph(n, *width, std::move(features), std::move(labels), num_classes, edges);

  const auto splits_path = dir / "splits.json";
  if (std::filesystem::exists(splits_path)) {
    std::ifstream in(splits_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("splits.json: ") + e.what(), 0);
    }
    auto fill = [&](const char* key, Mask& mask) {
      if (!j.contains(key)) return;
      for (const auto& idx : j.at(key)) {
        const auto i = idx.get<std::size_t>();
        if (i >= n) throw FormatError(std::string("splits.json: ") + key + " index " + std::to_string(i) + " out of range");
        mask[i] = 1;
      }
    };
    fill("train", g.train_mask);
    fill("val", g.val_mask);
    fill("test", g.test_mask);
    for (std::size_t i = 0; i < n; ++i)
      if (g.train_mask[i] + g.val_mask[i] + g.test_mask[i] > 1)
        throw FormatError("splits.json: node " + std::to_string(i) + " appears in more than one split");
  }
  return g;
}

void save_bundle(const Graph& graph, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "nodes.tsv");
    char buf[32];
    auto feats = graph.features.values();
    for (std::size_t i = 0; i < graph.n; ++i) {
      out << i << '\t' << graph.labels[i];
      for (std::size_t k = 0; k < graph.d_in; ++k) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), feats[i * graph.d_in + k]);
        out << '\t' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "edges.tsv");
    for (auto [u, v] : graph.edges) out << u << '\t' << v << '\n';
  }
  const bool has_splits = std::any_of(graph.train_mask.begin(), graph.train_mask.end(), [](auto m) { return m != 0; });
  if (has_splits) {
    nlohmann::json j;
    j["train"] = mask_indices(graph.train_mask);
    j["val"] = mask_indices(graph.val_mask);
    j["test"] = mask_indices(graph.test_mask);
    std::ofstream(dir / "splits.json") << j.dump() << '\n';
  } else {
    std::filesystem::remove(dir / "splits.json");
  }
}

CoraLoad load_cora_raw(const std::filesystem::path& content_path, const std::filesystem::path& cites_path) {
  auto in = open_or_throw(content_path);
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> label_strings;
  std::vector<double> features;
  std::optional<std::size_t> width;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_tabs(body);
    if (fields.size() < 3) throw ParseError("expected id<TAB>features...<TAB>label", lineno);
    const std::size_t w = fields.size() - 2;
    if (width && *width != w)
      throw FormatError("line " + std::to_string(lineno) + ": " + std::to_string(w) + " features, expected " +
                        std::to_string(*width));
    width = w;
    if (!index.emplace(std::string(fields[0]), index.size()).second)
      throw ParseError("duplicate paper id '" + std::string(fields[0]) + "'", lineno);
    for (std::size_t i = 1; i + 1 < fields.size(); ++i) features.push_back(parse_number<double>(fields[i], lineno, "feature"));
    label_strings.emplace_back(trim(fields.back()));
  }
  if (index.empty()) throw FormatError(content_path.string() + " holds no papers");

  std::vector<std::string> names(label_strings.begin(), label_strings.end());
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::vector<int> labels;
  labels.reserve(label_strings.size());
  for (const auto& s : label_strings)
    labels.push_back(static_cast<int>(std::lower_bound(names.begin(), names.end(), s) - names.begin()));

  auto cites = open_or_throw(cites_path);
  std::vector<Edge> edges;
  std::size_t dropped = 0;
  lineno = 0;
  while (std::getline(cites, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty()) continue;
    auto fields = split_tabs(body);
    if (fields.size() != 2) throw ParseError("expected cited<TAB>citing", lineno);
    const auto a = index.find(std::string(trim(fields[0])));
    const auto b = index.find(std::string(trim(fields[1])));
    if (a == index.end() || b == index.end()) {
      ++dropped;
      continue;
    }
    edges.emplace_back(a->second, b->second);
  }

  const std::size_t n = index.size();
  CoraLoad result{make_graph(n, *width, std::move(features), std::move(labels), static_cast<int>(names.size()), edges),
                  dropped};
  result.graph.class_names = std::move(names);
  return result;
}

Graph sbm_generate(const SbmParams& p) {
  if (p.nodes_per_class < 1) throw std::invalid_argument("sbm: nodes_per_class must be >= 1");
  if (p.classes < 1) throw std::invalid_argument("sbm: classes must be >= 1");
  if (p.feature_dim < 1) throw std::invalid_argument("sbm: feature_dim must be >= 1");
  if (!(0.0 <= p.p_out && p.p_out <= p.p_in && p.p_in <= 1.0))
    throw std::invalid_argument("sbm: require 0 <= p_out <= p_in <= 1");
  if (!(p.feature_gap >= 0.0)) throw std::invalid_argument("sbm: feature_gap must be >= 0");

  const std::size_t n = static_cast<std::size_t>(p.classes) * static_cast<std::size_t>(p.nodes_per_class);
  Rng rng(p.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  std::vector<int> labels(n);
  std::vector<double> features(n * p.feature_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i / static_cast<std::size_t>(p.nodes_per_class));
    labels[i] = c;
    for (std::size_t k = 0; k < p.feature_dim; ++k) features[i * p.feature_dim + k] = noise(rng);
    features[i * p.feature_dim + static_cast<std::size_t>(c) % p.feature_dim] += p.feature_gap;
  }
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      const double prob = labels[u] == labels[v] ? p.p_in : p.p_out;
      if (coin(rng) < prob) edges.emplace_back(u, v);
    }
  return make_graph(n, p.feature_dim, std::move(features), std::move(labels), p.classes, edges);
}

namespace {

std::vector<std::vector<std::size_t>> nodes_by_class(const Graph& g) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(g.num_classes));
  for (std::size_t i = 0; i < g.n; ++i) by_class[static_cast<std::size_t>(g.labels[i])].push_back(i);
  return by_class;
}

}  // namespace

Graph make_splits(const Graph& graph, const SplitSpec& spec) {
  if (spec.ood_class && (*spec.ood_class < 0 || *spec.ood_class >= graph.num_classes))
    throw std::invalid_argument("ood_class " + std::to_string(*spec.ood_class) + " outside [0, " +
                                std::to_string(graph.num_classes) + ")");
  Graph g = graph;
  g.train_mask.assign(g.n, 0);
  g.val_mask.assign(g.n, 0);
  g.test_mask.assign(g.n, 0);
  Rng rng(spec.seed);
  auto by_class = nodes_by_class(g);
  const auto is_ood = [&](std::size_t c) { return spec.ood_class && static_cast<std::size_t>(*spec.ood_class) == c; };

  if (const auto* counts = std::get_if<PerClassCounts>(&spec.scheme)) {
    if (counts->train_per_class < 1 || counts->val_count < 0 || counts->test_count < 0)
      throw std::invalid_argument("split counts must be positive");
    std::vector<std::size_t> rest;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto& nodes = by_class[c];
      std::shuffle(nodes.begin(), nodes.end(), rng);
      std::size_t take = 0;
      if (!is_ood(c)) {
        take = static_cast<std::size_t>(counts->train_per_class);
        if (nodes.size() < take)
          throw std::invalid_argument("class " + std::to_string(c) + " has " + std::to_string(nodes.size()) +
                                      " nodes, fewer than train_per_class=" + std::to_string(take));
      }
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i < take)
          g.train_mask[nodes[i]] = 1;
        else
          rest.push_back(nodes[i]);
      }
    }
    std::sort(rest.begin(), rest.end());
    std::shuffle(rest.begin(), rest.end(), rng);
    const auto nval = static_cast<std::size_t>(counts->val_count);
    const auto ntest = static_cast<std::size_t>(counts->test_count);
    if (nval + ntest > rest.size())
      throw std::invalid_argument("val_count + test_count = " + std::to_string(nval + ntest) + " exceeds the " +
                                  std::to_string(rest.size()) + " nodes left after training selection");
    for (std::size_t i = 0; i < nval; ++i) g.val_mask[rest[i]] = 1;
    for (std::size_t i = nval; i < nval + ntest; ++i) g.test_mask[rest[i]] = 1;
  } else {
    const auto& f = std::get<SplitFractions>(spec.scheme);
    for (double x : {f.train, f.val, f.test})
      if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("split fractions must lie in [0, 1]");
    if (f.train + f.val + f.test > 1.0 + 1e-9) throw std::invalid_argument("split fractions sum above 1");
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto& nodes = by_class[c];
      std::shuffle(nodes.begin(), nodes.end(), rng);
      const auto nc = static_cast<double>(nodes.size());
      std::size_t ntrain = is_ood(c) ? 0 : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f.train * nc)));
      if (ntrain > nodes.size())
        throw std::invalid_argument("class " + std::to_string(c) + " too small for the requested train fraction");
      const std::size_t nval = std::min(nodes.size() - ntrain, static_cast<std::size_t>(std::llround(f.val * nc)));
      std::size_t ntest = std::min(nodes.size() - ntrain - nval, static_cast<std::size_t>(std::llround(f.test * nc)));
      // The held-out class has no train share; it goes to test instead.
      if (is_ood(c)) ntest = nodes.size() - nval;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i < ntrain)
          g.train_mask[nodes[i]] = 1;
        else if (i < ntrain + nval)
          g.val_mask[nodes[i]] = 1;
        else if (i < ntrain + nval + ntest)
          g.test_mask[nodes[i]] = 1;
      }
    }
  }
  if (std::none_of(g.train_mask.begin(), g.train_mask.end(), [](auto m) { return m != 0; }))
    throw std::invalid_argument("split produced an empty training set");
  return g;
}

Labeling identity_labeling(const Graph& graph) {
  Labeling l;
  l.labels = graph.labels;
  l.num_classes = graph.num_classes;
  l.is_ood.assign(graph.n, 0);
  return l;
}

Labeling leave_one_out_labeling(const Graph& graph, int ood_class) {
  if (ood_class < 0 || ood_class >= graph.num_classes)
    throw std::invalid_argument("ood_class " + std::to_string(ood_class) + " outside class range");
  Labeling l;
  l.num_classes = graph.num_classes - 1;
  l.ood_class = ood_class;
  l.labels.resize(graph.n);
  l.is_ood.assign(graph.n, 0);
  for (std::size_t i = 0; i < graph.n; ++i) {
    const int y = graph.labels[i];
    if (y == ood_class) {
      l.labels[i] = -1;
      l.is_ood[i] = 1;
    } else {
      l.labels[i] = y < ood_class ? y : y - 1;
    }
  }
  return l;
}

std::vector<std::size_t> mask_indices(const Mask& mask) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) idx.push_back(i);
  return idx;
}

}  // namespace lgnsde
