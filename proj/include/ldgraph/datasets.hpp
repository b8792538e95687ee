#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ldgraph/errors.hpp"
#include "ldgraph/graph.hpp"
#include "ldgraph/labelfeat.hpp"
#include "ldgraph/rng.hpp"

namespace ldgraph {

/// A loaded classification problem: graph, full ground-truth labels and the
/// mapping between external string ids and dense node ids.
struct Dataset {
  Graph graph;
  LabelMatrix labels;
  TaskMode task = TaskMode::multiclass;
  std::vector<std::string> node_ids;                 // dense id -> external id
  std::unordered_map<std::string, NodeId> id_of;     // external id -> dense id
  std::vector<std::string> label_names;              // label index -> name

  NodeId num_nodes() const { return graph.num_nodes(); }
  std::size_t num_labels() const { return labels.num_labels; }

  std::vector<NodeId> labeled_nodes() const {
    std::vector<NodeId> out;
    for (NodeId v = 0; v < num_nodes(); ++v)
      if (labels.labeled[v]) out.push_back(v);
    return out;
  }
};

/// Train/validation/test node partition plus the seed that generated it.
/// The three sets are pairwise disjoint, stored sorted ascending, and every
/// train node is labeled.
struct SplitSpec {
  std::uint64_t seed = 0;
  std::vector<NodeId> train, val, test;

  void validate(const Dataset& ds) const {
    auto check = [&](const std::vector<NodeId>& v, const char* name) {
      for (NodeId x : v)
        if (x >= ds.num_nodes())
          throw InputError(std::string("split: ") + name + " node out of range");
      if (!std::is_sorted(v.begin(), v.end()) ||
          std::adjacent_find(v.begin(), v.end()) != v.end())
        throw InputError(std::string("split: ") + name + " not sorted unique");
    };
    check(train, "train");
    check(val, "val");
    check(test, "test");
    auto disjoint = [](const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
      std::vector<NodeId> tmp;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(tmp));
      return tmp.empty();
    };
    if (!disjoint(train, val) || !disjoint(train, test) || !disjoint(val, test))
      throw InputError("split: sets are not pairwise disjoint");
    for (NodeId v : train)
      if (!ds.labels.labeled[v])
        throw InputError("split: train node " + std::to_string(v) + " is unlabeled");
  }

  bool operator==(const SplitSpec& o) const = default;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

/// Draws `count` elements from `pool` without replacement (partial
/// Fisher-Yates); consumes pool entries in place.
inline std::vector<NodeId> draw_without_replacement(std::vector<NodeId>& pool,
                                                    std::size_t count, SplitMix64& rng) {
  std::vector<NodeId> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

}  // namespace detail

/// Citation-benchmark loader. Content lines are
/// `<id> <attr>... <class>` (tab-separated; attributes are ignored), cites
/// lines are `<cited_id> <citing_id>`. Nodes appear in content-file order;
/// cite lines touching unknown ids are skipped and counted.
inline Dataset load_content_cites(const std::filesystem::path& content_path,
                                  const std::filesystem::path& cites_path,
                                  std::size_t* skipped_cites = nullptr) {
  std::ifstream content(content_path);
  if (!content) throw InputError("cannot open: " + content_path.string());

  Dataset ds;
  ds.task = TaskMode::multiclass;
  std::unordered_map<std::string, std::size_t> label_of;
  std::vector<std::size_t> node_label;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(content, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split_fields(line, '\t');
    if (fields.size() < 2)
      throw InputError(content_path.string() + ":" + std::to_string(lineno) +
                       ": expected `<id>\\t...\\t<class>`");
    const std::string& id = fields.front();
    const std::string& cls = fields.back();
    if (id.empty() || cls.empty())
      throw InputError(content_path.string() + ":" + std::to_string(lineno) +
                       ": empty id or class");
    if (ds.id_of.count(id))
      throw InputError(content_path.string() + ":" + std::to_string(lineno) +
                       ": duplicate node id " + id);
    ds.id_of.emplace(id, static_cast<NodeId>(ds.node_ids.size()));
    ds.node_ids.push_back(id);
    auto [it, fresh] = label_of.emplace(cls, ds.label_names.size());
    if (fresh) ds.label_names.push_back(cls);
    node_label.push_back(it->second);
  }
  if (ds.node_ids.empty()) throw InputError(content_path.string() + ": no nodes");

  std::ifstream cites(cites_path);
  if (!cites) throw InputError("cannot open: " + cites_path.string());
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::size_t skipped = 0;
  lineno = 0;
  while (std::getline(cites, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, extra;
    if (!(ss >> a >> b) || (ss >> extra))
      throw InputError(cites_path.string() + ":" + std::to_string(lineno) +
                       ": expected `<cited_id>\\t<citing_id>`");
    auto ia = ds.id_of.find(a);
    auto ib = ds.id_of.find(b);
    if (ia == ds.id_of.end() || ib == ds.id_of.end()) {
      ++skipped;
      continue;
    }
    edges.emplace_back(ia->second, ib->second);
  }
  if (skipped_cites) *skipped_cites = skipped;

  ds.graph = Graph::from_edges(edges, static_cast<NodeId>(ds.node_ids.size()));
  ds.labels = LabelMatrix::zeros(ds.node_ids.size(), ds.label_names.size());
  for (std::size_t v = 0; v < node_label.size(); ++v) {
    const std::size_t lab[] = {node_label[v]};
    ds.labels.set_row(v, lab);
  }
  ds.labels.validate(ds.task);
  return ds;
}

/// Generic ingestion: edges TSV `<src>\t<dst>` plus labels TSV
/// `<id>\t<label>[,<label>...]`. Ids are strings mapped to dense indices in
/// first-appearance order of the labels file, then of the edges file; nodes
/// without a label line stay unlabeled.
inline Dataset load_edge_label_tsv(const std::filesystem::path& edges_path,
                                   const std::filesystem::path& labels_path,
                                   TaskMode task) {
  Dataset ds;
  ds.task = task;
  auto intern = [&ds](const std::string& id) {
    auto [it, fresh] = ds.id_of.emplace(id, static_cast<NodeId>(ds.node_ids.size()));
    if (fresh) ds.node_ids.push_back(id);
    return it->second;
  };

  std::ifstream labels(labels_path);
  if (!labels) throw InputError("cannot open: " + labels_path.string());
  std::unordered_map<std::string, std::size_t> label_of;
  std::vector<std::pair<NodeId, std::vector<std::size_t>>> node_labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(labels, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split_fields(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw InputError(labels_path.string() + ":" + std::to_string(lineno) +
                       ": expected `<id>\\t<label>[,<label>...]`");
    const NodeId v = intern(fields[0]);
    std::vector<std::size_t> ls;
    for (const std::string& name : detail::split_fields(fields[1], ',')) {
      if (name.empty())
        throw InputError(labels_path.string() + ":" + std::to_string(lineno) +
                         ": empty label name");
      auto [it, fresh] = label_of.emplace(name, ds.label_names.size());
      if (fresh) ds.label_names.push_back(name);
      ls.push_back(it->second);
    }
    if (task == TaskMode::multiclass && ls.size() != 1)
      throw InputError(labels_path.string() + ":" + std::to_string(lineno) +
                       ": multiclass node with " + std::to_string(ls.size()) + " labels");
    node_labels.emplace_back(v, std::move(ls));
  }
  if (ds.label_names.empty())
    throw InputError(labels_path.string() + ": no classes (empty labels file)");

  std::ifstream edges(edges_path);
  if (!edges) throw InputError("cannot open: " + edges_path.string());
  std::vector<std::pair<NodeId, NodeId>> edge_pairs;
  lineno = 0;
  while (std::getline(edges, line)) {
    ++lineno;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, extra;
    if (!(ss >> a >> b) || (ss >> extra))
      throw InputError(edges_path.string() + ":" + std::to_string(lineno) +
                       ": expected `<src>\\t<dst>`");
    edge_pairs.emplace_back(intern(a), intern(b));
  }

  ds.graph = Graph::from_edges(edge_pairs, static_cast<NodeId>(ds.node_ids.size()));
  ds.labels = LabelMatrix::zeros(ds.node_ids.size(), ds.label_names.size());
  for (const auto& [v, ls] : node_labels) ds.labels.set_row(v, ls);
  ds.labels.validate(task);
  return ds;
}

/// Writes a dataset back as the edges/labels TSV pair (dense ids as decimal
/// strings, multilabel names comma-joined). Deterministic: nodes ascending,
/// edges in canonical order.
inline void save_edge_label_tsv(const Dataset& ds, const std::filesystem::path& edges_path,
                                const std::filesystem::path& labels_path) {
  std::ofstream edges(edges_path);
  if (!edges) throw InputError("cannot open for writing: " + edges_path.string());
  for (const auto& [a, b] : ds.graph.edge_list()) edges << a << '\t' << b << '\n';
  std::ofstream labels(labels_path);
  if (!labels) throw InputError("cannot open for writing: " + labels_path.string());
  for (NodeId v = 0; v < ds.num_nodes(); ++v) {
    if (!ds.labels.labeled[v]) continue;
    labels << v << '\t';
    bool first = true;
    for (std::size_t j = 0; j < ds.num_labels(); ++j)
      if (ds.labels.at(v, j)) {
        labels << (first ? "" : ",") << ds.label_names[j];
        first = false;
      }
    labels << '\n';
  }
}

/// Planetoid-style split: per_class training instances per class, then
/// n_test test and n_val validation nodes drawn uniformly from the
/// remaining labeled nodes, all without replacement.
inline SplitSpec planetoid_split(const Dataset& ds, std::size_t per_class = 20,
                                 std::size_t n_val = 500, std::size_t n_test = 1000,
                                 std::uint64_t seed = 0) {
  if (ds.task != TaskMode::multiclass)
    throw InputError("planetoid_split: requires a multiclass dataset");
  SplitMix64 rng(seed);
  SplitSpec split;
  split.seed = seed;

  for (std::size_t c = 0; c < ds.num_labels(); ++c) {
    std::vector<NodeId> members;
    for (NodeId v = 0; v < ds.num_nodes(); ++v)
      if (ds.labels.labeled[v] && ds.labels.at(v, c)) members.push_back(v);
    if (members.size() < per_class)
      throw InputError("planetoid_split: class `" + ds.label_names[c] + "` has only " +
                       std::to_string(members.size()) + " members, need " +
                       std::to_string(per_class));
    auto picked = detail::draw_without_replacement(members, per_class, rng);
    split.train.insert(split.train.end(), picked.begin(), picked.end());
  }
  std::sort(split.train.begin(), split.train.end());

  std::vector<NodeId> rest;
  for (NodeId v : ds.labeled_nodes())
    if (!std::binary_search(split.train.begin(), split.train.end(), v)) rest.push_back(v);
  if (rest.size() < n_test + n_val)
    throw InputError("planetoid_split: only " + std::to_string(rest.size()) +
                     " nodes left for " + std::to_string(n_test + n_val) + " test+val");
  split.test = detail::draw_without_replacement(rest, n_test, rng);
  split.val = detail::draw_without_replacement(rest, n_val, rng);
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.val.begin(), split.val.end());
  split.validate(ds);
  return split;
}

/// Uniform (non-stratified) partition of the labeled nodes:
/// floor(train_frac*n) train, floor(val_frac*n) val, remainder test.
inline SplitSpec ratio_split(const Dataset& ds, double train_frac = 0.7,
                             double val_frac = 0.1, double test_frac = 0.2,
                             std::uint64_t seed = 0) {
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw InputError("ratio_split: fractions must sum to 1");
  if (train_frac < 0 || val_frac < 0 || test_frac < 0)
    throw InputError("ratio_split: negative fraction");
  SplitMix64 rng(seed);
  std::vector<NodeId> pool = ds.labeled_nodes();
  rng.shuffle(pool);
  const std::size_t n = pool.size();
  const std::size_t n_train = static_cast<std::size_t>(train_frac * static_cast<double>(n));
  const std::size_t n_valid = static_cast<std::size_t>(val_frac * static_cast<double>(n));
  SplitSpec split;
  split.seed = seed;
  split.train.assign(pool.begin(), pool.begin() + n_train);
  split.val.assign(pool.begin() + n_train, pool.begin() + n_train + n_valid);
  split.test.assign(pool.begin() + n_train + n_valid, pool.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  split.validate(ds);
  return split;
}

namespace detail {

/// Connected components by iterative DFS; returns component id per node.
inline std::vector<std::size_t> connected_components(const Graph& g, std::size_t* count) {
  std::vector<std::size_t> comp(g.num_nodes(), SIZE_MAX);
  std::size_t next = 0;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < g.num_nodes(); ++s) {
    if (comp[s] != SIZE_MAX) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : g.neighbors(u))
        if (comp[v] == SIZE_MAX) {
          comp[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  if (count) *count = next;
  return comp;
}

}  // namespace detail

inline constexpr const char* kSynthClassNames[4] = {"user", "server", "database", "printer"};

/// Synthetic communication-network dataset. Each component is one fixed
/// motif of 11 nodes: a printer wired to three users, a database wired to
/// two users and a server, plus bridge users and a hub server. The printer
/// and the database have the same degree and the same neighbor degrees, so
/// connectivity alone cannot separate them; their neighbor-label multisets
/// differ ({user x3} vs {user x2, server}), so the label distribution can.
/// Node ids are globally permuted by the seed.
inline Dataset make_figure1_synthetic(std::size_t num_components, std::uint64_t seed) {
  if (num_components < 2) throw InputError("make_figure1_synthetic: need >= 2 components");

  // Local roles: 0 printer, 1 database, 2 server, 3 hub server, 4..10 users.
  constexpr std::size_t kMotifSize = 11;
  constexpr std::pair<NodeId, NodeId> kMotifEdges[] = {
      {0, 4}, {0, 5}, {0, 6},   // printer - users
      {1, 7}, {1, 8}, {1, 2},   // database - users, server
      {4, 3}, {5, 3}, {6, 3},   // printer's users - hub
      {7, 9}, {8, 10},          // database's users - bridge users
      {9, 3}, {10, 3},          // bridge users - hub
      {2, 3},                   // server - hub
  };
  constexpr std::size_t kMotifClass[kMotifSize] = {3, 2, 1, 1, 0, 0, 0, 0, 0, 0, 0};

  const std::size_t n = num_components * kMotifSize;
  SplitMix64 rng(seed);
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);

  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::size_t> cls(n);
  for (std::size_t c = 0; c < num_components; ++c) {
    const std::size_t base = c * kMotifSize;
    for (const auto& [a, b] : kMotifEdges) edges.emplace_back(perm[base + a], perm[base + b]);
    for (std::size_t i = 0; i < kMotifSize; ++i) cls[perm[base + i]] = kMotifClass[i];
  }

  Dataset ds;
  ds.task = TaskMode::multiclass;
  ds.graph = Graph::from_edges(edges, static_cast<NodeId>(n));
  ds.label_names.assign(std::begin(kSynthClassNames), std::end(kSynthClassNames));
  ds.labels = LabelMatrix::zeros(n, 4);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t lab[] = {cls[v]};
    ds.labels.set_row(v, lab);
  }
  for (NodeId v = 0; v < ds.num_nodes(); ++v) ds.node_ids.push_back(std::to_string(v));
  for (NodeId v = 0; v < ds.num_nodes(); ++v) ds.id_of.emplace(ds.node_ids[v], v);
  return ds;
}

/// Figure-1 evaluation split: hold out every device (database/printer) node
/// of n_test randomly chosen components as the test set and of n_val
/// further components as the validation set; every other labeled node
/// (all users and servers everywhere, devices of the remaining components)
/// is training data.
inline SplitSpec figure1_split(const Dataset& ds, std::size_t n_test_components,
                               std::size_t n_val_components, std::uint64_t seed) {
  std::size_t device_labels[2];
  {
    auto find_label = [&ds](const std::string& name) {
      for (std::size_t j = 0; j < ds.label_names.size(); ++j)
        if (ds.label_names[j] == name) return j;
      throw InputError("figure1_split: dataset has no `" + name + "` class");
    };
    device_labels[0] = find_label("database");
    device_labels[1] = find_label("printer");
  }
  std::size_t num_comps = 0;
  const auto comp = detail::connected_components(ds.graph, &num_comps);
  if (n_test_components + n_val_components >= num_comps)
    throw InputError("figure1_split: not enough components to hold out");

  SplitMix64 rng(seed);
  std::vector<NodeId> order(num_comps);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::vector<int> holdout(num_comps, 0);  // 0 train, 1 test, 2 val
  for (std::size_t i = 0; i < n_test_components; ++i) holdout[order[i]] = 1;
  for (std::size_t i = 0; i < n_val_components; ++i)
    holdout[order[n_test_components + i]] = 2;

  SplitSpec split;
  split.seed = seed;
  for (NodeId v = 0; v < ds.num_nodes(); ++v) {
    if (!ds.labels.labeled[v]) continue;
    const bool device =
        ds.labels.at(v, device_labels[0]) || ds.labels.at(v, device_labels[1]);
    if (device && holdout[comp[v]] == 1)
      split.test.push_back(v);
    else if (device && holdout[comp[v]] == 2)
      split.val.push_back(v);
    else
      split.train.push_back(v);
  }
  split.validate(ds);
  return split;
}

/// Split file: structured text with `seed`, `train`, `val`, `test` lines,
/// each set as a space-separated ascending integer array. Round-trips
/// bit-exactly.
inline void save_split(const SplitSpec& s, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  os << "seed " << s.seed << '\n';
  auto emit = [&os](const char* name, const std::vector<NodeId>& v) {
    os << name;
    for (NodeId x : v) os << ' ' << x;
    os << '\n';
  };
  emit("train", s.train);
  emit("val", s.val);
  emit("test", s.test);
  if (!os) throw InputError("write failed: " + path.string());
}

inline SplitSpec load_split(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open: " + path.string());
  SplitSpec s;
  std::string line;
  bool have_seed = false, have_train = false, have_val = false, have_test = false;
  while (std::getline(is, line)) {
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "seed") {
      if (!(ss >> s.seed)) throw InputError(path.string() + ": bad seed line");
      have_seed = true;
    } else if (key == "train" || key == "val" || key == "test") {
      std::vector<NodeId>& dst =
          key == "train" ? s.train : (key == "val" ? s.val : s.test);
      NodeId v;
      while (ss >> v) dst.push_back(v);
      (key == "train" ? have_train : key == "val" ? have_val : have_test) = true;
    } else {
      throw InputError(path.string() + ": unknown field `" + key + "`");
    }
  }
  if (!have_seed || !have_train || !have_val || !have_test)
    throw InputError(path.string() + ": missing split fields");
  return s;
}

}  // namespace ldgraph
