#pragma once

#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ldgraph/ldgraph.hpp"

namespace test_support {

using namespace ldgraph;

/// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<unsigned> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("ldgraph-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream os(p);
  os << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline Graph erdos_renyi(SplitMix64& rng, NodeId n, double p) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (rng.next_double() < p) edges.emplace_back(i, j);
  return Graph::from_edges(edges, n);
}

inline bool is_connected(const Graph& g) {
  if (g.num_nodes() == 0) return true;
  std::vector<std::uint8_t> seen(g.num_nodes(), 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : g.neighbors(u))
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  return count == g.num_nodes();
}

inline Graph random_connected_graph(SplitMix64& rng, NodeId min_n, NodeId max_n) {
  for (;;) {
    const NodeId n =
        min_n + static_cast<NodeId>(rng.next_below(max_n - min_n + 1));
    const Graph g = erdos_renyi(rng, n, 0.25 + 0.5 * rng.next_double());
    if (n <= 1 || is_connected(g)) return g;
  }
}

/// Random labels over a graph's node set; every node labeled.
inline LabelMatrix random_labels(SplitMix64& rng, std::size_t n, std::size_t l,
                                 TaskMode task) {
  LabelMatrix m = LabelMatrix::zeros(n, l);
  for (std::size_t v = 0; v < n; ++v) {
    if (task == TaskMode::multiclass) {
      const std::size_t lab[] = {static_cast<std::size_t>(rng.next_below(l))};
      m.set_row(v, lab);
    } else {
      std::vector<std::size_t> ls;
      for (std::size_t j = 0; j < l; ++j)
        if (rng.next_double() < 0.4) ls.push_back(j);
      if (ls.empty()) ls.push_back(static_cast<std::size_t>(rng.next_below(l)));
      m.set_row(v, ls);
    }
  }
  return m;
}

inline bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

inline bool bits_equal(const DenseMatrix& a, const DenseMatrix& b) {
  return a.rows == b.rows && a.cols == b.cols && bits_equal(a.data, b.data);
}

/// Brute-force confusion-matrix F1 oracle. Counts each cell of the 2x2
/// table per (node, label) pair independently; the final ratio is formed
/// from the same integer counts as the implementation must produce.
struct Confusion {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double f1() const {
    const std::uint64_t denom = 2 * tp + fp + fn;
    if (denom == 0) return 0.0;  // no positives predicted or present
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
};

inline double oracle_micro_f1(const LabelMatrix& pred, const LabelMatrix& truth,
                              const std::vector<NodeId>& eval_set) {
  Confusion c;
  for (NodeId v : eval_set)
    for (std::size_t j = 0; j < truth.num_labels; ++j) {
      const bool p = pred.at(v, j), t = truth.at(v, j);
      if (p && t) ++c.tp;
      else if (p && !t) ++c.fp;
      else if (!p && t) ++c.fn;
      else ++c.tn;
    }
  return c.f1();
}

inline double oracle_macro_f1(const LabelMatrix& pred, const LabelMatrix& truth,
                              const std::vector<NodeId>& eval_set) {
  if (truth.num_labels == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < truth.num_labels; ++j) {
    Confusion c;
    for (NodeId v : eval_set) {
      const bool p = pred.at(v, j), t = truth.at(v, j);
      if (p && t) ++c.tp;
      else if (p && !t) ++c.fp;
      else if (!p && t) ++c.fn;
      else ++c.tn;
    }
    sum += c.f1();
  }
  return sum / static_cast<double>(truth.num_labels);
}

/// Central finite-difference check of one parameter array against its
/// analytic gradient. loss() must re-evaluate with the current parameter
/// values. Returns the worst guarded relative error.
inline double gradient_check(std::vector<double>& params,
                             const std::vector<double>& analytic,
                             const std::function<double()>& loss, double step = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = loss();
    params[i] = saved - step;
    const double down = loss();
    params[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-3});
    worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
  }
  return worst;
}

/// Training configuration used by the synthetic motif experiments: the
/// feature scale there shrinks with alpha, so the net needs larger Adam
/// steps and no dropout noise to fit the small device classes.
inline TrainConfig figure1_train_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.dropout_keep_prob = 1.0;
  cfg.max_epochs = 2000;
  cfg.early_stop_patience = 2000;
  cfg.rng_seed = seed;
  return cfg;
}

}  // namespace test_support
