#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldgraph/errors.hpp"
#include "ldgraph/matrix.hpp"

namespace ldgraph {

using NodeId = std::uint32_t;

/// Immutable undirected graph in CSR form. Every edge is stored in both
/// directions, column indices are strictly increasing within a row, and
/// self-links are never present. Safe to share read-only across threads.
class Graph {
 public:
  Graph() = default;

  /// Builds the canonical CSR from an arbitrary edge list: endpoints are
  /// validated against n, self-links dropped, duplicates collapsed, and the
  /// edge set symmetrized.
  static Graph from_edges(std::span<const std::pair<NodeId, NodeId>> edges, NodeId n) {
    for (const auto& [a, b] : edges) {
      if (a >= n || b >= n)
        throw InputError("edge endpoint out of range: (" + std::to_string(a) + "," +
                         std::to_string(b) + ") with n=" + std::to_string(n));
    }
    std::vector<std::pair<NodeId, NodeId>> dir;
    dir.reserve(edges.size() * 2);
    for (const auto& [a, b] : edges) {
      if (a == b) continue;
      dir.emplace_back(a, b);
      dir.emplace_back(b, a);
    }
    std::sort(dir.begin(), dir.end());
    dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

    Graph g;
    g.n_ = n;
    g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const auto& [a, b] : dir) ++g.offsets_[a + 1];
    for (std::size_t i = 1; i < g.offsets_.size(); ++i) g.offsets_[i] += g.offsets_[i - 1];
    g.targets_.reserve(dir.size());
    for (const auto& [a, b] : dir) g.targets_.push_back(b);
    return g;
  }

  NodeId num_nodes() const { return n_; }
  std::size_t num_undirected_edges() const { return targets_.size() / 2; }

  NodeId degree(NodeId u) const { return static_cast<NodeId>(offsets_[u + 1] - offsets_[u]); }

  std::span<const NodeId> neighbors(NodeId u) const {
    return {targets_.data() + offsets_[u], targets_.data() + offsets_[u + 1]};
  }

  /// Undirected edge list in canonical (i < j) order.
  std::vector<std::pair<NodeId, NodeId>> edge_list() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(num_undirected_edges());
    for (NodeId u = 0; u < n_; ++u)
      for (NodeId v : neighbors(u))
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  /// D~^{-1/2} (A + S) D~^{-1/2} where S = I when add_self_loops, else 0,
  /// and D~ is the degree matrix of A + S. Rows whose D~ entry is zero
  /// (isolated nodes without self-loops) are left all-zero.
  CsrMatrix sym_normalized_adjacency(bool add_self_loops) const {
    std::vector<double> inv_sqrt(n_, 0.0);
    for (NodeId u = 0; u < n_; ++u) {
      const double d = static_cast<double>(degree(u)) + (add_self_loops ? 1.0 : 0.0);
      if (d > 0.0) inv_sqrt[u] = 1.0 / std::sqrt(d);
    }
    CsrMatrix m;
    m.rows = m.cols = n_;
    m.offsets.assign(static_cast<std::size_t>(n_) + 1, 0);
    m.col_idx.reserve(targets_.size() + (add_self_loops ? n_ : 0));
    m.values.reserve(m.col_idx.capacity());
    for (NodeId u = 0; u < n_; ++u) {
      auto nbrs = neighbors(u);
      std::size_t k = 0;
      auto emit = [&](NodeId v) {
        m.col_idx.push_back(v);
        m.values.push_back(inv_sqrt[u] * inv_sqrt[v]);
      };
      if (add_self_loops) {
        while (k < nbrs.size() && nbrs[k] < u) emit(nbrs[k++]);
        emit(u);
      }
      while (k < nbrs.size()) emit(nbrs[k++]);
      m.offsets[u + 1] = m.col_idx.size();
    }
    return m;
  }

  bool operator==(const Graph& o) const = default;

 private:
  NodeId n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> targets_;
};

}  // namespace ldgraph
