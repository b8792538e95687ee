#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ldgraph/appr.hpp"
#include "ldgraph/errors.hpp"
#include "ldgraph/graph.hpp"
#include "ldgraph/matrix.hpp"

namespace ldgraph {

enum class TaskMode { multiclass, multilabel };

/// Binary n x l label matrix with a per-node labeled flag. Rows of unlabeled
/// nodes are all-zero; multiclass rows are one-hot, multilabel rows have at
/// least one set bit.
struct LabelMatrix {
  std::size_t num_nodes = 0;
  std::size_t num_labels = 0;
  std::vector<std::uint8_t> y;        // row-major n x l
  std::vector<std::uint8_t> labeled;  // n

  static LabelMatrix zeros(std::size_t n, std::size_t l) {
    LabelMatrix m;
    m.num_nodes = n;
    m.num_labels = l;
    m.y.assign(n * l, 0);
    m.labeled.assign(n, 0);
    return m;
  }

  std::uint8_t& at(std::size_t node, std::size_t label) { return y[node * num_labels + label]; }
  std::uint8_t at(std::size_t node, std::size_t label) const { return y[node * num_labels + label]; }

  void set_row(std::size_t node, std::span<const std::size_t> labels) {
    for (std::size_t j = 0; j < num_labels; ++j) y[node * num_labels + j] = 0;
    for (std::size_t j : labels) y[node * num_labels + j] = 1;
    labeled[node] = 1;
  }

  std::size_t row_sum(std::size_t node) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < num_labels; ++j) s += at(node, j);
    return s;
  }

  /// Y_train: keep only the rows listed in `nodes`; everything else becomes
  /// an unlabeled zero row.
  LabelMatrix restricted_to(std::span<const NodeId> nodes) const {
    LabelMatrix out = zeros(num_nodes, num_labels);
    for (NodeId v : nodes) {
      if (v >= num_nodes) throw InputError("restricted_to: node out of range");
      if (!labeled[v]) continue;
      for (std::size_t j = 0; j < num_labels; ++j) out.at(v, j) = at(v, j);
      out.labeled[v] = 1;
    }
    return out;
  }

  void validate(TaskMode task) const {
    if (y.size() != num_nodes * num_labels || labeled.size() != num_nodes)
      throw InputError("label matrix: inconsistent storage sizes");
    for (std::size_t v = 0; v < num_nodes; ++v) {
      const std::size_t s = row_sum(v);
      if (!labeled[v] && s != 0)
        throw InputError("label matrix: unlabeled node " + std::to_string(v) +
                         " has a nonzero row");
      if (labeled[v]) {
        if (task == TaskMode::multiclass && s != 1)
          throw InputError("label matrix: multiclass node " + std::to_string(v) +
                           " has " + std::to_string(s) + " labels");
        if (task == TaskMode::multilabel && s == 0)
          throw InputError("label matrix: labeled multilabel node " + std::to_string(v) +
                           " has no labels");
      }
    }
  }

  bool operator==(const LabelMatrix& o) const = default;
};

/// Dense n x l feature matrix; entry (v, j) is probability mass, so values
/// lie in [0, 1].
using FeatureMatrix = DenseMatrix;

/// Local label distribution X = Z * Y where Z is the APPR matrix with its
/// diagonal removed. Entry (v, j) is the probability that a walk from v
/// stops at a training-labeled node of label j; a node's own label never
/// contributes to its own row. Rows are not renormalized after the diagonal
/// is dropped, so they sum to < 1.
inline FeatureMatrix build_label_distribution(const ApprMatrix& appr,
                                              const LabelMatrix& labels) {
  if (appr.n != labels.num_nodes)
    throw InputError("build_label_distribution: appr has " + std::to_string(appr.n) +
                     " rows, labels have " + std::to_string(labels.num_nodes));
  FeatureMatrix x(labels.num_nodes, labels.num_labels);
  for (std::size_t v = 0; v < appr.rows.size(); ++v) {
    const ApprRow& row = appr.rows[v];
    double* out = x.row(v);
    for (std::size_t e = 0; e < row.ids.size(); ++e) {
      const NodeId u = row.ids[e];
      if (u == v || !labels.labeled[u]) continue;
      const double mass = row.values[e];
      for (std::size_t j = 0; j < labels.num_labels; ++j)
        if (labels.at(u, j)) out[j] += mass;
    }
  }
  return x;
}

/// Adj baseline: row v is the binary adjacency row of v (self entry zero).
inline CsrMatrix adjacency_features(const Graph& g) {
  CsrMatrix m;
  m.rows = m.cols = g.num_nodes();
  m.offsets.assign(static_cast<std::size_t>(g.num_nodes()) + 1, 0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      m.col_idx.push_back(v);
      m.values.push_back(1.0);
    }
    m.offsets[u + 1] = m.col_idx.size();
  }
  return m;
}

/// One-hop label convolution: X = A^ * Y_train with A^ the symmetrically
/// normalized adjacency without self-loops. The missing diagonal keeps a
/// node's own label out of its own row.
inline FeatureMatrix label_conv_features(const Graph& g, const LabelMatrix& labels) {
  if (g.num_nodes() != labels.num_nodes)
    throw InputError("label_conv_features: graph and labels disagree on n");
  const CsrMatrix a_hat = g.sym_normalized_adjacency(false);
  FeatureMatrix x(labels.num_nodes, labels.num_labels);
  for (std::size_t v = 0; v < a_hat.rows; ++v) {
    double* out = x.row(v);
    for (std::size_t e = a_hat.offsets[v]; e < a_hat.offsets[v + 1]; ++e) {
      const NodeId u = a_hat.col_idx[e];
      if (!labels.labeled[u]) continue;
      const double w = a_hat.values[e];
      for (std::size_t j = 0; j < labels.num_labels; ++j)
        if (labels.at(u, j)) out[j] += w;
    }
  }
  return x;
}

/// Text dump: first line "rows cols", then one space-separated row per
/// line, 17 significant digits (round-trips doubles exactly).
inline void dump_features(const FeatureMatrix& x, std::ostream& os) {
  os << x.rows << ' ' << x.cols << '\n';
  char buf[64];
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", x.at(i, j));
      os << (j ? " " : "") << buf;
    }
    os << '\n';
  }
}

inline void dump_features(const FeatureMatrix& x, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  dump_features(x, os);
  if (!os) throw InputError("write failed: " + path.string());
}

inline FeatureMatrix load_features(std::istream& is) {
  std::size_t rows, cols;
  if (!(is >> rows >> cols)) throw InputError("feature dump: bad header");
  FeatureMatrix x(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i)
    if (!(is >> x.data[i])) throw InputError("feature dump: truncated data");
  return x;
}

inline FeatureMatrix load_features(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open: " + path.string());
  return load_features(is);
}

/// Sparse text dump used for the n x n Adj features: header
/// "rows cols nnz", then one "row col value" triple per line.
inline void dump_sparse_features(const CsrMatrix& m, std::ostream& os) {
  os << m.rows << ' ' << m.cols << ' ' << m.nnz() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t e = m.offsets[i]; e < m.offsets[i + 1]; ++e) {
      std::snprintf(buf, sizeof buf, "%.17g", m.values[e]);
      os << i << ' ' << m.col_idx[e] << ' ' << buf << '\n';
    }
}

inline void dump_sparse_features(const CsrMatrix& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  dump_sparse_features(m, os);
  if (!os) throw InputError("write failed: " + path.string());
}

inline CsrMatrix load_sparse_features(std::istream& is) {
  std::size_t rows, cols, nnz;
  if (!(is >> rows >> cols >> nnz)) throw InputError("sparse dump: bad header");
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.offsets.assign(rows + 1, 0);
  std::vector<std::size_t> ri(nnz);
  std::vector<std::uint32_t> ci(nnz);
  std::vector<double> vals(nnz);
  std::size_t prev_row = 0;
  for (std::size_t k = 0; k < nnz; ++k) {
    if (!(is >> ri[k] >> ci[k] >> vals[k])) throw InputError("sparse dump: truncated data");
    if (ri[k] >= rows || ci[k] >= cols) throw InputError("sparse dump: index out of range");
    if (ri[k] < prev_row) throw InputError("sparse dump: rows out of order");
    prev_row = ri[k];
  }
  for (std::size_t k = 0; k < nnz; ++k) ++m.offsets[ri[k] + 1];
  for (std::size_t i = 1; i <= rows; ++i) m.offsets[i] += m.offsets[i - 1];
  m.col_idx.assign(ci.begin(), ci.end());
  m.values.assign(vals.begin(), vals.end());
  return m;
}

inline CsrMatrix load_sparse_features(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open: " + path.string());
  return load_sparse_features(is);
}

}  // namespace ldgraph
