#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ldgraph/errors.hpp"

namespace ldgraph {

/// Row-major dense matrix of doubles. Small and value-semantic; the widths
/// in this library are tiny (label count, hidden width 16).
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }

  bool operator==(const DenseMatrix& o) const = default;
};

/// Compressed sparse row matrix; column indices sorted within each row.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets;     // rows + 1
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return col_idx.size(); }

  bool operator==(const CsrMatrix& o) const = default;
};

/// a * b, fixed accumulation order.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw InputError("matmul: inner dimensions differ");
  DenseMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* orow = out.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

/// a * b with a sparse.
inline DenseMatrix matmul(const CsrMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw InputError("matmul: inner dimensions differ");
  DenseMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* orow = out.row(i);
    for (std::size_t e = a.offsets[i]; e < a.offsets[i + 1]; ++e) {
      const double av = a.values[e];
      const double* brow = b.row(a.col_idx[e]);
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

}  // namespace ldgraph
