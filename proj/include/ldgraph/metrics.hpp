#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ldgraph/errors.hpp"
#include "ldgraph/graph.hpp"
#include "ldgraph/labelfeat.hpp"

namespace ldgraph {

namespace detail {

inline void check_metric_shapes(const LabelMatrix& pred, const LabelMatrix& truth) {
  if (pred.num_nodes != truth.num_nodes || pred.num_labels != truth.num_labels)
    throw InputError("metrics: prediction and truth shapes differ");
}

inline double f1_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  // No positives predicted and none present: defined as 0.
  const std::uint64_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace detail

/// F1 over globally pooled (node, label) decisions on the evaluation set.
inline double micro_f1(const LabelMatrix& pred, const LabelMatrix& truth,
                       std::span<const NodeId> eval_set) {
  detail::check_metric_shapes(pred, truth);
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (NodeId v : eval_set)
    for (std::size_t j = 0; j < truth.num_labels; ++j) {
      const bool p = pred.at(v, j) != 0;
      const bool t = truth.at(v, j) != 0;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
  return detail::f1_from_counts(tp, fp, fn);
}

/// Unweighted mean of per-label F1 on the evaluation set. A label with no
/// positives in the truth and none predicted contributes 0.
inline double macro_f1(const LabelMatrix& pred, const LabelMatrix& truth,
                       std::span<const NodeId> eval_set) {
  detail::check_metric_shapes(pred, truth);
  if (truth.num_labels == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < truth.num_labels; ++j) {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (NodeId v : eval_set) {
      const bool p = pred.at(v, j) != 0;
      const bool t = truth.at(v, j) != 0;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    sum += detail::f1_from_counts(tp, fp, fn);
  }
  return sum / static_cast<double>(truth.num_labels);
}

/// Exact-row-match accuracy. For one-hot rows this is standard multiclass
/// accuracy; for multilabel it is subset accuracy.
inline double accuracy(const LabelMatrix& pred, const LabelMatrix& truth,
                       std::span<const NodeId> eval_set) {
  detail::check_metric_shapes(pred, truth);
  if (eval_set.empty()) return 0.0;
  std::size_t hit = 0;
  for (NodeId v : eval_set) {
    bool same = true;
    for (std::size_t j = 0; j < truth.num_labels && same; ++j)
      same = (pred.at(v, j) != 0) == (truth.at(v, j) != 0);
    hit += same;
  }
  return static_cast<double>(hit) / static_cast<double>(eval_set.size());
}

}  // namespace ldgraph
