#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ldgraph/errors.hpp"
#include "ldgraph/graph.hpp"
#include "ldgraph/labelfeat.hpp"
#include "ldgraph/matrix.hpp"
#include "ldgraph/metrics.hpp"
#include "ldgraph/rng.hpp"

namespace ldgraph {

enum class Head { softmax, sigmoid };

/// Two-layer feed-forward classifier. w2 has hidden (+ embedding width for
/// the augmented variant) rows.
struct MlpModel {
  DenseMatrix w1;
  std::vector<double> b1;
  DenseMatrix w2;
  std::vector<double> b2;
  Head head = Head::softmax;

  std::size_t input_dim() const { return w1.rows; }
  std::size_t hidden_dim() const { return w1.cols; }
  std::size_t output_dim() const { return w2.cols; }

  bool operator==(const MlpModel& o) const = default;
};

/// LD+EMB: per-node structural vectors, rows of a_hat * emb, are
/// concatenated with the hidden activation before the output layer. The
/// embedding is trained jointly with the rest of the model.
struct EmbAugmentedModel {
  MlpModel base;
  DenseMatrix emb;   // n x k
  CsrMatrix a_hat;   // sym-normalized adjacency with self-loops
};

struct TrainConfig {
  double learning_rate = 0.01;
  double l2_weight = 5e-4;        // on first-layer weights only
  double dropout_keep_prob = 0.5;
  std::size_t max_epochs = 200;
  std::size_t early_stop_patience = 10;
  double pos_weight = 1.0;        // sigmoid head; 10 in the multilabel experiments
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw InputError("learning_rate must be > 0");
    if (!(pos_weight >= 1.0)) throw InputError("pos_weight must be >= 1");
    if (early_stop_patience < 1) throw InputError("early_stop_patience must be >= 1");
    if (!(dropout_keep_prob > 0.0) || dropout_keep_prob > 1.0)
      throw InputError("dropout_keep_prob must be in (0,1]");
    if (max_epochs < 1) throw InputError("max_epochs must be >= 1");
  }
};

// Adam moment constants, fixed across the project.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

inline constexpr std::size_t kDefaultHidden = 16;
inline constexpr double kProbClampLo = 1e-12;
inline constexpr double kProbClampHi = 1.0 - 1e-12;

/// Read-only view over either a dense or a CSR feature matrix, so the Adj
/// baseline's n x n rows stay sparse end to end.
class FeatureView {
 public:
  explicit FeatureView(const DenseMatrix& d) : dense_(&d) {}
  explicit FeatureView(const CsrMatrix& s) : sparse_(&s) {}

  std::size_t rows() const { return dense_ ? dense_->rows : sparse_->rows; }
  std::size_t cols() const { return dense_ ? dense_->cols : sparse_->cols; }

  /// out = X[batch] * w, out sized (batch.size() x w.cols).
  void product_rows(std::span<const NodeId> batch, const DenseMatrix& w,
                    DenseMatrix& out) const {
    out = DenseMatrix(batch.size(), w.cols);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const std::size_t v = batch[b];
      double* orow = out.row(b);
      if (dense_) {
        const double* x = dense_->row(v);
        for (std::size_t k = 0; k < dense_->cols; ++k) {
          const double xv = x[k];
          if (xv == 0.0) continue;
          const double* wrow = w.row(k);
          for (std::size_t j = 0; j < w.cols; ++j) orow[j] += xv * wrow[j];
        }
      } else {
        for (std::size_t e = sparse_->offsets[v]; e < sparse_->offsets[v + 1]; ++e) {
          const double xv = sparse_->values[e];
          const double* wrow = w.row(sparse_->col_idx[e]);
          for (std::size_t j = 0; j < w.cols; ++j) orow[j] += xv * wrow[j];
        }
      }
    }
  }

  /// dw += X[batch]^T * g with g sized (batch.size() x dw.cols).
  void add_transpose_product(std::span<const NodeId> batch, const DenseMatrix& g,
                             DenseMatrix& dw) const {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const std::size_t v = batch[b];
      const double* grow = g.row(b);
      if (dense_) {
        const double* x = dense_->row(v);
        for (std::size_t k = 0; k < dense_->cols; ++k) {
          const double xv = x[k];
          if (xv == 0.0) continue;
          double* wrow = dw.row(k);
          for (std::size_t j = 0; j < g.cols; ++j) wrow[j] += xv * grow[j];
        }
      } else {
        for (std::size_t e = sparse_->offsets[v]; e < sparse_->offsets[v + 1]; ++e) {
          const double xv = sparse_->values[e];
          double* wrow = dw.row(sparse_->col_idx[e]);
          for (std::size_t j = 0; j < g.cols; ++j) wrow[j] += xv * grow[j];
        }
      }
    }
  }

 private:
  const DenseMatrix* dense_ = nullptr;
  const CsrMatrix* sparse_ = nullptr;
};

/// Glorot-uniform init from the seeded generator; biases start at zero.
/// Draw order is w1 row-major, then w2 row-major, then the embedding, so a
/// zero-width embedding consumes exactly the same random stream as the
/// plain model.
inline MlpModel init_mlp(std::size_t input, std::size_t hidden, std::size_t output,
                         Head head, SplitMix64& rng, std::size_t emb_dim = 0) {
  auto glorot = [&rng](DenseMatrix& w, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : w.data) x = rng.next_in(-limit, limit);
  };
  MlpModel m;
  m.head = head;
  m.w1 = DenseMatrix(input, hidden);
  m.b1.assign(hidden, 0.0);
  m.w2 = DenseMatrix(hidden + emb_dim, output);
  m.b2.assign(output, 0.0);
  glorot(m.w1, input, hidden);
  glorot(m.w2, hidden + emb_dim, output);
  return m;
}

namespace detail {

struct ForwardCtx {
  DenseMatrix pre1;      // batch x hidden, pre-activation
  DenseMatrix mask;      // dropout scale per hidden unit (1/keep or 0); empty if unused
  DenseMatrix combined;  // batch x (hidden + k): post relu/dropout hidden, then structural
  DenseMatrix probs;     // batch x labels
};

inline void apply_head(Head head, const DenseMatrix& z, DenseMatrix& probs) {
  probs = DenseMatrix(z.rows, z.cols);
  if (head == Head::softmax) {
    for (std::size_t i = 0; i < z.rows; ++i) {
      const double* zr = z.row(i);
      double* pr = probs.row(i);
      double mx = zr[0];
      for (std::size_t j = 1; j < z.cols; ++j) mx = std::max(mx, zr[j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < z.cols; ++j) {
        pr[j] = std::exp(zr[j] - mx);
        sum += pr[j];
      }
      for (std::size_t j = 0; j < z.cols; ++j) pr[j] /= sum;
    }
  } else {
    for (std::size_t i = 0; i < z.data.size(); ++i)
      probs.data[i] = 1.0 / (1.0 + std::exp(-z.data[i]));
  }
}

/// Forward pass shared by the plain and embedding-augmented models.
/// structural, when non-null, holds rows of a_hat*emb for the whole graph.
inline void forward_ctx(const MlpModel& m, const FeatureView& x,
                        std::span<const NodeId> batch, const DenseMatrix* structural,
                        bool train_mode, double keep_prob, SplitMix64* rng,
                        ForwardCtx& ctx) {
  if (x.cols() != m.input_dim()) throw InputError("forward: feature width != input dim");
  const std::size_t hidden = m.hidden_dim();
  const std::size_t k = m.w2.rows - hidden;
  if (k > 0 && structural == nullptr)
    throw InputError("forward: model expects a structural input of width " +
                     std::to_string(k));

  x.product_rows(batch, m.w1, ctx.pre1);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    double* row = ctx.pre1.row(b);
    for (std::size_t j = 0; j < hidden; ++j) row[j] += m.b1[j];
  }

  const bool use_dropout = train_mode && keep_prob < 1.0;
  if (use_dropout) {
    if (rng == nullptr) throw InputError("forward: dropout requires an rng");
    ctx.mask = DenseMatrix(batch.size(), hidden);
    for (double& v : ctx.mask.data)
      v = rng->next_double() < keep_prob ? 1.0 / keep_prob : 0.0;
  } else {
    ctx.mask = DenseMatrix();
  }

  ctx.combined = DenseMatrix(batch.size(), hidden + k);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double* pre = ctx.pre1.row(b);
    double* out = ctx.combined.row(b);
    for (std::size_t j = 0; j < hidden; ++j) {
      double h = pre[j] > 0.0 ? pre[j] : 0.0;
      if (use_dropout) h *= ctx.mask.at(b, j);
      out[j] = h;
    }
    if (k > 0) {
      const double* s = structural->row(batch[b]);
      for (std::size_t j = 0; j < k; ++j) out[hidden + j] = s[j];
    }
  }

  DenseMatrix z = matmul(ctx.combined, m.w2);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    double* row = z.row(b);
    for (std::size_t j = 0; j < m.output_dim(); ++j) row[j] += m.b2[j];
  }
  apply_head(m.head, z, ctx.probs);
}

inline double clamp_prob(double p) { return std::min(std::max(p, kProbClampLo), kProbClampHi); }

}  // namespace detail

/// Probabilities for a batch of rows. Softmax rows sum to one; sigmoid
/// entries lie in (0,1). Dropout fires only in train mode.
inline DenseMatrix forward(const MlpModel& m, const FeatureView& x,
                           std::span<const NodeId> batch, bool train_mode = false,
                           double dropout_keep_prob = 1.0, SplitMix64* rng = nullptr,
                           const DenseMatrix* structural = nullptr) {
  detail::ForwardCtx ctx;
  detail::forward_ctx(m, x, batch, structural, train_mode, dropout_keep_prob, rng, ctx);
  return ctx.probs;
}

struct MlpGrads {
  DenseMatrix w1;
  std::vector<double> b1;
  DenseMatrix w2;
  std::vector<double> b2;
  DenseMatrix emb;  // empty unless the structural input was used
};

struct LossGrads {
  double loss = 0.0;
  MlpGrads grads;
};

namespace detail {

/// Loss of the already-computed probabilities plus the gradient at the
/// head's input. Softmax: mean cross-entropy over the batch. Sigmoid: mean
/// over batch x labels of weighted binary cross-entropy. Probabilities are
/// clamped to [1e-12, 1-1e-12] before the log, and the clamp's zero
/// derivative is respected so gradients match the computed loss exactly.
inline double head_loss_and_dz(const DenseMatrix& probs, const LabelMatrix& labels,
                               std::span<const NodeId> batch, Head head,
                               double pos_weight, DenseMatrix& dz) {
  const std::size_t l = labels.num_labels;
  dz = DenseMatrix(batch.size(), l);
  double loss = 0.0;
  if (head == Head::softmax) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    std::vector<double> dlp(l);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const double* p = probs.row(b);
      double dot = 0.0;
      for (std::size_t j = 0; j < l; ++j) {
        const double c = clamp_prob(p[j]);
        const bool active = p[j] > kProbClampLo && p[j] < kProbClampHi;
        dlp[j] = 0.0;
        if (labels.at(batch[b], j)) {
          loss -= inv_b * std::log(c);
          if (active) dlp[j] = -inv_b / c;
        }
        dot += dlp[j] * p[j];
      }
      double* dzr = dz.row(b);
      for (std::size_t j = 0; j < l; ++j) dzr[j] = p[j] * (dlp[j] - dot);
    }
  } else {
    const double inv = 1.0 / static_cast<double>(batch.size() * l);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const double* p = probs.row(b);
      double* dzr = dz.row(b);
      for (std::size_t j = 0; j < l; ++j) {
        const double y = labels.at(batch[b], j) ? 1.0 : 0.0;
        const double c1 = clamp_prob(p[j]);
        const double c2 = clamp_prob(1.0 - p[j]);
        loss -= inv * (pos_weight * y * std::log(c1) + (1.0 - y) * std::log(c2));
        double dldp = 0.0;
        if (p[j] > kProbClampLo && p[j] < kProbClampHi)
          dldp -= inv * pos_weight * y / c1;
        if (1.0 - p[j] > kProbClampLo && 1.0 - p[j] < kProbClampHi)
          dldp += inv * (1.0 - y) / c2;
        dzr[j] = dldp * p[j] * (1.0 - p[j]);
      }
    }
  }
  return loss;
}

}  // namespace detail

/// Full-batch loss and gradients by backpropagation. The L2 term
/// l2_weight * ||w1||^2 regularizes the first layer only. structural /
/// a_hat / emb wire in the LD+EMB variant; leave them null for the plain
/// model.
inline LossGrads loss_and_grads(const MlpModel& m, const FeatureView& x,
                                std::span<const NodeId> batch, const LabelMatrix& labels,
                                const TrainConfig& cfg, SplitMix64* rng = nullptr,
                                bool train_mode = false,
                                const DenseMatrix* structural = nullptr,
                                const CsrMatrix* a_hat = nullptr,
                                const DenseMatrix* emb = nullptr) {
  if (batch.empty()) throw InputError("loss_and_grads: empty batch");
  if (labels.num_labels != m.output_dim())
    throw InputError("loss_and_grads: label width != output dim");

  detail::ForwardCtx ctx;
  detail::forward_ctx(m, x, batch, structural, train_mode, cfg.dropout_keep_prob, rng, ctx);

  LossGrads res;
  DenseMatrix dz;
  res.loss = detail::head_loss_and_dz(ctx.probs, labels, batch, m.head, cfg.pos_weight, dz);

  for (double w : m.w1.data) res.loss += cfg.l2_weight * w * w;

  const std::size_t hidden = m.hidden_dim();
  const std::size_t k = m.w2.rows - hidden;

  res.grads.w2 = DenseMatrix(m.w2.rows, m.w2.cols);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double* comb = ctx.combined.row(b);
    const double* dzr = dz.row(b);
    for (std::size_t i = 0; i < m.w2.rows; ++i) {
      const double cv = comb[i];
      if (cv == 0.0) continue;
      double* grow = res.grads.w2.row(i);
      for (std::size_t j = 0; j < m.w2.cols; ++j) grow[j] += cv * dzr[j];
    }
  }
  res.grads.b2.assign(m.output_dim(), 0.0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double* dzr = dz.row(b);
    for (std::size_t j = 0; j < m.output_dim(); ++j) res.grads.b2[j] += dzr[j];
  }

  // dz * w2^T, split into the hidden part and the structural part.
  DenseMatrix dhidden(batch.size(), hidden);
  DenseMatrix dstruct = k > 0 ? DenseMatrix(batch.size(), k) : DenseMatrix();
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double* dzr = dz.row(b);
    double* dh = dhidden.row(b);
    for (std::size_t i = 0; i < hidden; ++i) {
      const double* wrow = m.w2.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < m.output_dim(); ++j) s += wrow[j] * dzr[j];
      dh[i] = s;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const double* wrow = m.w2.row(hidden + i);
      double s = 0.0;
      for (std::size_t j = 0; j < m.output_dim(); ++j) s += wrow[j] * dzr[j];
      dstruct.at(b, i) = s;
    }
  }

  // Through dropout and relu.
  const bool used_dropout = ctx.mask.rows > 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    double* dh = dhidden.row(b);
    const double* pre = ctx.pre1.row(b);
    for (std::size_t j = 0; j < hidden; ++j) {
      if (used_dropout) dh[j] *= ctx.mask.at(b, j);
      if (pre[j] <= 0.0) dh[j] = 0.0;
    }
  }

  res.grads.w1 = DenseMatrix(m.w1.rows, m.w1.cols);
  x.add_transpose_product(batch, dhidden, res.grads.w1);
  for (std::size_t i = 0; i < m.w1.data.size(); ++i)
    res.grads.w1.data[i] += 2.0 * cfg.l2_weight * m.w1.data[i];
  res.grads.b1.assign(hidden, 0.0);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double* dh = dhidden.row(b);
    for (std::size_t j = 0; j < hidden; ++j) res.grads.b1[j] += dh[j];
  }

  if (k > 0) {
    // demb = a_hat^T * scatter(dstruct); a_hat is symmetric here.
    DenseMatrix scattered(emb->rows, k);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      double* row = scattered.row(batch[b]);
      const double* src = dstruct.row(b);
      for (std::size_t j = 0; j < k; ++j) row[j] += src[j];
    }
    res.grads.emb = matmul(*a_hat, scattered);
  }
  return res;
}

/// Hard decisions: argmax one-hot for the softmax head (ties go to the
/// lowest class index), probability >= threshold for the sigmoid head.
inline LabelMatrix predictions_from_probs(const DenseMatrix& probs, Head head,
                                          double threshold = 0.5) {
  LabelMatrix out = LabelMatrix::zeros(probs.rows, probs.cols);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    const double* p = probs.row(i);
    if (head == Head::softmax) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < probs.cols; ++j)
        if (p[j] > p[best]) best = j;
      out.at(i, best) = 1;
    } else {
      for (std::size_t j = 0; j < probs.cols; ++j)
        if (p[j] >= threshold) out.at(i, j) = 1;
    }
    out.labeled[i] = 1;
  }
  return out;
}

inline LabelMatrix predict(const MlpModel& m, const FeatureView& x, double threshold = 0.5) {
  std::vector<NodeId> all(x.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
  return predictions_from_probs(forward(m, x, all), m.head, threshold);
}

inline LabelMatrix predict(const EmbAugmentedModel& m, const FeatureView& x,
                           double threshold = 0.5) {
  if (m.emb.cols == 0) return predict(m.base, x, threshold);
  std::vector<NodeId> all(x.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
  const DenseMatrix structural = matmul(m.a_hat, m.emb);
  return predictions_from_probs(
      forward(m.base, x, all, false, 1.0, nullptr, &structural), m.base.head, threshold);
}

struct TrainLogRow {
  std::size_t epoch;
  double train_loss;
  double val_loss;
  double val_metric;
};

struct TrainResult {
  MlpModel model;
  DenseMatrix emb;  // empty for the plain model
  std::vector<TrainLogRow> log;
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

inline void write_train_log(const std::vector<TrainLogRow>& log,
                            const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  os << "epoch,train_loss,val_loss,val_metric\n";
  char buf[128];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", row.epoch, row.train_loss,
                  row.val_loss, row.val_metric);
    os << buf;
  }
}

namespace detail {

struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

inline void adam_step(std::span<double> param, std::span<const double> grad,
                      AdamState& st, double lr, std::size_t t) {
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    st.m[i] = kAdamBeta1 * st.m[i] + (1.0 - kAdamBeta1) * grad[i];
    st.v[i] = kAdamBeta2 * st.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
  }
}

inline double validation_metric(const DenseMatrix& probs, Head head,
                                const LabelMatrix& labels,
                                std::span<const NodeId> val_nodes) {
  // Accuracy for the softmax head, micro F1 at 0.5 for the sigmoid head.
  LabelMatrix pred = predictions_from_probs(probs, head);
  std::vector<NodeId> local(val_nodes.size());
  for (std::size_t i = 0; i < local.size(); ++i) local[i] = static_cast<NodeId>(i);
  // probs rows are in val order; realign truth rows to match.
  LabelMatrix truth_rows = LabelMatrix::zeros(val_nodes.size(), labels.num_labels);
  for (std::size_t i = 0; i < val_nodes.size(); ++i) {
    for (std::size_t j = 0; j < labels.num_labels; ++j)
      truth_rows.at(i, j) = labels.at(val_nodes[i], j);
    truth_rows.labeled[i] = 1;
  }
  if (head == Head::softmax) return accuracy(pred, truth_rows, local);
  return micro_f1(pred, truth_rows, local);
}

/// Shared full-batch training loop. emb_dim > 0 requires a graph for the
/// self-loop-normalized adjacency. Deterministic given cfg.rng_seed: all
/// randomness (init, dropout) flows from one SplitMix64 stream.
inline TrainResult train_impl(const FeatureView& x, const LabelMatrix& labels,
                              std::span<const NodeId> train_nodes,
                              std::span<const NodeId> val_nodes, const TrainConfig& cfg,
                              Head head, std::size_t hidden, std::size_t emb_dim,
                              const Graph* graph) {
  cfg.validate();
  if (train_nodes.empty()) throw InputError("train: empty training set");
  for (NodeId v : train_nodes) {
    if (v >= labels.num_nodes) throw InputError("train: node out of range");
    if (!labels.labeled[v])
      throw InputError("train: training node " + std::to_string(v) + " is unlabeled");
  }
  if (labels.num_labels == 0) throw InputError("train: no labels");

  SplitMix64 rng(cfg.rng_seed);
  MlpModel model = init_mlp(x.cols(), hidden, labels.num_labels, head, rng, emb_dim);

  DenseMatrix emb;
  CsrMatrix a_hat;
  if (emb_dim > 0) {
    if (graph == nullptr) throw InputError("train: embedding variant needs the graph");
    a_hat = graph->sym_normalized_adjacency(true);
    emb = DenseMatrix(graph->num_nodes(), emb_dim);
    const double limit = std::sqrt(6.0 / static_cast<double>(graph->num_nodes() + emb_dim));
    for (double& v : emb.data) v = rng.next_in(-limit, limit);
  }

  detail::AdamState st_w1(model.w1.data.size()), st_b1(model.b1.size());
  detail::AdamState st_w2(model.w2.data.size()), st_b2(model.b2.size());
  detail::AdamState st_emb(emb.data.size());

  TrainResult result;
  MlpModel best_model = model;
  DenseMatrix best_emb = emb;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    DenseMatrix structural;
    if (emb_dim > 0) structural = matmul(a_hat, emb);

    LossGrads lg = loss_and_grads(model, x, train_nodes, labels, cfg, &rng, true,
                                  emb_dim > 0 ? &structural : nullptr,
                                  emb_dim > 0 ? &a_hat : nullptr,
                                  emb_dim > 0 ? &emb : nullptr);
    if (!std::isfinite(lg.loss))
      throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                         " (learning-rate or data pathology)");

    adam_step(model.w1.data, lg.grads.w1.data, st_w1, cfg.learning_rate, epoch);
    adam_step(model.b1, lg.grads.b1, st_b1, cfg.learning_rate, epoch);
    adam_step(model.w2.data, lg.grads.w2.data, st_w2, cfg.learning_rate, epoch);
    adam_step(model.b2, lg.grads.b2, st_b2, cfg.learning_rate, epoch);
    if (emb_dim > 0) adam_step(emb.data, lg.grads.emb.data, st_emb, cfg.learning_rate, epoch);

    double val_loss = lg.loss;
    double val_metric = 0.0;
    if (!val_nodes.empty()) {
      DenseMatrix structural_post;
      if (emb_dim > 0) structural_post = matmul(a_hat, emb);
      TrainConfig eval_cfg = cfg;
      eval_cfg.dropout_keep_prob = 1.0;
      LossGrads vg = loss_and_grads(model, x, val_nodes, labels, eval_cfg, nullptr, false,
                                    emb_dim > 0 ? &structural_post : nullptr,
                                    emb_dim > 0 ? &a_hat : nullptr,
                                    emb_dim > 0 ? &emb : nullptr);
      val_loss = vg.loss;
      if (!std::isfinite(val_loss))
        throw NumericError("train: non-finite validation loss at epoch " +
                           std::to_string(epoch));
      DenseMatrix val_probs = forward(model, x, val_nodes, false, 1.0, nullptr,
                                      emb_dim > 0 ? &structural_post : nullptr);
      val_metric = validation_metric(val_probs, head, labels, val_nodes);
    }

    result.log.push_back({epoch, lg.loss, val_loss, val_metric});

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best_model = model;
      best_emb = emb;
      since_best = 0;
    } else if (!val_nodes.empty()) {
      if (++since_best >= cfg.early_stop_patience) break;
    }
  }

  result.model = std::move(best_model);
  result.emb = std::move(best_emb);
  return result;
}

}  // namespace detail

/// Trains the feed-forward classifier with full-batch Adam and early
/// stopping on validation loss; returns the parameters of the best
/// validation epoch. Only rows listed in train_nodes enter the loss and
/// only val_nodes are read for early stopping; test labels are never
/// touched.
inline TrainResult train(const FeatureView& x, const LabelMatrix& labels,
                         std::span<const NodeId> train_nodes,
                         std::span<const NodeId> val_nodes, const TrainConfig& cfg,
                         Head head = Head::softmax, std::size_t hidden = kDefaultHidden) {
  return detail::train_impl(x, labels, train_nodes, val_nodes, cfg, head, hidden, 0, nullptr);
}

struct EmbTrainResult {
  EmbAugmentedModel model;
  std::vector<TrainLogRow> log;
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

inline EmbTrainResult train_emb_augmented(const Graph& g, const FeatureView& x,
                                          const LabelMatrix& labels,
                                          std::span<const NodeId> train_nodes,
                                          std::span<const NodeId> val_nodes,
                                          const TrainConfig& cfg, std::size_t emb_dim,
                                          Head head = Head::softmax,
                                          std::size_t hidden = kDefaultHidden) {
  TrainResult base =
      detail::train_impl(x, labels, train_nodes, val_nodes, cfg, head, hidden, emb_dim, &g);
  EmbTrainResult out;
  out.model.base = std::move(base.model);
  out.model.emb = std::move(base.emb);
  out.model.a_hat = g.sym_normalized_adjacency(true);
  out.log = std::move(base.log);
  out.best_epoch = base.best_epoch;
  out.best_val_loss = base.best_val_loss;
  return out;
}

/// Checkpoint format, little-endian: magic "LDMLP1", u32 input, u32 hidden,
/// u32 output, u32 emb_nodes, u32 emb_dim, u8 head tag, then row-major f64
/// arrays w1, b1, w2, b2, emb.
inline void save_model(const MlpModel& m, const std::filesystem::path& path,
                       const DenseMatrix* emb = nullptr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  os.write("LDMLP1", 6);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.input_dim()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.hidden_dim()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.output_dim()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(emb ? emb->rows : 0));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(emb ? emb->cols : 0));
  os.put(m.head == Head::softmax ? '\0' : '\1');
  auto write_all = [&os](const std::vector<double>& v) {
    for (double d : v) detail::write_le<double>(os, d);
  };
  write_all(m.w1.data);
  write_all(m.b1);
  write_all(m.w2.data);
  write_all(m.b2);
  if (emb) write_all(emb->data);
  if (!os) throw InputError("write failed: " + path.string());
}

struct LoadedModel {
  MlpModel base;
  DenseMatrix emb;  // empty when the checkpoint had none
};

inline LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open: " + path.string());
  char magic[6];
  is.read(magic, 6);
  if (!is || std::string(magic, 6) != "LDMLP1")
    throw InputError("not an LDMLP1 file: " + path.string());
  const auto input = detail::read_le<std::uint32_t>(is);
  const auto hidden = detail::read_le<std::uint32_t>(is);
  const auto output = detail::read_le<std::uint32_t>(is);
  const auto emb_n = detail::read_le<std::uint32_t>(is);
  const auto emb_k = detail::read_le<std::uint32_t>(is);
  const int head_tag = is.get();
  if (head_tag != 0 && head_tag != 1) throw InputError("bad head tag in " + path.string());
  LoadedModel out;
  out.base.head = head_tag == 0 ? Head::softmax : Head::sigmoid;
  out.base.w1 = DenseMatrix(input, hidden);
  out.base.b1.assign(hidden, 0.0);
  out.base.w2 = DenseMatrix(hidden + emb_k, output);
  out.base.b2.assign(output, 0.0);
  out.emb = DenseMatrix(emb_n, emb_k);
  auto read_all = [&is](std::vector<double>& v) {
    for (double& d : v) d = detail::read_le<double>(is);
  };
  read_all(out.base.w1.data);
  read_all(out.base.b1);
  read_all(out.base.w2.data);
  read_all(out.base.b2);
  read_all(out.emb.data);
  return out;
}

}  // namespace ldgraph
