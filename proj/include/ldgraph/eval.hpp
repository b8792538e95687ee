#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ldgraph/appr.hpp"
#include "ldgraph/datasets.hpp"
#include "ldgraph/errors.hpp"
#include "ldgraph/labelfeat.hpp"
#include "ldgraph/metrics.hpp"
#include "ldgraph/nn.hpp"

namespace ldgraph {

enum class Method { ld, ld_emb, adj, label_conv };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::ld: return "ld";
    case Method::ld_emb: return "ld+emb";
    case Method::adj: return "adj";
    case Method::label_conv: return "labelconv";
  }
  return "?";
}

inline Method method_from_name(const std::string& s) {
  if (s == "ld") return Method::ld;
  if (s == "ld+emb" || s == "ldemb" || s == "ld_emb") return Method::ld_emb;
  if (s == "adj") return Method::adj;
  if (s == "labelconv" || s == "label_conv") return Method::label_conv;
  throw InputError("unknown method `" + s + "` (expected ld, ld+emb, adj, labelconv)");
}

inline bool method_uses_appr(Method m) { return m == Method::ld || m == Method::ld_emb; }

/// One experiment cell: test metrics plus the validation micro F1 used for
/// hyperparameter selection. alpha is 0 for methods that do not use APPR.
struct EvalRow {
  std::string method;
  double alpha = 0.0;
  std::uint64_t split_seed = 0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  long long wall_ms = 0;
  double val_micro_f1 = 0.0;

  bool operator==(const EvalRow& o) const = default;
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

enum class SplitStrategy { planetoid, ratio, figure1 };

struct ExperimentConfig {
  TrainConfig train;
  double epsilon = 1e-5;
  std::size_t hidden = kDefaultHidden;
  std::size_t emb_dim = 16;  // LD+EMB only
  unsigned threads = 1;

  SplitStrategy split = SplitStrategy::planetoid;
  std::size_t per_class = 20;          // planetoid
  std::size_t n_val = 500;
  std::size_t n_test = 1000;
  double train_frac = 0.7;             // ratio
  double val_frac = 0.1;
  double test_frac = 0.2;
  std::size_t test_components = 2;     // figure1
  std::size_t val_components = 2;

  /// When set, APPR matrices are cached on disk keyed by
  /// (graph hash, alpha, epsilon).
  std::filesystem::path cache_dir;

  /// Measured wall times are only recorded in rows when true, keeping the
  /// default report byte-reproducible.
  bool record_timing = false;
};

inline SplitSpec make_split(const Dataset& ds, const ExperimentConfig& cfg,
                            std::uint64_t seed) {
  switch (cfg.split) {
    case SplitStrategy::planetoid:
      return planetoid_split(ds, cfg.per_class, cfg.n_val, cfg.n_test, seed);
    case SplitStrategy::ratio:
      return ratio_split(ds, cfg.train_frac, cfg.val_frac, cfg.test_frac, seed);
    case SplitStrategy::figure1:
      return figure1_split(ds, cfg.test_components, cfg.val_components, seed);
  }
  throw InputError("unknown split strategy");
}

namespace detail {

inline std::uint64_t graph_hash(const Graph& g) {
  // FNV-1a over the CSR arrays.
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  mix(g.num_nodes());
  for (NodeId u = 0; u < g.num_nodes(); ++u)
    for (NodeId v : g.neighbors(u)) mix((static_cast<std::uint64_t>(u) << 32) | v);
  return h;
}

inline ApprMatrix appr_for_alpha(const Dataset& ds, double alpha,
                                 const ExperimentConfig& cfg) {
  const ApprConfig acfg{alpha, cfg.epsilon};
  if (!cfg.cache_dir.empty()) {
    char name[128];
    std::snprintf(name, sizeof name, "appr-%016llx-a%.6f-e%.3e.bin",
                  static_cast<unsigned long long>(graph_hash(ds.graph)), alpha,
                  cfg.epsilon);
    const auto path = cfg.cache_dir / name;
    if (std::filesystem::exists(path)) {
      ApprMatrix m = load_appr(path);
      if (m.n == ds.num_nodes() && m.config.alpha == alpha &&
          m.config.epsilon == cfg.epsilon)
        return m;
    }
    ApprMatrix m = appr_all(ds.graph, acfg, cfg.threads);
    std::filesystem::create_directories(cfg.cache_dir);
    save_appr(m, path);
    return m;
  }
  return appr_all(ds.graph, acfg, cfg.threads);
}

}  // namespace detail

/// Runs the full protocol: for every (method, alpha, split seed) cell,
/// generate the split, restrict labels to the training nodes, build the
/// method's features, train, and score the test set. APPR matrices are
/// computed once per alpha and shared across seeds. Rows come back sorted
/// by (method, alpha, seed) and the whole run is reproducible from its
/// arguments alone; the per-cell training seed is derived from
/// (rng_seed, split seed, method, alpha).
inline EvalReport run_experiment(const Dataset& ds, std::span<const Method> methods,
                                 std::span<const double> alphas,
                                 std::span<const std::uint64_t> split_seeds,
                                 const ExperimentConfig& cfg) {
  if (methods.empty()) throw InputError("run_experiment: no methods");
  if (split_seeds.empty()) throw InputError("run_experiment: no split seeds");
  const bool needs_appr =
      std::any_of(methods.begin(), methods.end(), [](Method m) { return method_uses_appr(m); });
  if (needs_appr && alphas.empty()) throw InputError("run_experiment: no alphas");
  for (double a : alphas) ApprConfig{a, cfg.epsilon}.validate();

  // Shared inputs, computed once.
  std::map<double, ApprMatrix> appr_by_alpha;
  if (needs_appr)
    for (double a : alphas)
      if (!appr_by_alpha.count(a)) appr_by_alpha.emplace(a, detail::appr_for_alpha(ds, a, cfg));

  std::vector<SplitSpec> splits;
  splits.reserve(split_seeds.size());
  for (std::uint64_t seed : split_seeds) splits.push_back(make_split(ds, cfg, seed));

  const bool needs_adj =
      std::any_of(methods.begin(), methods.end(), [](Method m) { return m == Method::adj; });
  CsrMatrix adj_features_shared;
  if (needs_adj) adj_features_shared = adjacency_features(ds.graph);

  struct Cell {
    Method method;
    double alpha;  // 0 when unused
    std::size_t split_idx;
  };
  std::vector<Cell> cells;
  for (Method m : methods) {
    if (method_uses_appr(m)) {
      for (double a : alphas)
        for (std::size_t s = 0; s < splits.size(); ++s) cells.push_back({m, a, s});
    } else {
      for (std::size_t s = 0; s < splits.size(); ++s) cells.push_back({m, 0.0, s});
    }
  }

  const Head head = ds.task == TaskMode::multiclass ? Head::softmax : Head::sigmoid;
  const unsigned threads =
      cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  std::vector<EvalRow> rows(cells.size());

  auto run_cell = [&](std::size_t idx) {
    const Cell& cell = cells[idx];
    const SplitSpec& split = splits[cell.split_idx];
    const auto t0 = std::chrono::steady_clock::now();

    const LabelMatrix y_train = ds.labels.restricted_to(split.train);

    FeatureMatrix dense_features;
    const CsrMatrix* sparse_features = nullptr;
    switch (cell.method) {
      case Method::ld:
      case Method::ld_emb:
        dense_features = build_label_distribution(appr_by_alpha.at(cell.alpha), y_train);
        break;
      case Method::adj:
        sparse_features = &adj_features_shared;
        break;
      case Method::label_conv:
        dense_features = label_conv_features(ds.graph, y_train);
        break;
    }
    const FeatureView view = sparse_features ? FeatureView(*sparse_features)
                                             : FeatureView(dense_features);

    TrainConfig tcfg = cfg.train;
    tcfg.rng_seed = mix_seeds({cfg.train.rng_seed, split.seed,
                               static_cast<std::uint64_t>(cell.method),
                               static_cast<std::uint64_t>(cell.alpha * 1e6)});

    LabelMatrix pred;
    if (cell.method == Method::ld_emb) {
      EmbTrainResult r = train_emb_augmented(ds.graph, view, ds.labels, split.train,
                                             split.val, tcfg, cfg.emb_dim, head, cfg.hidden);
      pred = predict(r.model, view);
    } else {
      TrainResult r = train(view, ds.labels, split.train, split.val, tcfg, head, cfg.hidden);
      pred = predict(r.model, view);
    }

    EvalRow row;
    row.method = method_name(cell.method);
    row.alpha = cell.alpha;
    row.split_seed = split.seed;
    row.micro_f1 = micro_f1(pred, ds.labels, split.test);
    row.macro_f1 = macro_f1(pred, ds.labels, split.test);
    row.accuracy = accuracy(pred, ds.labels, split.test);
    row.val_micro_f1 = micro_f1(pred, ds.labels, split.val);
    if (cfg.record_timing)
      row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    rows[idx] = std::move(row);
  };

  if (threads <= 1 || cells.size() <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        run_cell(i);
      }
    };
    std::vector<std::thread> pool;
    const unsigned count = std::min<std::size_t>(threads, cells.size());
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EvalReport report;
  report.rows = std::move(rows);
  std::sort(report.rows.begin(), report.rows.end(), [](const EvalRow& a, const EvalRow& b) {
    if (a.method != b.method) return a.method < b.method;
    if (a.alpha != b.alpha) return a.alpha < b.alpha;
    return a.split_seed < b.split_seed;
  });
  return report;
}

/// Per-(method, alpha) mean and population standard deviation of the test
/// metrics, sorted by key.
struct SummaryRow {
  std::string method;
  double alpha = 0.0;
  std::size_t runs = 0;
  double micro_mean = 0.0, micro_std = 0.0;
  double macro_mean = 0.0, macro_std = 0.0;
  double acc_mean = 0.0, acc_std = 0.0;
};

inline std::vector<SummaryRow> summarize(const EvalReport& report) {
  if (report.rows.empty()) throw InputError("summarize: empty report");
  std::map<std::pair<std::string, double>, std::vector<const EvalRow*>> groups;
  for (const auto& row : report.rows) groups[{row.method, row.alpha}].push_back(&row);

  auto mean_std = [](const std::vector<const EvalRow*>& g, auto field, double& mean,
                     double& sd) {
    double s = 0.0;
    for (const auto* r : g) s += r->*field;
    mean = s / static_cast<double>(g.size());
    double var = 0.0;
    for (const auto* r : g) var += (r->*field - mean) * (r->*field - mean);
    sd = std::sqrt(var / static_cast<double>(g.size()));
  };

  std::vector<SummaryRow> out;
  for (const auto& [key, g] : groups) {
    SummaryRow s;
    s.method = key.first;
    s.alpha = key.second;
    s.runs = g.size();
    mean_std(g, &EvalRow::micro_f1, s.micro_mean, s.micro_std);
    mean_std(g, &EvalRow::macro_f1, s.macro_mean, s.macro_std);
    mean_std(g, &EvalRow::accuracy, s.acc_mean, s.acc_std);
    out.push_back(std::move(s));
  }
  return out;
}

/// Validation-selected alpha for an APPR-based method: the alpha with the
/// highest mean validation micro F1 across seeds, ties to the smaller
/// alpha.
inline double select_alpha(const EvalReport& report, Method method) {
  std::map<double, std::pair<double, std::size_t>> acc;
  const std::string name = method_name(method);
  for (const auto& row : report.rows)
    if (row.method == name) {
      acc[row.alpha].first += row.val_micro_f1;
      acc[row.alpha].second += 1;
    }
  if (acc.empty()) throw InputError("select_alpha: no rows for method " + name);
  double best_alpha = 0.0, best_score = -1.0;
  for (const auto& [alpha, sums] : acc) {
    const double mean = sums.first / static_cast<double>(sums.second);
    if (mean > best_score) {
      best_score = mean;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

/// Report CSV: metrics as 6-decimal fixed point. micro_f1 = 0 by convention
/// when neither positives are predicted nor present; macro counts
/// positive-free labels as 0.
inline void write_report_csv(const EvalReport& report, std::ostream& os) {
  os << "method,alpha,split_seed,micro_f1,macro_f1,accuracy,wall_ms\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%.1f,%llu,%.6f,%.6f,%.6f,%lld\n", r.method.c_str(),
                  r.alpha, static_cast<unsigned long long>(r.split_seed), r.micro_f1,
                  r.macro_f1, r.accuracy, r.wall_ms);
    os << buf;
  }
}

inline void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  write_report_csv(report, os);
  if (!os) throw InputError("write failed: " + path.string());
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
  os << "method,alpha,runs,micro_f1_mean,micro_f1_std,macro_f1_mean,macro_f1_std,"
        "accuracy_mean,accuracy_std\n";
  char buf[320];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.1f,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  r.method.c_str(), r.alpha, r.runs, r.micro_mean, r.micro_std,
                  r.macro_mean, r.macro_std, r.acc_mean, r.acc_std);
    os << buf;
  }
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows,
                              const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  write_summary_csv(rows, os);
  if (!os) throw InputError("write failed: " + path.string());
}

}  // namespace ldgraph
