// Command-line front end: appr, featurize, train-eval, sweep, synth.
// Pipeline stages talk through files so intermediate results (APPR
// matrices, features, splits) can be cached and inspected.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldgraph/ldgraph.hpp"

namespace fs = std::filesystem;
using namespace ldgraph;

namespace {

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("bad " + what + ": `" + s + "`");
  }
}

/// Edges TSV with integer node ids; n = max id + 1. String-id datasets go
/// through `sweep`, which loads edges and labels in one process.
Graph load_graph_numeric(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open: " + path.string());
  std::vector<std::pair<NodeId, NodeId>> edges;
  NodeId max_id = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, extra;
    if (!(ss >> a >> b) || (ss >> extra))
      throw InputError(path.string() + ":" + std::to_string(lineno) +
                       ": expected `<src>\\t<dst>`");
    const auto ia = static_cast<NodeId>(parse_u64(a, "node id"));
    const auto ib = static_cast<NodeId>(parse_u64(b, "node id"));
    max_id = std::max({max_id, ia, ib});
    edges.emplace_back(ia, ib);
  }
  if (edges.empty()) throw InputError(path.string() + ": no edges");
  return Graph::from_edges(edges, max_id + 1);
}

/// Labels TSV with integer node ids in [0, n).
LabelMatrix load_labels_numeric(const fs::path& path, std::size_t n, TaskMode task,
                                std::vector<std::string>* names_out = nullptr) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open: " + path.string());
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> label_of;
  std::vector<std::pair<NodeId, std::vector<std::size_t>>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = ldgraph::detail::split_fields(line, '\t');
    if (fields.size() != 2)
      throw InputError(path.string() + ":" + std::to_string(lineno) +
                       ": expected `<id>\\t<label>[,<label>...]`");
    const NodeId v = static_cast<NodeId>(parse_u64(fields[0], "node id"));
    if (v >= n)
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": node id " +
                       fields[0] + " out of range (n=" + std::to_string(n) + ")");
    std::vector<std::size_t> ls;
    for (const std::string& name : ldgraph::detail::split_fields(fields[1], ',')) {
      if (name.empty())
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": empty label");
      auto [it, fresh] = label_of.emplace(name, names.size());
      if (fresh) names.push_back(name);
      ls.push_back(it->second);
    }
    if (task == TaskMode::multiclass && ls.size() != 1)
      throw InputError(path.string() + ":" + std::to_string(lineno) +
                       ": multiclass node with " + std::to_string(ls.size()) + " labels");
    rows.emplace_back(v, std::move(ls));
  }
  if (names.empty()) throw InputError(path.string() + ": no classes (empty labels file)");
  LabelMatrix m = LabelMatrix::zeros(n, names.size());
  for (const auto& [v, ls] : rows) m.set_row(v, ls);
  m.validate(task);
  if (names_out) *names_out = std::move(names);
  return m;
}

std::vector<double> parse_double_list(const std::string& csv, const std::string& what) {
  std::vector<double> out;
  for (const std::string& tok : ldgraph::detail::split_fields(csv, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InputError("bad " + what + " value: `" + tok + "`");
    }
  }
  if (out.empty()) throw InputError("empty " + what + " list");
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& csv, const std::string& what) {
  std::vector<std::uint64_t> out;
  for (const std::string& tok : ldgraph::detail::split_fields(csv, ','))
    if (!tok.empty()) out.push_back(parse_u64(tok, what));
  if (out.empty()) throw InputError("empty " + what + " list");
  return out;
}

struct CommonTrainFlags {
  double lr = 0.01;
  double l2 = 5e-4;
  double dropout_keep = 0.5;
  std::size_t epochs = 200;
  std::size_t patience = 10;
  std::optional<double> pos_weight;
  std::uint64_t seed = 0;
  std::size_t hidden = kDefaultHidden;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--l2", l2, "L2 weight on the first layer");
    cmd->add_option("--dropout-keep", dropout_keep, "dropout keep probability");
    cmd->add_option("--epochs", epochs, "max training epochs");
    cmd->add_option("--patience", patience, "early stopping patience");
    cmd->add_option("--pos-weight", pos_weight,
                    "positive-class weight (multilabel; default 10)");
    cmd->add_option("--seed", seed, "rng seed");
    cmd->add_option("--hidden", hidden, "hidden layer width");
  }

  TrainConfig to_config(TaskMode task) const {
    if (task == TaskMode::multiclass && pos_weight.has_value())
      throw InputError("--pos-weight applies to --task multilabel only");
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.l2_weight = l2;
    cfg.dropout_keep_prob = dropout_keep;
    cfg.max_epochs = epochs;
    cfg.early_stop_patience = patience;
    cfg.pos_weight =
        task == TaskMode::multilabel ? pos_weight.value_or(10.0) : 1.0;
    cfg.rng_seed = seed;
    cfg.validate();
    return cfg;
  }
};

TaskMode parse_task(const std::string& s) {
  if (s == "multiclass") return TaskMode::multiclass;
  if (s == "multilabel") return TaskMode::multilabel;
  throw InputError("bad --task: `" + s + "` (expected multiclass or multilabel)");
}

long long elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

void append_report_row(const EvalRow& row, const fs::path& path) {
  const bool fresh = !fs::exists(path);
  std::ofstream os(path, std::ios::app);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  if (fresh) os << "method,alpha,split_seed,micro_f1,macro_f1,accuracy,wall_ms\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.1f,%llu,%.6f,%.6f,%.6f,%lld\n", row.method.c_str(),
                row.alpha, static_cast<unsigned long long>(row.split_seed), row.micro_f1,
                row.macro_f1, row.accuracy, row.wall_ms);
  os << buf;
}

// ---------------------------------------------------------------- appr ---

struct ApprArgs {
  std::string edges, out;
  double alpha = 0.1, epsilon = 1e-5;
  unsigned threads = 0;
};

int run_appr(const ApprArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const Graph g = load_graph_numeric(a.edges);
  const ApprMatrix m = appr_all(g, ApprConfig{a.alpha, a.epsilon}, a.threads);
  save_appr(m, a.out);
  std::cout << "n " << m.n << "\nnnz " << m.nnz() << "\nwall_ms " << elapsed_ms(t0)
            << "\n";
  return 0;
}

// ----------------------------------------------------------- featurize ---

struct FeaturizeArgs {
  std::string appr_in, edges, labels, split, out;
  std::string mode = "ld";
  std::string task = "multiclass";
};

int run_featurize(const FeaturizeArgs& a) {
  const TaskMode task = parse_task(a.task);
  if (a.mode == "adj") {
    if (a.edges.empty()) throw InputError("featurize --mode adj needs --edges");
    const Graph g = load_graph_numeric(a.edges);
    dump_sparse_features(adjacency_features(g), fs::path(a.out));
    return 0;
  }

  if (a.labels.empty() || a.split.empty())
    throw InputError("featurize --mode " + a.mode + " needs --labels-file and --split");
  const SplitSpec split = load_split(a.split);
  if (split.train.empty())
    throw InputError("featurize: split has an empty train set (no labels to distribute)");

  if (a.mode == "ld") {
    if (a.appr_in.empty()) throw InputError("featurize --mode ld needs --appr");
    const ApprMatrix appr = load_appr(a.appr_in);
    const LabelMatrix labels = load_labels_numeric(a.labels, appr.n, task);
    const LabelMatrix y_train = labels.restricted_to(split.train);
    dump_features(build_label_distribution(appr, y_train), fs::path(a.out));
    return 0;
  }
  if (a.mode == "labelconv") {
    if (a.edges.empty()) throw InputError("featurize --mode labelconv needs --edges");
    const Graph g = load_graph_numeric(a.edges);
    const LabelMatrix labels = load_labels_numeric(a.labels, g.num_nodes(), task);
    const LabelMatrix y_train = labels.restricted_to(split.train);
    dump_features(label_conv_features(g, y_train), fs::path(a.out));
    return 0;
  }
  throw InputError("bad --mode: `" + a.mode + "` (expected ld, adj, labelconv)");
}

// ---------------------------------------------------------- train-eval ---

struct TrainEvalArgs {
  std::string features, labels, split, report, edges, model_out, log_out;
  std::string task = "multiclass";
  std::string method_label = "ld";
  double alpha = 0.0;
  std::size_t emb_dim = 0;
  bool timing = false;
  CommonTrainFlags train;
};

int run_train_eval(const TrainEvalArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const TaskMode task = parse_task(a.task);

  std::ifstream fis(a.features);
  if (!fis) throw InputError("cannot open: " + a.features);
  std::string header;
  std::getline(fis, header);
  const auto tokens = ldgraph::detail::split_fields(header, ' ');
  fis.seekg(0);
  DenseMatrix dense;
  CsrMatrix sparse;
  const bool is_sparse = tokens.size() == 3;
  if (is_sparse)
    sparse = load_sparse_features(fis);
  else
    dense = load_features(fis);
  const FeatureView view = is_sparse ? FeatureView(sparse) : FeatureView(dense);

  const SplitSpec split = load_split(a.split);
  const LabelMatrix labels = load_labels_numeric(a.labels, view.rows(), task);
  const TrainConfig cfg = a.train.to_config(task);
  const Head head = task == TaskMode::multiclass ? Head::softmax : Head::sigmoid;

  LabelMatrix pred;
  if (a.emb_dim > 0) {
    if (a.edges.empty()) throw InputError("--emb-dim needs --edges for the adjacency");
    const Graph g = load_graph_numeric(a.edges);
    if (g.num_nodes() != view.rows())
      throw InputError("graph and features disagree on node count");
    EmbTrainResult r = train_emb_augmented(g, view, labels, split.train, split.val, cfg,
                                           a.emb_dim, head, a.train.hidden);
    pred = predict(r.model, view);
    if (!a.model_out.empty()) save_model(r.model.base, a.model_out, &r.model.emb);
    if (!a.log_out.empty()) write_train_log(r.log, a.log_out);
  } else {
    TrainResult r = train(view, labels, split.train, split.val, cfg, head, a.train.hidden);
    pred = predict(r.model, view);
    if (!a.model_out.empty()) save_model(r.model, a.model_out);
    if (!a.log_out.empty()) write_train_log(r.log, a.log_out);
  }

  EvalRow row;
  row.method = a.method_label;
  row.alpha = a.alpha;
  row.split_seed = split.seed;
  row.micro_f1 = micro_f1(pred, labels, split.test);
  row.macro_f1 = macro_f1(pred, labels, split.test);
  row.accuracy = accuracy(pred, labels, split.test);
  if (a.timing) row.wall_ms = elapsed_ms(t0);
  if (!a.report.empty()) append_report_row(row, a.report);

  char buf[256];
  std::snprintf(buf, sizeof buf, "micro_f1 %.6f\nmacro_f1 %.6f\naccuracy %.6f\n",
                row.micro_f1, row.macro_f1, row.accuracy);
  std::cout << buf;
  return 0;
}

// ---------------------------------------------------------------- sweep ---

struct SweepArgs {
  std::string content, cites, edges, labels;
  std::string task = "multiclass";
  std::string alphas = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string seeds = "1,2,3,4,5,6,7,8,9,10";
  std::string methods = "ld";
  std::string out = "report.csv";
  std::string summary_out;
  std::string split_strategy;
  std::string cache_dir;
  double epsilon = 1e-5;
  unsigned threads = 0;
  std::size_t emb_dim = 16;
  bool timing = false;
  std::size_t per_class = 20, n_val = 500, n_test = 1000;
  double train_frac = 0.7, val_frac = 0.1, test_frac = 0.2;
  std::size_t test_components = 2, val_components = 2;
  CommonTrainFlags train;
};

int run_sweep(const SweepArgs& a) {
  const TaskMode task = parse_task(a.task);
  const bool content_given = !a.content.empty() || !a.cites.empty();
  const bool tsv_given = !a.edges.empty() || !a.labels.empty();
  if (content_given == tsv_given)
    throw InputError("give either --content/--cites or --edges/--labels-file");

  Dataset ds;
  if (content_given) {
    if (a.content.empty() || a.cites.empty())
      throw InputError("--content and --cites go together");
    if (task != TaskMode::multiclass)
      throw InputError("content/cites datasets are multiclass");
    std::size_t skipped = 0;
    ds = load_content_cites(a.content, a.cites, &skipped);
    if (skipped > 0) std::cout << "skipped_cites " << skipped << "\n";
  } else {
    if (a.edges.empty() || a.labels.empty())
      throw InputError("--edges and --labels-file go together");
    ds = load_edge_label_tsv(a.edges, a.labels, task);
  }

  ExperimentConfig cfg;
  cfg.train = a.train.to_config(task);
  cfg.epsilon = a.epsilon;
  cfg.hidden = a.train.hidden;
  cfg.emb_dim = a.emb_dim;
  cfg.threads = a.threads;
  cfg.record_timing = a.timing;
  if (!a.cache_dir.empty()) cfg.cache_dir = a.cache_dir;
  cfg.per_class = a.per_class;
  cfg.n_val = a.n_val;
  cfg.n_test = a.n_test;
  cfg.train_frac = a.train_frac;
  cfg.val_frac = a.val_frac;
  cfg.test_frac = a.test_frac;
  cfg.test_components = a.test_components;
  cfg.val_components = a.val_components;

  std::string strategy = a.split_strategy;
  if (strategy.empty())
    strategy = task == TaskMode::multiclass ? "planetoid" : "ratio";
  if (strategy == "planetoid")
    cfg.split = SplitStrategy::planetoid;
  else if (strategy == "ratio")
    cfg.split = SplitStrategy::ratio;
  else if (strategy == "figure1")
    cfg.split = SplitStrategy::figure1;
  else
    throw InputError("bad --split-strategy: `" + strategy + "`");

  std::vector<Method> methods;
  for (const std::string& tok : ldgraph::detail::split_fields(a.methods, ','))
    if (!tok.empty()) methods.push_back(method_from_name(tok));
  if (methods.empty()) throw InputError("empty --methods list");
  const std::vector<double> alphas = parse_double_list(a.alphas, "--alphas");
  const std::vector<std::uint64_t> seeds = parse_u64_list(a.seeds, "--seeds");

  const auto t0 = std::chrono::steady_clock::now();
  const EvalReport report = run_experiment(ds, methods, alphas, seeds, cfg);
  write_report_csv(report, fs::path(a.out));
  const auto summary = summarize(report);
  const fs::path summary_path =
      a.summary_out.empty() ? fs::path(a.out).replace_extension(".summary.csv")
                            : fs::path(a.summary_out);
  write_summary_csv(summary, summary_path);

  std::cout << "rows " << report.rows.size() << "\n";
  for (Method m : methods)
    if (method_uses_appr(m)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "selected_alpha %s %.1f\n", method_name(m),
                    select_alpha(report, m));
      std::cout << buf;
    }
  std::cout << "report " << a.out << "\nsummary " << summary_path.string() << "\nwall_ms "
            << elapsed_ms(t0) << "\n";
  return 0;
}

// ---------------------------------------------------------------- synth ---

struct SynthArgs {
  std::size_t components = 10;
  std::uint64_t seed = 0;
  std::string out_prefix = "synthetic";
};

int run_synth(const SynthArgs& a) {
  const Dataset ds = make_figure1_synthetic(a.components, a.seed);
  const fs::path edges = a.out_prefix + ".edges.tsv";
  const fs::path labels = a.out_prefix + ".labels.tsv";
  save_edge_label_tsv(ds, edges, labels);
  std::cout << "nodes " << ds.num_nodes() << "\nedges " << ds.graph.num_undirected_edges()
            << "\nfiles " << edges.string() << " " << labels.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local label distribution toolkit"};
  app.require_subcommand(1);

  ApprArgs appr_args;
  auto* appr_cmd = app.add_subcommand("appr", "compute the APPR matrix of a graph");
  appr_cmd->add_option("--edges", appr_args.edges, "edges TSV (integer ids)")->required();
  appr_cmd->add_option("--alpha", appr_args.alpha, "teleportation probability");
  appr_cmd->add_option("--epsilon", appr_args.epsilon, "approximation threshold");
  appr_cmd->add_option("--out", appr_args.out, "output APPR binary")->required();
  appr_cmd->add_option("--threads", appr_args.threads, "worker count (0 = cores)");

  FeaturizeArgs feat_args;
  auto* feat_cmd = app.add_subcommand("featurize", "build feature matrices");
  feat_cmd->add_option("--mode", feat_args.mode, "ld | adj | labelconv");
  feat_cmd->add_option("--appr", feat_args.appr_in, "APPR binary (ld mode)");
  feat_cmd->add_option("--edges", feat_args.edges, "edges TSV (adj/labelconv modes)");
  feat_cmd->add_option("--labels-file", feat_args.labels, "labels TSV");
  feat_cmd->add_option("--split", feat_args.split, "split file");
  feat_cmd->add_option("--task", feat_args.task, "multiclass | multilabel");
  feat_cmd->add_option("--out", feat_args.out, "output feature dump")->required();

  TrainEvalArgs te_args;
  auto* te_cmd = app.add_subcommand("train-eval", "train a classifier and score the test set");
  te_cmd->add_option("--features", te_args.features, "feature dump")->required();
  te_cmd->add_option("--labels-file", te_args.labels, "labels TSV")->required();
  te_cmd->add_option("--split", te_args.split, "split file")->required();
  te_cmd->add_option("--task", te_args.task, "multiclass | multilabel");
  te_cmd->add_option("--report", te_args.report, "report CSV to append to");
  te_cmd->add_option("--edges", te_args.edges, "edges TSV (needed with --emb-dim)");
  te_cmd->add_option("--emb-dim", te_args.emb_dim, "structural embedding width (0 = off)");
  te_cmd->add_option("--model-out", te_args.model_out, "checkpoint path");
  te_cmd->add_option("--log-out", te_args.log_out, "training log CSV path");
  te_cmd->add_option("--method-label", te_args.method_label, "method column value");
  te_cmd->add_option("--alpha", te_args.alpha, "alpha column value");
  te_cmd->add_flag("--timing", te_args.timing, "record wall time in the report row");
  te_args.train.add_to(te_cmd);

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "alpha x split experiment grid");
  sweep_cmd->add_option("--content", sweep_args.content, "content file (citation data)");
  sweep_cmd->add_option("--cites", sweep_args.cites, "cites file (citation data)");
  sweep_cmd->add_option("--edges", sweep_args.edges, "edges TSV");
  sweep_cmd->add_option("--labels-file", sweep_args.labels, "labels TSV");
  sweep_cmd->add_option("--task", sweep_args.task, "multiclass | multilabel");
  sweep_cmd->add_option("--alphas", sweep_args.alphas, "comma list of alphas");
  sweep_cmd->add_option("--seeds", sweep_args.seeds, "comma list of split seeds");
  sweep_cmd->add_option("--methods", sweep_args.methods, "comma list: ld,ld+emb,adj,labelconv");
  sweep_cmd->add_option("--epsilon", sweep_args.epsilon, "approximation threshold");
  sweep_cmd->add_option("--out", sweep_args.out, "report CSV path");
  sweep_cmd->add_option("--summary-out", sweep_args.summary_out, "summary CSV path");
  sweep_cmd->add_option("--threads", sweep_args.threads, "worker count (0 = cores)");
  sweep_cmd->add_option("--emb-dim", sweep_args.emb_dim, "embedding width for ld+emb");
  sweep_cmd->add_option("--split-strategy", sweep_args.split_strategy,
                        "planetoid | ratio | figure1 (default by task)");
  sweep_cmd->add_option("--per-class", sweep_args.per_class, "planetoid: train per class");
  sweep_cmd->add_option("--n-val", sweep_args.n_val, "planetoid: validation size");
  sweep_cmd->add_option("--n-test", sweep_args.n_test, "planetoid: test size");
  sweep_cmd->add_option("--train-frac", sweep_args.train_frac, "ratio: train fraction");
  sweep_cmd->add_option("--val-frac", sweep_args.val_frac, "ratio: val fraction");
  sweep_cmd->add_option("--test-frac", sweep_args.test_frac, "ratio: test fraction");
  sweep_cmd->add_option("--test-components", sweep_args.test_components,
                        "figure1: held-out test components");
  sweep_cmd->add_option("--val-components", sweep_args.val_components,
                        "figure1: held-out validation components");
  sweep_cmd->add_option("--cache-dir", sweep_args.cache_dir, "on-disk APPR cache dir");
  sweep_cmd->add_flag("--timing", sweep_args.timing, "record wall times in report rows");
  sweep_args.train.add_to(sweep_cmd);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic motif dataset");
  synth_cmd->add_option("--components", synth_args.components, "motif component count");
  synth_cmd->add_option("--seed", synth_args.seed, "generator seed");
  synth_cmd->add_option("--out-prefix", synth_args.out_prefix, "output file prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(appr_cmd)) return run_appr(appr_args);
    if (app.got_subcommand(feat_cmd)) return run_featurize(feat_args);
    if (app.got_subcommand(te_cmd)) return run_train_eval(te_args);
    if (app.got_subcommand(sweep_cmd)) return run_sweep(sweep_args);
    if (app.got_subcommand(synth_cmd)) return run_synth(synth_args);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
