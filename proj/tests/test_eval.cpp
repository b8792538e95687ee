#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "support/helpers.hpp"

using namespace ldgraph;
using test_support::figure1_train_config;

namespace {

ExperimentConfig figure1_experiment(std::uint64_t train_seed = 0) {
  ExperimentConfig cfg;
  cfg.train = figure1_train_config(train_seed);
  cfg.split = SplitStrategy::figure1;
  cfg.epsilon = 1e-6;
  cfg.test_components = 2;
  cfg.val_components = 2;
  return cfg;
}

}  // namespace

TEST_CASE("summarize aggregates mean and population std") {
  EvalReport report;
  SECTION("single row") {
    report.rows.push_back({"ld", 0.1, 1, 0.8, 0.7, 0.8, 0, 0.0});
    const auto rows = summarize(report);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].micro_mean == 0.8);
    REQUIRE(rows[0].micro_std == 0.0);
    REQUIRE(rows[0].runs == 1);
  }
  SECTION("two rows 0.4 / 0.6 give mean 0.5, population std 0.1") {
    report.rows.push_back({"ld", 0.1, 1, 0.4, 0.4, 0.4, 0, 0.0});
    report.rows.push_back({"ld", 0.1, 2, 0.6, 0.6, 0.6, 0, 0.0});
    const auto rows = summarize(report);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].micro_mean == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(rows[0].micro_std == Catch::Approx(0.1).margin(1e-12));
  }
  SECTION("empty report is an error") {
    REQUIRE_THROWS_AS(summarize(EvalReport{}), InputError);
  }
}

TEST_CASE("experiment on the synthetic motif data separates LD from Adj") {
  const Dataset ds = make_figure1_synthetic(10, 19);
  const Method methods[] = {Method::ld, Method::adj};
  const double alphas[] = {0.5};
  const std::uint64_t seeds[] = {1, 2};
  const EvalReport report = run_experiment(ds, methods, alphas, seeds, figure1_experiment());

  REQUIRE(report.rows.size() == 4);  // ld: 1 alpha x 2 seeds; adj: 2 seeds
  double ld_acc = 0, adj_acc = 0;
  for (const auto& row : report.rows)
    (row.method == "ld" ? ld_acc : adj_acc) += row.accuracy / 2.0;
  REQUIRE(ld_acc >= 0.95);
  REQUIRE(adj_acc <= 0.60);
}

TEST_CASE("run_experiment is reproducible") {
  const Dataset ds = make_figure1_synthetic(6, 23);
  const Method methods[] = {Method::ld};
  const double alphas[] = {0.3, 0.7};
  const std::uint64_t seeds[] = {4, 5};
  ExperimentConfig cfg = figure1_experiment(9);
  cfg.train.max_epochs = 300;
  cfg.train.early_stop_patience = 300;
  cfg.test_components = 1;
  cfg.val_components = 1;
  const EvalReport a = run_experiment(ds, methods, alphas, seeds, cfg);
  const EvalReport b = run_experiment(ds, methods, alphas, seeds, cfg);
  REQUIRE(a.rows == b.rows);
  REQUIRE(a.rows.size() == 4);
  for (std::size_t i = 1; i < a.rows.size(); ++i) {
    const auto& prev = a.rows[i - 1];
    const auto& cur = a.rows[i];
    REQUIRE(std::tie(prev.method, prev.alpha, prev.split_seed) <
            std::tie(cur.method, cur.alpha, cur.split_seed));
  }
}

TEST_CASE("select_alpha picks the best mean validation micro F1") {
  EvalReport report;
  report.rows.push_back({"ld", 0.1, 1, 0.0, 0.0, 0.0, 0, 0.70});
  report.rows.push_back({"ld", 0.1, 2, 0.0, 0.0, 0.0, 0, 0.80});
  report.rows.push_back({"ld", 0.5, 1, 0.0, 0.0, 0.0, 0, 0.60});
  report.rows.push_back({"ld", 0.5, 2, 0.0, 0.0, 0.0, 0, 0.99});
  REQUIRE(select_alpha(report, Method::ld) == 0.5);
  REQUIRE_THROWS_AS(select_alpha(report, Method::adj), InputError);
}

TEST_CASE("report CSV format is fixed") {
  EvalReport report;
  report.rows.push_back({"ld", 0.1, 7, 0.812345678, 0.75, 0.8, 0, 0.0});
  std::ostringstream os;
  write_report_csv(report, os);
  REQUIRE(os.str() ==
          "method,alpha,split_seed,micro_f1,macro_f1,accuracy,wall_ms\n"
          "ld,0.1,7,0.812346,0.750000,0.800000,0\n");
}

TEST_CASE("on-disk APPR cache is hit on the second run") {
  test_support::TempDir dir;
  const Dataset ds = make_figure1_synthetic(4, 29);
  const Method methods[] = {Method::ld};
  const double alphas[] = {0.4};
  const std::uint64_t seeds[] = {1};
  ExperimentConfig cfg = figure1_experiment();
  cfg.train.max_epochs = 50;
  cfg.train.early_stop_patience = 50;
  cfg.test_components = 1;
  cfg.val_components = 1;
  cfg.cache_dir = dir.path;

  const EvalReport first = run_experiment(ds, methods, alphas, seeds, cfg);
  std::size_t cached_files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path)) {
    ++cached_files;
    REQUIRE(entry.path().extension() == ".bin");
  }
  REQUIRE(cached_files == 1);
  const EvalReport second = run_experiment(ds, methods, alphas, seeds, cfg);
  REQUIRE(first.rows == second.rows);
}

TEST_CASE("experiment cells run identically across thread counts") {
  const Dataset ds = make_figure1_synthetic(6, 31);
  const Method methods[] = {Method::ld, Method::label_conv};
  const double alphas[] = {0.2, 0.8};
  const std::uint64_t seeds[] = {1, 2, 3};
  ExperimentConfig cfg = figure1_experiment(2);
  cfg.train.max_epochs = 120;
  cfg.train.early_stop_patience = 120;
  cfg.test_components = 1;
  cfg.val_components = 1;

  cfg.threads = 1;
  const EvalReport serial = run_experiment(ds, methods, alphas, seeds, cfg);
  cfg.threads = 8;
  const EvalReport parallel = run_experiment(ds, methods, alphas, seeds, cfg);
  REQUIRE(serial.rows == parallel.rows);
  REQUIRE(serial.rows.size() == 2 * 3 + 3);
}
