#include <catch2/catch_amalgamated.hpp>

#include "support/helpers.hpp"

using namespace ldgraph;
using test_support::oracle_macro_f1;
using test_support::oracle_micro_f1;
using test_support::random_labels;

namespace {

LabelMatrix rows(std::vector<std::vector<std::uint8_t>> data) {
  LabelMatrix m = LabelMatrix::zeros(data.size(), data.empty() ? 0 : data[0].size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    m.labeled[i] = 1;
    for (std::size_t j = 0; j < data[i].size(); ++j) m.at(i, j) = data[i][j];
  }
  return m;
}

const std::vector<NodeId> kBoth{0, 1};

}  // namespace

TEST_CASE("micro F1 basics") {
  SECTION("perfect prediction with positives present") {
    const LabelMatrix t = rows({{1, 0}, {0, 1}});
    REQUIRE(micro_f1(t, t, kBoth) == 1.0);
  }
  SECTION("pooled counts: TP=1 FP=1 FN=1 gives 0.5") {
    const LabelMatrix truth = rows({{1, 0}, {0, 1}});
    const LabelMatrix pred = rows({{1, 0}, {1, 0}});
    REQUIRE(micro_f1(pred, truth, kBoth) == 0.5);
  }
  SECTION("empty predictions against positives score 0") {
    const LabelMatrix truth = rows({{1, 0}, {0, 1}});
    const LabelMatrix pred = rows({{0, 0}, {0, 0}});
    REQUIRE(micro_f1(pred, truth, kBoth) == 0.0);
  }
  SECTION("no positives predicted and none present: defined as 0") {
    const LabelMatrix zero = rows({{0, 0}, {0, 0}});
    REQUIRE(micro_f1(zero, zero, kBoth) == 0.0);
  }
}

TEST_CASE("macro F1 basics") {
  SECTION("perfect prediction") {
    const LabelMatrix t = rows({{1, 0}, {0, 1}});
    REQUIRE(macro_f1(t, t, kBoth) == 1.0);
  }
  SECTION("per-label mean: (2/3 + 0)/2") {
    const LabelMatrix truth = rows({{1, 0}, {0, 1}});
    const LabelMatrix pred = rows({{1, 0}, {1, 0}});
    REQUIRE(macro_f1(pred, truth, kBoth) == Catch::Approx(1.0 / 3.0).margin(1e-15));
  }
  SECTION("single-label task equals that label's F1") {
    const LabelMatrix truth = rows({{1}, {1}, {0}});
    const LabelMatrix pred = rows({{1}, {0}, {1}});
    const std::vector<NodeId> all{0, 1, 2};
    REQUIRE(macro_f1(pred, truth, all) == micro_f1(pred, truth, all));
  }
}

TEST_CASE("accuracy is exact row match") {
  const LabelMatrix truth = rows({{1, 0}, {0, 1}, {1, 1}});
  const LabelMatrix pred = rows({{1, 0}, {1, 0}, {1, 1}});
  const std::vector<NodeId> all{0, 1, 2};
  REQUIRE(accuracy(pred, truth, all) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("metrics match the brute-force confusion oracle exactly") {
  SplitMix64 rng(211);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 1 + rng.next_below(10);
    const std::size_t l = 1 + rng.next_below(5);
    LabelMatrix truth = LabelMatrix::zeros(n, l);
    LabelMatrix pred = LabelMatrix::zeros(n, l);
    for (std::size_t v = 0; v < n; ++v) {
      truth.labeled[v] = pred.labeled[v] = 1;
      for (std::size_t j = 0; j < l; ++j) {
        truth.at(v, j) = rng.next_double() < 0.35;
        pred.at(v, j) = rng.next_double() < 0.35;
      }
    }
    std::vector<NodeId> eval_set;
    for (std::size_t v = 0; v < n; ++v)
      if (rng.next_double() < 0.8) eval_set.push_back(static_cast<NodeId>(v));
    REQUIRE(micro_f1(pred, truth, eval_set) == oracle_micro_f1(pred, truth, eval_set));
    REQUIRE(macro_f1(pred, truth, eval_set) == oracle_macro_f1(pred, truth, eval_set));
  }
}

TEST_CASE("metrics reject shape mismatches") {
  const LabelMatrix a = rows({{1, 0}});
  const LabelMatrix b = rows({{1, 0, 0}});
  REQUIRE_THROWS_AS(micro_f1(a, b, std::vector<NodeId>{0}), InputError);
  REQUIRE_THROWS_AS(macro_f1(a, b, std::vector<NodeId>{0}), InputError);
}
