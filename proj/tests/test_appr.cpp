#include <catch2/catch_amalgamated.hpp>

#include "support/helpers.hpp"

using namespace ldgraph;
using test_support::erdos_renyi;
using test_support::random_connected_graph;

namespace {

Graph triangle() {
  const std::pair<NodeId, NodeId> edges[] = {{0, 1}, {1, 2}, {0, 2}};
  return Graph::from_edges(edges, 3);
}

double vec_value(const std::unordered_map<NodeId, double>& m, NodeId id) {
  auto it = m.find(id);
  return it == m.end() ? 0.0 : it->second;
}

}  // namespace

TEST_CASE("alpha = 1 collapses the push to the seed vector exactly") {
  SplitMix64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const Graph g = erdos_renyi(rng, 2 + static_cast<NodeId>(rng.next_below(30)), 0.3);
    const NodeId seed = static_cast<NodeId>(rng.next_below(g.num_nodes()));
    const ApprVector v = approximate_ppr(g, seed, {1.0, 1e-6});
    REQUIRE(v.p.size() == 1);
    REQUIRE(v.p.at(seed) == 1.0);
    REQUIRE(v.r.empty());
  }
}

TEST_CASE("isolated seed returns p = e_seed by convention") {
  const Graph g = Graph::from_edges({}, 3);
  const ApprVector v = approximate_ppr(g, 1, {0.3, 1e-4});
  REQUIRE(v.p.size() == 1);
  REQUIRE(v.p.at(1) == 1.0);
  REQUIRE(v.r.empty());
  REQUIRE(v.p_sum() + v.r_sum() == 1.0);
}

TEST_CASE("exact_ppr fixed points") {
  SECTION("single node") {
    const Graph g = Graph::from_edges({}, 1);
    const auto pi = exact_ppr(g, 0, 0.37);
    REQUIRE(pi[0] == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("edge with alpha = 1 gives e_0") {
    const std::pair<NodeId, NodeId> edges[] = {{0, 1}};
    const Graph g = Graph::from_edges(edges, 2);
    const auto pi = exact_ppr(g, 0, 1.0);
    REQUIRE(pi[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(pi[1] == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("edge with alpha = 0.5: hand-solved fixed point (3/4, 1/4)") {
    const std::pair<NodeId, NodeId> edges[] = {{0, 1}};
    const Graph g = Graph::from_edges(edges, 2);
    const auto pi = exact_ppr(g, 0, 0.5);
    REQUIRE(pi[0] == Catch::Approx(0.75).margin(1e-12));
    REQUIRE(pi[1] == Catch::Approx(0.25).margin(1e-12));
  }
}

TEST_CASE("triangle push tracks the exact solution within the residual mass") {
  // Hand-solved fixed point for the 3-cycle at alpha = 0.5: (5/7, 1/7, 1/7).
  const Graph g = triangle();
  const auto exact = exact_ppr(g, 0, 0.5);
  REQUIRE(exact[0] == Catch::Approx(5.0 / 7.0).margin(1e-12));
  REQUIRE(exact[1] == Catch::Approx(1.0 / 7.0).margin(1e-12));
  REQUIRE(exact[2] == Catch::Approx(1.0 / 7.0).margin(1e-12));

  const ApprVector v = approximate_ppr(g, 0, {0.5, 1e-8});
  const double slack = v.r_sum() + 1e-12;
  for (NodeId u = 0; u < 3; ++u) {
    const double err = exact[u] - vec_value(v.p, u);
    REQUIRE(err >= -1e-12);
    REQUIRE(err <= slack);
  }
}

TEST_CASE("push invariants: mass conservation, residual bound, nonnegativity") {
  SplitMix64 rng(11);
  for (int i = 0; i < 60; ++i) {
    const Graph g = erdos_renyi(rng, 2 + static_cast<NodeId>(rng.next_below(40)), 0.2);
    const double alpha = 0.05 + 0.9 * rng.next_double();
    const double eps = i % 2 == 0 ? 1e-4 : 1e-6;
    const NodeId seed = static_cast<NodeId>(rng.next_below(g.num_nodes()));
    const ApprVector v = approximate_ppr(g, seed, {alpha, eps});

    REQUIRE(v.p_sum() + v.r_sum() == Catch::Approx(1.0).margin(1e-12));
    for (const auto& [u, val] : v.p) REQUIRE(val >= 0.0);
    for (const auto& [u, val] : v.r) {
      REQUIRE(val >= 0.0);
      if (g.degree(u) > 0) REQUIRE(val < eps * g.degree(u));
    }
  }
}

TEST_CASE("linearity identity against the exact oracle on small graphs") {
  SplitMix64 rng(13);
  for (int i = 0; i < 25; ++i) {
    const Graph g = random_connected_graph(rng, 2, 8);
    for (double alpha : {0.1, 0.5, 0.9}) {
      const ApprConfig cfg{alpha, 1e-4};
      for (NodeId seed = 0; seed < g.num_nodes(); ++seed) {
        const ApprVector v = approximate_ppr(g, seed, cfg);
        const auto exact = exact_ppr(g, seed, alpha);
        std::vector<double> rhs(g.num_nodes(), 0.0);
        for (const auto& [w, rw] : v.r) {
          const auto from_w = exact_ppr(g, w, alpha);
          for (NodeId u = 0; u < g.num_nodes(); ++u) rhs[u] += rw * from_w[u];
        }
        for (NodeId u = 0; u < g.num_nodes(); ++u)
          REQUIRE(exact[u] - vec_value(v.p, u) == Catch::Approx(rhs[u]).margin(1e-9));
      }
    }
  }
}

TEST_CASE("per-coordinate error obeys the epsilon*d(u) certificate and refines with epsilon") {
  // For undirected graphs walk reversibility gives
  // exact(u) - p(u) = sum_w r(w) ppr_w(u) < eps * d(u), so shrinking eps by
  // 10x tightens every coordinate's certificate by 10x.
  SplitMix64 rng(17);
  for (int i = 0; i < 15; ++i) {
    const Graph g = erdos_renyi(rng, 2 + static_cast<NodeId>(rng.next_below(20)), 0.3);
    const NodeId seed = static_cast<NodeId>(rng.next_below(g.num_nodes()));
    const double alpha = 0.1 + 0.8 * rng.next_double();
    const auto exact = exact_ppr(g, seed, alpha);
    for (double eps : {1e-3, 1e-5}) {
      for (double scale : {1.0, 0.1}) {
        const ApprVector v = approximate_ppr(g, seed, {alpha, eps * scale});
        for (NodeId u = 0; u < g.num_nodes(); ++u) {
          const double err = exact[u] - vec_value(v.p, u);
          REQUIRE(err >= -1e-12);
          REQUIRE(err <= eps * scale * g.degree(u) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("push work stays within the 1/(alpha*epsilon) complexity budget") {
  SplitMix64 rng(19);
  for (int i = 0; i < 40; ++i) {
    const Graph g = erdos_renyi(rng, 2 + static_cast<NodeId>(rng.next_below(60)), 0.15);
    const double alpha = 0.05 + 0.9 * rng.next_double();
    const double eps = i % 2 == 0 ? 1e-3 : 1e-5;
    const NodeId seed = static_cast<NodeId>(rng.next_below(g.num_nodes()));
    const ApprVector v = approximate_ppr(g, seed, {alpha, eps});
    REQUIRE(static_cast<double>(v.stats.edge_updates) <= 2.0 / (alpha * eps));
  }
}

TEST_CASE("appr_all: triangle rows are permutations of each other") {
  const ApprMatrix m = appr_all(triangle(), {0.5, 1e-6}, 1);
  REQUIRE(m.rows.size() == 3);
  for (NodeId s = 0; s < 3; ++s) {
    REQUIRE(m.rows[s].value_at(s) == Catch::Approx(m.rows[0].value_at(0)).margin(1e-14));
    for (NodeId other = 0; other < 3; ++other)
      if (other != s)
        REQUIRE(m.rows[s].value_at(other) ==
                Catch::Approx(m.rows[0].value_at(1)).margin(1e-14));
  }
}

TEST_CASE("appr_all is bit-identical across worker counts") {
  SplitMix64 rng(23);
  const Graph g = erdos_renyi(rng, 100, 0.05);
  const ApprConfig cfg{0.2, 1e-5};
  const ApprMatrix serial = appr_all(g, cfg, 1);
  const ApprMatrix parallel = appr_all(g, cfg, 8);
  REQUIRE(serial == parallel);
}

TEST_CASE("APPR binary serialization round-trips") {
  SplitMix64 rng(29);
  const Graph g = erdos_renyi(rng, 25, 0.2);
  const ApprMatrix m = appr_all(g, {0.35, 1e-6}, 2);
  test_support::TempDir dir;
  const auto path = dir.file("m.appr");
  save_appr(m, path);
  REQUIRE(load_appr(path) == m);
}

TEST_CASE("appr input validation") {
  const Graph g = triangle();
  REQUIRE_THROWS_AS(approximate_ppr(g, 7, {0.5, 1e-5}), InputError);
  REQUIRE_THROWS_AS(approximate_ppr(g, 0, {0.0, 1e-5}), InputError);
  REQUIRE_THROWS_AS(approximate_ppr(g, 0, {1.5, 1e-5}), InputError);
  REQUIRE_THROWS_AS(approximate_ppr(g, 0, {0.5, 0.0}), InputError);
  REQUIRE_THROWS_AS(load_appr("/nonexistent/file.appr"), InputError);
}
