#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <string>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "ldgraph/errors.hpp"
#include "ldgraph/graph.hpp"

namespace ldgraph {

/// Teleportation probability and approximation threshold of the push
/// algorithm. Small alpha widens the effective neighborhood; epsilon bounds
/// the per-node residual relative to its degree.
struct ApprConfig {
  double alpha = 0.1;
  double epsilon = 1e-5;

  void validate() const {
    if (!(alpha > 0.0) || !(alpha <= 1.0))
      throw InputError("alpha must be in (0,1], got " + std::to_string(alpha));
    if (!(epsilon > 0.0))
      throw InputError("epsilon must be > 0, got " + std::to_string(epsilon));
  }
};

struct PushStats {
  std::uint64_t pushes = 0;
  std::uint64_t edge_updates = 0;  // sum of d(u) over performed pushes
};

/// Sparse solution p and residual r for one seed. At termination
/// r(u) < epsilon*d(u) for every non-isolated u and sum(p)+sum(r) == 1
/// up to rounding.
struct ApprVector {
  NodeId seed = 0;
  std::unordered_map<NodeId, double> p;
  std::unordered_map<NodeId, double> r;
  PushStats stats;

  // Sums accumulate in ascending node order so the result does not depend
  // on hash iteration order.
  double p_sum() const { return sorted_sum(p); }
  double r_sum() const { return sorted_sum(r); }

 private:
  static double sorted_sum(const std::unordered_map<NodeId, double>& m) {
    std::vector<NodeId> keys;
    keys.reserve(m.size());
    for (const auto& [k, v] : m) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    double s = 0.0;
    for (NodeId k : keys) s += m.at(k);
    return s;
  }
};

/// Push-based approximate personalized PageRank from a single seed.
///
/// Maintains the solution p and residual r; while some node u holds
/// r(u) >= epsilon*d(u), moves 2a/(1+a) of r(u) into p(u) and spreads
/// (1-a)/(1+a) of it uniformly over u's neighbors. Nodes are processed in
/// FIFO order with an in-queue flag, which makes the run deterministic for
/// a fixed graph and config.
///
/// An isolated seed is returned as p = e_seed, r = 0: the walk never leaves
/// the seed, and a literal push at degree zero would destroy mass.
inline ApprVector approximate_ppr(const Graph& g, NodeId seed, const ApprConfig& cfg) {
  cfg.validate();
  if (seed >= g.num_nodes())
    throw InputError("seed " + std::to_string(seed) + " out of range, n=" +
                     std::to_string(g.num_nodes()));

  ApprVector out;
  out.seed = seed;
  if (g.degree(seed) == 0) {
    out.p.emplace(seed, 1.0);
    return out;
  }

  const double into_p = 2.0 * cfg.alpha / (1.0 + cfg.alpha);
  const double spread = (1.0 - cfg.alpha) / (1.0 + cfg.alpha);

  auto& p = out.p;
  auto& r = out.r;
  r.emplace(seed, 1.0);

  std::vector<std::uint8_t> queued(g.num_nodes(), 0);
  std::queue<NodeId> work;
  if (1.0 >= cfg.epsilon * g.degree(seed)) {
    work.push(seed);
    queued[seed] = 1;
  }

  while (!work.empty()) {
    const NodeId u = work.front();
    work.pop();
    queued[u] = 0;

    const double ru = r[u];
    const NodeId du = g.degree(u);
    p[u] += into_p * ru;
    if (spread > 0.0) {
      const double share = spread * ru / static_cast<double>(du);
      for (NodeId v : g.neighbors(u)) {
        double& rv = r[v];
        rv += share;
        if (!queued[v] && rv >= cfg.epsilon * g.degree(v)) {
          work.push(v);
          queued[v] = 1;
        }
      }
    }
    r.erase(u);
    ++out.stats.pushes;
    out.stats.edge_updates += du;
  }
  return out;
}

/// Exact personalized PageRank, used as a test oracle for the push
/// implementation. Solves pi = a'*e_seed + (1-a')*pi*W by power iteration,
/// where a' = 2a/(1+a) is the plain-walk teleport equivalent of the lazy
/// walk underlying the push coefficients and W = D^{-1}A. Rows of isolated
/// nodes redirect their walk mass to the seed, mirroring the push
/// convention, so the two agree on graphs with isolated vertices.
inline std::vector<double> exact_ppr(const Graph& g, NodeId seed, double alpha) {
  ApprConfig{alpha, 1.0}.validate();
  if (seed >= g.num_nodes())
    throw InputError("seed " + std::to_string(seed) + " out of range, n=" +
                     std::to_string(g.num_nodes()));
  const double teleport = 2.0 * alpha / (1.0 + alpha);
  const std::size_t n = g.num_nodes();
  std::vector<double> pi(n, 0.0), nxt(n, 0.0);
  pi[seed] = 1.0;
  for (std::uint64_t iter = 0; iter < 1000000; ++iter) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (NodeId u = 0; u < n; ++u) {
      const double mass = pi[u];
      if (mass == 0.0) continue;
      const NodeId du = g.degree(u);
      if (du == 0) {
        nxt[seed] += (1.0 - teleport) * mass;
      } else {
        const double share = (1.0 - teleport) * mass / static_cast<double>(du);
        for (NodeId v : g.neighbors(u)) nxt[v] += share;
      }
    }
    nxt[seed] += teleport;
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) delta = std::max(delta, std::abs(nxt[i] - pi[i]));
    pi.swap(nxt);
    if (delta < 1e-14) return pi;
  }
  throw NumericError("exact_ppr: power iteration did not converge");
}

/// One frozen APPR row: ids sorted ascending, parallel value array.
struct ApprRow {
  std::vector<NodeId> ids;
  std::vector<double> values;

  bool operator==(const ApprRow& o) const = default;

  double value_at(NodeId id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return 0.0;
    return values[static_cast<std::size_t>(it - ids.begin())];
  }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

inline ApprRow freeze(const ApprVector& v) {
  ApprRow row;
  row.ids.reserve(v.p.size());
  for (const auto& [id, val] : v.p) row.ids.push_back(id);
  std::sort(row.ids.begin(), row.ids.end());
  row.values.reserve(row.ids.size());
  for (NodeId id : row.ids) row.values.push_back(v.p.at(id));
  return row;
}

/// All APPR solution rows of one graph; row i was produced with seed i.
struct ApprMatrix {
  ApprConfig config;
  NodeId n = 0;
  std::vector<ApprRow> rows;

  bool operator==(const ApprMatrix& o) const {
    return n == o.n && config.alpha == o.config.alpha &&
           config.epsilon == o.config.epsilon && rows == o.rows;
  }

  std::size_t nnz() const {
    std::size_t s = 0;
    for (const auto& r : rows) s += r.ids.size();
    return s;
  }
};

/// Runs approximate_ppr for every seed on a worker pool. Rows are written to
/// disjoint slots and each row is a pure function of (graph, seed, config),
/// so the result is identical for any worker count.
inline ApprMatrix appr_all(const Graph& g, const ApprConfig& cfg, unsigned threads = 0) {
  cfg.validate();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  ApprMatrix m;
  m.config = cfg;
  m.n = g.num_nodes();
  m.rows.resize(m.n);

  std::atomic<NodeId> next{0};
  auto worker = [&] {
    for (;;) {
      const NodeId i = next.fetch_add(1);
      if (i >= m.n) return;
      m.rows[i] = freeze(approximate_ppr(g, i, cfg));
    }
  };
  if (threads <= 1 || m.n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const unsigned count = std::min<unsigned>(threads, m.n);
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return m;
}

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::uint64_t bits;
  if constexpr (std::is_same_v<T, double>) {
    static_assert(sizeof(double) == 8);
    std::memcpy(&bits, &v, 8);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw InputError("unexpected end of file in APPR data");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  if constexpr (std::is_same_v<T, double>) {
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  } else {
    return static_cast<T>(bits);
  }
}

}  // namespace detail

/// Binary APPR cache format, little-endian:
///   magic "APPR1", n (u64), alpha (f64), epsilon (f64),
///   then per row: count (u64), count node ids (u32), count values (f64).
inline void save_appr(const ApprMatrix& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open for writing: " + path.string());
  os.write("APPR1", 5);
  detail::write_le<std::uint64_t>(os, m.n);
  detail::write_le<double>(os, m.config.alpha);
  detail::write_le<double>(os, m.config.epsilon);
  for (const auto& row : m.rows) {
    detail::write_le<std::uint64_t>(os, row.ids.size());
    for (NodeId id : row.ids) detail::write_le<std::uint32_t>(os, id);
    for (double v : row.values) detail::write_le<double>(os, v);
  }
  if (!os) throw InputError("write failed: " + path.string());
}

inline ApprMatrix load_appr(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open: " + path.string());
  char magic[5];
  is.read(magic, 5);
  if (!is || std::string(magic, 5) != "APPR1")
    throw InputError("not an APPR1 file: " + path.string());
  ApprMatrix m;
  m.n = static_cast<NodeId>(detail::read_le<std::uint64_t>(is));
  m.config.alpha = detail::read_le<double>(is);
  m.config.epsilon = detail::read_le<double>(is);
  m.rows.resize(m.n);
  for (auto& row : m.rows) {
    const std::uint64_t count = detail::read_le<std::uint64_t>(is);
    row.ids.resize(count);
    row.values.resize(count);
    for (auto& id : row.ids) id = detail::read_le<std::uint32_t>(is);
    for (auto& v : row.values) v = detail::read_le<double>(is);
  }
  return m;
}

}  // namespace ldgraph
