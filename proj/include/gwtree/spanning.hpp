#ifndef GWTREE_SPANNING_HPP
#define GWTREE_SPANNING_HPP

// Erdos-Renyi graphs, their largest component, and the spanning-tree count
// through the log-determinant of a reduced Laplacian.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "analytic.hpp"
#include "estimate.hpp"
#include "random.hpp"

namespace gwtree {

struct SparseGraph {
  std::int32_t n = 0;
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;  // u < v
  std::vector<std::int64_t> offsets;                         // size n + 1
  std::vector<std::int32_t> adj;

  std::int64_t num_edges() const noexcept { return static_cast<std::int64_t>(edges.size()); }
  std::int32_t degree(std::int32_t v) const {
    return static_cast<std::int32_t>(offsets[static_cast<std::size_t>(v) + 1] - offsets[static_cast<std::size_t>(v)]);
  }
  template <typename Fn>
  void for_each_neighbour(std::int32_t v, Fn&& fn) const {
    for (auto i = offsets[static_cast<std::size_t>(v)]; i < offsets[static_cast<std::size_t>(v) + 1]; ++i) {
      fn(adj[static_cast<std::size_t>(i)]);
    }
  }
};

/// Builds the adjacency arrays. Endpoints are normalized to u < v; self-loops
/// and duplicates are rejected.
inline SparseGraph make_graph(std::int32_t n, std::vector<std::pair<std::int32_t, std::int32_t>> edges) {
  if (n < 0) throw std::domain_error("make_graph: n must be non-negative");
  SparseGraph g;
  g.n = n;
  for (auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) throw std::domain_error("make_graph: endpoint out of range");
    if (u == v) throw std::domain_error("make_graph: self-loop at " + std::to_string(u));
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw std::domain_error("make_graph: duplicate edge");
  }
  g.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const auto& [u, v] : edges) {
    ++g.offsets[static_cast<std::size_t>(u) + 1];
    ++g.offsets[static_cast<std::size_t>(v) + 1];
  }
  std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
  g.adj.resize(2 * edges.size());
  std::vector<std::int64_t> fill(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& [u, v] : edges) {
    g.adj[static_cast<std::size_t>(fill[static_cast<std::size_t>(u)]++)] = v;
    g.adj[static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++)] = u;
  }
  g.edges = std::move(edges);
  return g;
}

inline SparseGraph complete_graph(std::int32_t n) {
  std::vector<std::pair<std::int32_t, std::int32_t>> e;
  for (std::int32_t u = 0; u < n; ++u)
    for (std::int32_t v = u + 1; v < n; ++v) e.emplace_back(u, v);
  return make_graph(n, std::move(e));
}

/// G(n, p) by geometric skipping over the pairs (u, v), u < v, in
/// lexicographic order of (v, u).
inline SparseGraph sample_gnp(std::int32_t n, double p, Key seed) {
  if (n < 1) throw std::domain_error("sample_gnp: n must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("sample_gnp: p must lie in [0, 1]");
  if (p == 1.0) return complete_graph(n);
  std::vector<std::pair<std::int32_t, std::int32_t>> e;
  if (p > 0.0) {
    Stream rng(seed);
    const double log_q = std::log1p(-p);
    std::int64_t v = 1;
    std::int64_t w = -1;
    while (v < n) {
      const double r = rng.uniform_open();
      w += 1 + static_cast<std::int64_t>(std::floor(std::log(r) / log_q));
      while (w >= v && v < n) {
        w -= v;
        ++v;
      }
      if (v < n) e.emplace_back(static_cast<std::int32_t>(w), static_cast<std::int32_t>(v));
    }
  }
  return make_graph(n, std::move(e));
}

struct Component {
  SparseGraph graph;
  std::vector<std::int32_t> original;  // new label -> old label
};

/// Induced subgraph on the largest component; among equal sizes the one
/// holding the smallest vertex id wins. Vertices keep their relative order.
inline Component giant_component(const SparseGraph& g) {
  Component out;
  if (g.n == 0) return out;
  std::vector<std::int32_t> label(static_cast<std::size_t>(g.n), -1);
  std::vector<std::int32_t> stack;
  std::int32_t best = -1;
  std::int64_t best_size = 0;
  std::int32_t next = 0;
  for (std::int32_t s = 0; s < g.n; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    const std::int32_t id = next++;
    std::int64_t size = 0;
    label[static_cast<std::size_t>(s)] = id;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::int32_t x = stack.back();
      stack.pop_back();
      ++size;
      g.for_each_neighbour(x, [&](std::int32_t y) {
        if (label[static_cast<std::size_t>(y)] < 0) {
          label[static_cast<std::size_t>(y)] = id;
          stack.push_back(y);
        }
      });
    }
    if (size > best_size) {
      best_size = size;
      best = id;
    }
  }
  std::vector<std::int32_t> relabel(static_cast<std::size_t>(g.n), -1);
  for (std::int32_t v = 0; v < g.n; ++v) {
    if (label[static_cast<std::size_t>(v)] == best) {
      relabel[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(out.original.size());
      out.original.push_back(v);
    }
  }
  std::vector<std::pair<std::int32_t, std::int32_t>> e;
  for (const auto& [u, v] : g.edges) {
    if (relabel[static_cast<std::size_t>(u)] >= 0) {
      e.emplace_back(relabel[static_cast<std::size_t>(u)], relabel[static_cast<std::size_t>(v)]);
    }
  }
  out.graph = make_graph(static_cast<std::int32_t>(out.original.size()), std::move(e));
  return out;
}

struct ComplexityResult {
  double log_tau = 0.0;
  std::int32_t n_giant = 0;
  double per_vertex = 0.0;
};

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& msg, std::int32_t pivot) : std::runtime_error(msg), pivot_(pivot) {}
  std::int32_t pivot() const noexcept { return pivot_; }

 private:
  std::int32_t pivot_;
};

inline constexpr std::int32_t kDenseCap = 4000;

/// log tau(G): Cholesky factorization of the Laplacian with row and column
/// `removed` deleted, summing the logs of the pivots.
inline ComplexityResult log_spanning_trees(const SparseGraph& g, std::int32_t removed = 0) {
  if (g.n < 1) throw std::domain_error("log_spanning_trees: graph has no vertices");
  if (removed < 0 || removed >= g.n) throw std::domain_error("log_spanning_trees: removed vertex out of range");
  ComplexityResult res;
  res.n_giant = g.n;
  const std::size_t m = static_cast<std::size_t>(g.n) - 1;
  if (m == 0) return res;
  auto index = [&](std::int32_t v) -> std::ptrdiff_t {
    if (v == removed) return -1;
    return v < removed ? v : v - 1;
  };
  std::vector<double> a(m * m, 0.0);
  double max_diag = 0.0;
  for (std::int32_t v = 0; v < g.n; ++v) {
    const auto i = index(v);
    if (i < 0) continue;
    a[static_cast<std::size_t>(i) * m + static_cast<std::size_t>(i)] = g.degree(v);
    max_diag = std::max(max_diag, static_cast<double>(g.degree(v)));
    g.for_each_neighbour(v, [&](std::int32_t w) {
      const auto j = index(w);
      if (j >= 0) a[static_cast<std::size_t>(i) * m + static_cast<std::size_t>(j)] = -1.0;
    });
  }
  const double threshold = 1e-10 * std::max(1.0, max_diag);
  double log_det = 0.0;
  // Row-oriented Cholesky on the lower triangle: L(i, j) uses rows i and j only.
  for (std::size_t i = 0; i < m; ++i) {
    double* li = &a[i * m];
    for (std::size_t j = 0; j < i; ++j) {
      const double* lj = &a[j * m];
      double s = li[j];
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / lj[j];
    }
    double d = li[i];
    for (std::size_t k = 0; k < i; ++k) d -= li[k] * li[k];
    if (!(d > threshold)) {
      throw FactorizationError("log_spanning_trees: nonpositive pivot at index " + std::to_string(i) +
                                   " (value " + std::to_string(d) + "); graph disconnected or factorization broke down",
                               static_cast<std::int32_t>(i));
    }
    li[i] = std::sqrt(d);
    log_det += std::log(d);
  }
  res.log_tau = log_det;
  res.per_vertex = log_det / static_cast<double>(g.n);
  return res;
}

struct SpanningOptions {
  unsigned threads = 1;
  std::int32_t dense_cap = kDenseCap;
};

/// Mean of log tau(giant) / |giant| over `reps` independent G(n, c/n) samples.
inline EstimateReport empirical_f(std::int32_t n, double c, std::int64_t reps, Key seed,
                                  const SpanningOptions& opt = {}) {
  detail::require_finite(c, "empirical_f");
  if (!(c > 1.0)) throw std::domain_error("empirical_f: c must exceed 1");
  if (n < 2) throw std::domain_error("empirical_f: n must be at least 2");
  if (n > opt.dense_cap) {
    throw std::domain_error("empirical_f: n = " + std::to_string(n) + " exceeds the dense factorization cap " +
                            std::to_string(opt.dense_cap));
  }
  if (reps < 1) throw std::domain_error("empirical_f: reps must be at least 1");
  if (c >= n) throw std::domain_error("empirical_f: c must be below n");
  Stopwatch clock;
  const Key stream = derive(seed, "spanning.empirical_f");
  std::vector<double> values(static_cast<std::size_t>(reps));
  std::vector<double> giants(static_cast<std::size_t>(reps));
  parallel_for(reps, opt.threads, [&](std::int64_t i) {
    const SparseGraph g = sample_gnp(n, c / n, derive(stream, static_cast<std::uint64_t>(i)));
    const Component giant = giant_component(g);
    const ComplexityResult r = log_spanning_trees(giant.graph);
    values[static_cast<std::size_t>(i)] = r.per_vertex;
    giants[static_cast<std::size_t>(i)] = static_cast<double>(r.n_giant);
  });
  const Summary s = summarize(values);
  EstimateReport r;
  r.quantity = "empirical_f";
  r.c = c;
  r.value = s.mean;
  r.std_error = s.std_error;
  r.n_samples = reps;
  r.seed = seed;
  r.diagnostics["n"] = n;
  r.diagnostics["mean_giant_fraction"] = summarize(giants).mean / n;
  r.wall_time = clock.seconds();
  return r;
}

inline void write_edge_list(std::ostream& os, const SparseGraph& g) {
  os << g.n << ' ' << g.edges.size() << '\n';
  for (const auto& [u, v] : g.edges) os << u << ' ' << v << '\n';
}

inline SparseGraph read_edge_list(std::istream& is) {
  std::int64_t n = 0, m = 0;
  if (!(is >> n >> m) || n < 0 || m < 0) throw std::runtime_error("read_edge_list: bad header");
  std::vector<std::pair<std::int32_t, std::int32_t>> e;
  e.reserve(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) {
    std::int64_t u = 0, v = 0;
    if (!(is >> u >> v)) throw std::runtime_error("read_edge_list: truncated at edge " + std::to_string(i));
    e.emplace_back(static_cast<std::int32_t>(u), static_cast<std::int32_t>(v));
  }
  return make_graph(static_cast<std::int32_t>(n), std::move(e));
}

}  // namespace gwtree

#endif  // GWTREE_SPANNING_HPP
