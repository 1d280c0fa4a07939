#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gwtree/analytic.hpp"
#include "gwtree/spanning.hpp"

using namespace gwtree;

namespace {

// Counts spanning trees by trying every (n-1)-subset of edges.
std::int64_t brute_force_spanning_trees(const SparseGraph& g) {
  const auto m = static_cast<int>(g.edges.size());
  std::int64_t count = 0;
  for (std::uint32_t mask = 0; mask < (1U << m); ++mask) {
    if (__builtin_popcount(mask) != g.n - 1) continue;
    std::vector<int> parent(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) parent[static_cast<std::size_t>(i)] = i;
    auto find = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
      return x;
    };
    bool acyclic = true;
    for (int e = 0; e < m && acyclic; ++e) {
      if (!(mask >> e & 1U)) continue;
      const int a = find(g.edges[static_cast<std::size_t>(e)].first), b = find(g.edges[static_cast<std::size_t>(e)].second);
      if (a == b) acyclic = false;
      parent[static_cast<std::size_t>(a)] = b;
    }
    count += acyclic ? 1 : 0;
  }
  return count;
}

}  // namespace

TEST(Gnp, Extremes) {
  const SparseGraph empty = sample_gnp(50, 0.0, 1);
  EXPECT_EQ(empty.num_edges(), 0);
  const SparseGraph full = sample_gnp(30, 1.0, 1);
  EXPECT_EQ(full.num_edges(), 30 * 29 / 2);
  EXPECT_EQ(sample_gnp(1, 0.5, 1).num_edges(), 0);
  EXPECT_THROW(sample_gnp(0, 0.5, 1), std::domain_error);
  EXPECT_THROW(sample_gnp(5, 1.5, 1), std::domain_error);
}

TEST(Gnp, EdgeCountMeanAndStructure) {
  const int n = 3000;
  const double p = 3.0 / n;
  const int reps = 200;
  double sum = 0.0;
  for (int i = 0; i < reps; ++i) {
    const SparseGraph g = sample_gnp(n, p, derive(derive(1, "test.gnp"), static_cast<std::uint64_t>(i)));
    sum += static_cast<double>(g.num_edges());
    if (i == 0) {
      for (auto [u, v] : g.edges) {
        ASSERT_LT(u, v);
        ASSERT_LT(v, n);
      }
      std::int64_t deg = 0;
      for (int v = 0; v < n; ++v) deg += g.degree(v);
      ASSERT_EQ(deg, 2 * g.num_edges());
    }
  }
  const double pairs = n * (n - 1) / 2.0;
  const double mean = pairs * p;
  const double sd = std::sqrt(pairs * p * (1 - p) / reps);
  EXPECT_NEAR(sum / reps, mean, 3 * sd);
}

TEST(Gnp, PairFrequenciesAreUniform) {
  // Each of the 6 pairs on 4 vertices should appear with probability p.
  const int reps = 60000;
  std::vector<double> hits(16, 0.0);
  for (int i = 0; i < reps; ++i) {
    const SparseGraph g = sample_gnp(4, 0.3, derive(2, static_cast<std::uint64_t>(i)));
    for (auto [u, v] : g.edges) hits[static_cast<std::size_t>(u * 4 + v)] += 1.0;
  }
  for (int u = 0; u < 4; ++u)
    for (int v = u + 1; v < 4; ++v)
      EXPECT_NEAR(hits[static_cast<std::size_t>(u * 4 + v)] / reps, 0.3, 4 * std::sqrt(0.21 / reps));
}

TEST(Giant, TieBreakAndIdentity) {
  const SparseGraph two = make_graph(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  const Component c = giant_component(two);
  EXPECT_EQ(c.original, (std::vector<std::int32_t>{0, 1, 2}));
  EXPECT_EQ(c.graph.num_edges(), 3);
  const SparseGraph tri_high = make_graph(6, {{3, 4}, {4, 5}, {3, 5}, {0, 1}});
  EXPECT_EQ(giant_component(tri_high).original, (std::vector<std::int32_t>{3, 4, 5}));
  const SparseGraph k5 = complete_graph(5);
  const Component same = giant_component(k5);
  EXPECT_EQ(same.graph.edges, k5.edges);
  EXPECT_EQ(same.graph.n, 5);
}

TEST(Giant, FractionIsSurvivalProbability) {
  const int n = 5000, reps = 100;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < reps; ++i) {
    const SparseGraph g = sample_gnp(n, 2.0 / n, derive(derive(3, "test.giant"), static_cast<std::uint64_t>(i)));
    const double f = static_cast<double>(giant_component(g).graph.n) / n;
    sum += f;
    sq += f * f;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sq / reps - mean * mean) / reps);
  EXPECT_NEAR(mean, extinction_prob(2.0).theta, 3 * se);
}

TEST(LogSpanningTrees, SmallGraphs) {
  EXPECT_NEAR(log_spanning_trees(complete_graph(3)).log_tau, std::log(3.0), 1e-13);
  EXPECT_NEAR(log_spanning_trees(complete_graph(8)).log_tau, 6 * std::log(8.0), 1e-12);
  EXPECT_EQ(brute_force_spanning_trees(complete_graph(4)), 16);
  EXPECT_NEAR(std::exp(log_spanning_trees(complete_graph(4)).log_tau), 16.0, 1e-11);
  EXPECT_EQ(log_spanning_trees(complete_graph(1)).log_tau, 0.0);
  const SparseGraph path = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  EXPECT_NEAR(log_spanning_trees(path).log_tau, 0.0, 1e-14);
  const SparseGraph cycle = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  EXPECT_NEAR(log_spanning_trees(cycle).log_tau, std::log(5.0), 1e-13);
  EXPECT_EQ(brute_force_spanning_trees(cycle), 5);
}

TEST(LogSpanningTrees, CompleteGraphsAndRowChoice) {
  for (int n = 3; n <= 64; ++n) {
    const SparseGraph k = complete_graph(n);
    const ComplexityResult r = log_spanning_trees(k);
    EXPECT_NEAR(r.log_tau, (n - 2) * std::log(static_cast<double>(n)), 1e-8 * n);
    EXPECT_NEAR(log_spanning_trees(k, n - 1).log_tau, r.log_tau, 1e-8 * n);
    EXPECT_DOUBLE_EQ(r.per_vertex, r.log_tau / n);
  }
  const SparseGraph g = giant_component(sample_gnp(400, 3.0 / 400, 5)).graph;
  const double base = log_spanning_trees(g).log_tau;
  for (int removed : {1, g.n / 2, g.n - 1}) EXPECT_NEAR(log_spanning_trees(g, removed).log_tau, base, 1e-8 * g.n);
}

TEST(LogSpanningTrees, DisconnectedReportsPivot) {
  const SparseGraph g = make_graph(4, {{0, 1}, {2, 3}});
  try {
    log_spanning_trees(g);
    FAIL() << "expected a factorization error";
  } catch (const FactorizationError& e) {
    EXPECT_EQ(e.pivot(), 2);
    EXPECT_NE(std::string(e.what()).find("index 2"), std::string::npos);
  }
}

TEST(LogSpanningTrees, SampledGiantsAreSane) {
  for (Key s = 0; s < 10; ++s) {
    const SparseGraph g = giant_component(sample_gnp(600, 3.0 / 600, derive(s, "test.sane"))).graph;
    const ComplexityResult r = log_spanning_trees(g);
    ASSERT_TRUE(std::isfinite(r.per_vertex));
    EXPECT_GE(r.per_vertex, 0.0);
    const double mean_degree = 2.0 * static_cast<double>(g.num_edges()) / g.n;
    EXPECT_LE(r.per_vertex, static_cast<double>(g.num_edges()) / g.n * std::log(2.0) + std::log(mean_degree));
  }
}

TEST(EmpiricalF, DeterministicAndMonotone) {
  const auto a = empirical_f(300, 3.0, 3, 9);
  const auto b = empirical_f(300, 3.0, 3, 9);
  EXPECT_EQ(a.value, b.value);
  SpanningOptions opt;
  opt.threads = 2;
  EXPECT_EQ(empirical_f(300, 3.0, 3, 9, opt).value, a.value);
  const auto lo = empirical_f(800, 2.0, 6, 4);
  const auto hi = empirical_f(800, 4.0, 6, 4);
  EXPECT_GT(hi.value - lo.value, 3 * std::hypot(hi.std_error, lo.std_error));
  EXPECT_THROW(empirical_f(5000, 3.0, 1, 1), std::domain_error);
  EXPECT_THROW(empirical_f(100, 1.0, 1, 1), std::domain_error);
  EXPECT_THROW(empirical_f(100, 2.0, 0, 1), std::domain_error);
}

TEST(EdgeList, RoundTrip) {
  const SparseGraph g = sample_gnp(50, 0.1, 6);
  std::stringstream ss;
  write_edge_list(ss, g);
  const SparseGraph h = read_edge_list(ss);
  EXPECT_EQ(h.n, g.n);
  EXPECT_EQ(h.edges, g.edges);
  std::stringstream bad("3 2\n0 1\n");
  EXPECT_THROW(read_edge_list(bad), std::runtime_error);
  std::stringstream loop("3 1\n1 1\n");
  EXPECT_THROW(read_edge_list(loop), std::domain_error);
}
