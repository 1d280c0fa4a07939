#ifndef GWTREE_WALK_HPP
#define GWTREE_WALK_HPP

// Simple random walk on rooted trees: exact return probabilities p_k(o; T),
// the generating function V(s, T, o), killed-walk root visits, and Monte Carlo
// integrals of these quantities against PGW*(c).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "estimate.hpp"
#include "random.hpp"
#include "samplers.hpp"
#include "tree.hpp"

namespace gwtree {

/// Strict: the tree must be specified deep enough for every requested p_k to
/// be exact. AllowFrontier: mass entering unmaterialized children is dropped,
/// so p_k beyond exact_upto is a lower bound.
enum class Truncation { Strict, AllowFrontier };

struct ReturnProfile {
  std::vector<double> probs;  // probs[k-1] = p_k, k = 1..K
  std::int32_t K = 0;
  // Largest k for which the truncation cannot affect p_k: 2 * frontier depth,
  // or K when the tree has no frontier.
  std::int32_t exact_upto = 0;

  double p(std::int32_t k) const {
    if (k == 0) return 1.0;
    return probs.at(static_cast<std::size_t>(k - 1));
  }
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Walk distribution iterated over the materialized vertices, restricted at
/// step t to depth <= min(t, K - t): no k-step return path goes deeper than k/2.
inline ReturnProfile return_probs(const RootedTree& t, std::int32_t K,
                                  Truncation policy = Truncation::Strict) {
  if (K < 2) throw std::domain_error("return_probs: K must be at least 2");
  if (t.empty() || t.degree(RootedTree::root()) == 0) {
    throw std::domain_error("return_probs: root has no neighbours");
  }
  const auto frontier = t.frontier_depth();
  const std::int32_t needed = (K + 1) / 2;
  if (policy == Truncation::Strict && frontier && *frontier < needed) {
    throw PreconditionError("return_probs: K = " + std::to_string(K) + " requires the tree to be specified to depth " +
                            std::to_string(needed) + ", frontier is at depth " + std::to_string(*frontier));
  }

  // Bucket vertices by depth, keeping only those that can matter.
  const std::int32_t max_depth = K / 2;
  std::vector<std::size_t> count(static_cast<std::size_t>(max_depth) + 2, 0);
  for (const Node& n : t.nodes()) {
    if (n.depth <= max_depth) ++count[static_cast<std::size_t>(n.depth) + 1];
  }
  for (std::size_t d = 1; d < count.size(); ++d) count[d] += count[d - 1];
  std::vector<NodeId> by_depth(count.back());
  {
    std::vector<std::size_t> fill(count.begin(), count.end() - 1);
    for (NodeId id = 0; id < static_cast<NodeId>(t.size()); ++id) {
      const auto d = t[id].depth;
      if (d <= max_depth) by_depth[fill[static_cast<std::size_t>(d)]++] = id;
    }
  }
  // Nodes with depth <= d occupy by_depth[0, count[d + 1]).
  auto upto = [&](std::int32_t d) { return count[static_cast<std::size_t>(std::min(d, max_depth)) + 1]; };

  std::vector<double> cur(t.size(), 0.0);
  std::vector<double> nxt(t.size(), 0.0);
  cur[0] = 1.0;

  ReturnProfile prof;
  prof.K = K;
  prof.exact_upto = frontier ? 2 * *frontier : K;
  prof.probs.resize(static_cast<std::size_t>(K));
  for (std::int32_t step = 1; step <= K; ++step) {
    const std::int32_t src_lim = std::min(step - 1, K - step + 1);
    const std::int32_t dst_lim = std::min(step, K - step);
    const std::size_t end = upto(src_lim);
    for (std::size_t i = 0; i < end; ++i) {
      const NodeId y = by_depth[i];
      const double m = cur[static_cast<std::size_t>(y)];
      if (m == 0.0) continue;
      cur[static_cast<std::size_t>(y)] = 0.0;
      const Node& n = t[y];
      const double share = m / static_cast<double>(t.degree(y));
      if (n.parent != kNoNode && n.depth - 1 <= dst_lim) nxt[static_cast<std::size_t>(n.parent)] += share;
      if (n.first_child != kNoNode && n.depth + 1 <= dst_lim) {
        for (NodeId c = n.first_child; c < n.first_child + n.num_children; ++c) nxt[static_cast<std::size_t>(c)] += share;
      }
    }
    prof.probs[static_cast<std::size_t>(step - 1)] = nxt[0];
    cur.swap(nxt);
  }
  return prof;
}

inline double return_sum(const ReturnProfile& prof) {
  double s = 0.0;
  for (std::int32_t k = 1; k <= prof.K; ++k) s += prof.p(k) / static_cast<double>(k);
  return s;
}

/// Sum_{k=1..K} p_k / k.
inline double return_sum(const RootedTree& t, std::int32_t K, Truncation policy = Truncation::Strict) {
  return return_sum(return_probs(t, K, policy));
}

struct GreenValue {
  double value = 0.0;
  double truncation_bound = 0.0;  // s^K / (1 - s) bounds the omitted terms
};

/// V(s, T, o) = sum_{k>=0} p_k s^k truncated at k = K.
inline GreenValue green_value(const RootedTree& t, double s, std::int32_t K,
                              Truncation policy = Truncation::Strict) {
  if (!(s > 0.0 && s < 1.0)) throw std::domain_error("green_value: s must lie in (0, 1)");
  const ReturnProfile prof = return_probs(t, K, policy);
  GreenValue g;
  double sk = 1.0;
  g.value = 1.0;
  for (std::int32_t k = 1; k <= K; ++k) {
    sk *= s;
    g.value += prof.p(k) * sk;
  }
  g.truncation_bound = std::pow(s, K) / (1.0 - s);
  return g;
}

/// Depth below which a killed walk dies with probability at least 1 - 1e-6.
inline std::int32_t killed_walk_depth_guard(double s) {
  return static_cast<std::int32_t>(std::ceil(std::log(1e6) / std::log(1.0 / s)));
}

namespace detail {

struct NoExpansion {
  void operator()(RootedTree&, NodeId) const {
    throw std::runtime_error("killed_walk_visits: walk reached the tree frontier");
  }
};

}  // namespace detail

/// Number of visits X >= 1 to the root of a walk that survives each step with
/// probability s; E[X] = V(s, T, o). Unmaterialized vertices are grown on
/// demand by `expand(tree, vertex)`.
template <typename Expander>
std::int64_t killed_walk_visits(RootedTree& t, double s, Key seed, Expander&& expand) {
  if (!(s > 0.0 && s < 1.0)) throw std::domain_error("killed_walk_visits: s must lie in (0, 1)");
  if (t.empty() || t.degree(RootedTree::root()) == 0) {
    throw std::domain_error("killed_walk_visits: root has no neighbours");
  }
  Stream rng(seed);
  NodeId x = RootedTree::root();
  std::int64_t visits = 1;
  while (rng.uniform() < s) {
    const std::int32_t deg = t.degree(x);
    auto j = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(deg)));
    if (t[x].parent != kNoNode) {
      if (j == 0) {
        x = t[x].parent;
        if (x == RootedTree::root()) ++visits;
        continue;
      }
      --j;
    }
    if (t[x].first_child == kNoNode) expand(t, x);
    x = t[x].first_child + j;
  }
  return visits;
}

/// Killed walk on a fixed tree. Requires the frontier (if any) to lie at depth
/// >= killed_walk_depth_guard(s).
inline std::int64_t killed_walk_visits(RootedTree& t, double s, Key seed) {
  if (!(s > 0.0 && s < 1.0)) throw std::domain_error("killed_walk_visits: s must lie in (0, 1)");
  const auto frontier = t.frontier_depth();
  const std::int32_t guard = killed_walk_depth_guard(s);
  if (frontier && *frontier < guard) {
    throw PreconditionError("killed_walk_visits: s = " + std::to_string(s) + " requires depth >= " +
                            std::to_string(guard) + ", frontier is at depth " + std::to_string(*frontier));
  }
  return killed_walk_visits(t, s, seed, detail::NoExpansion{});
}

struct WalkOptions {
  unsigned threads = 1;
  // Trees are grown level by level towards depth K/2 but stop after the first
  // level that reaches this many vertices. p_k is exact for k <= 2 * reached
  // depth and a lower bound beyond.
  std::int64_t node_budget = 1000;
};

namespace detail {

struct ReturnSample {
  double sum = 0.0;
  std::int32_t exact_upto = 0;
  std::int64_t nodes = 0;
};

inline ReturnSample return_sample(const PgwStarModel& model, std::int32_t K, std::int64_t budget, Key key,
                                  ReturnProfile* profile = nullptr) {
  const RootedTree tree = sample_pgw_star_budgeted(model, K / 2, budget, key);
  ReturnProfile prof = return_probs(tree, K, Truncation::AllowFrontier);
  ReturnSample r;
  r.sum = return_sum(prof);
  r.exact_upto = std::min(prof.exact_upto, K);
  r.nodes = static_cast<std::int64_t>(tree.size());
  if (profile != nullptr) *profile = std::move(prof);
  return r;
}

inline void check_walk_args(double c, std::int32_t K, std::int64_t n, const char* what) {
  require_finite(c, what);
  if (!(c > 1.0)) throw std::domain_error(std::string(what) + ": c must exceed 1");
  if (K < 20 || K % 2 != 0) throw std::domain_error(std::string(what) + ": K must be even and at least 20");
  if (n < 2) throw std::domain_error(std::string(what) + ": need at least 2 samples");
}

}  // namespace detail

/// Monte Carlo estimate of the PGW*(c) integral of sum_{k<=K} p_k(o;T)/k.
inline EstimateReport estimate_return_integral(double c, std::int32_t K, std::int64_t n_samples, Key seed,
                                               const WalkOptions& opt = {}) {
  detail::check_walk_args(c, K, n_samples, "estimate_return_integral");
  Stopwatch clock;
  const PgwStarModel model(c);
  const Key stream = derive(seed, "walk.estimate_return_integral");
  std::vector<double> values(static_cast<std::size_t>(n_samples));
  std::vector<detail::ReturnSample> samples(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, opt.threads, [&](std::int64_t i) {
    samples[static_cast<std::size_t>(i)] =
        detail::return_sample(model, K, opt.node_budget, derive(stream, static_cast<std::uint64_t>(i)));
    values[static_cast<std::size_t>(i)] = samples[static_cast<std::size_t>(i)].sum;
  });
  const Summary s = summarize(values);
  EstimateReport r;
  r.quantity = "return_integral";
  r.c = c;
  r.value = s.mean;
  r.std_error = s.std_error;
  r.n_samples = n_samples;
  r.K = K;
  r.depth = K / 2;
  r.seed = seed;
  std::int32_t min_exact = K;
  double truncated = 0.0;
  std::vector<double> nodes(samples.size());
  std::vector<double> exact(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    min_exact = std::min(min_exact, samples[i].exact_upto);
    truncated += samples[i].exact_upto < K ? 1.0 : 0.0;
    nodes[i] = static_cast<double>(samples[i].nodes);
    exact[i] = static_cast<double>(samples[i].exact_upto);
  }
  r.diagnostics["node_budget"] = static_cast<double>(opt.node_budget);
  r.diagnostics["min_exact_upto"] = min_exact;
  r.diagnostics["mean_exact_upto"] = summarize(exact).mean;
  r.diagnostics["truncated_fraction"] = truncated / static_cast<double>(n_samples);
  r.diagnostics["mean_nodes"] = summarize(nodes).mean;
  r.wall_time = clock.seconds();
  return r;
}

/// f(c) estimate: exact E[log deg(o)] minus the Monte Carlo return integral.
/// Dropping terms k > K only raises the estimate.
inline EstimateReport estimate_f(double c, std::int32_t K, std::int64_t n_samples, Key seed,
                                 const WalkOptions& opt = {}) {
  detail::check_walk_args(c, K, n_samples, "estimate_f");
  EstimateReport r = estimate_return_integral(c, K, n_samples, seed, opt);
  const double log_degree = expected_log_degree(extinction_prob(c));
  r.diagnostics["return_integral"] = r.value;
  r.diagnostics["expected_log_degree"] = log_degree;
  r.quantity = "f";
  r.value = log_degree - r.value;
  return r;
}

struct DecayRow {
  std::int32_t k = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct DecayTable {
  double c = 0.0;
  std::int32_t K = 0;
  std::int64_t n_samples = 0;
  Key seed = 0;
  std::vector<DecayRow> rows;  // even k only; odd k vanish
  // Least squares log pbar_k ~ intercept + slope * k^{1/6} over rows with pbar_k > 0.
  double fit_slope = 0.0;
  double fit_intercept = 0.0;
  std::int32_t min_exact_upto = 0;
};

/// Per-k mean of p_k(o;T) over PGW*(c) samples, with a stretched-exponential
/// fit. Diagnostic only: the decay constants are not known explicitly.
inline DecayTable pbar_decay_diagnostic(double c, std::int32_t K, std::int64_t n_samples, Key seed,
                                        const WalkOptions& opt = {}) {
  detail::check_walk_args(c, K, n_samples, "pbar_decay_diagnostic");
  const PgwStarModel model(c);
  const Key stream = derive(seed, "walk.pbar_decay");
  const std::size_t rows = static_cast<std::size_t>(K / 2);
  std::vector<std::vector<double>> per_k(rows, std::vector<double>(static_cast<std::size_t>(n_samples)));
  std::vector<std::int32_t> exact(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, opt.threads, [&](std::int64_t i) {
    ReturnProfile prof;
    const auto s = detail::return_sample(model, K, opt.node_budget, derive(stream, static_cast<std::uint64_t>(i)), &prof);
    exact[static_cast<std::size_t>(i)] = s.exact_upto;
    for (std::size_t j = 0; j < rows; ++j) {
      per_k[j][static_cast<std::size_t>(i)] = prof.p(2 * static_cast<std::int32_t>(j + 1));
    }
  });
  DecayTable table;
  table.c = c;
  table.K = K;
  table.n_samples = n_samples;
  table.seed = seed;
  table.min_exact_upto = *std::min_element(exact.begin(), exact.end());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double m = 0.0;
  for (std::size_t j = 0; j < rows; ++j) {
    const Summary s = summarize(per_k[j]);
    const auto k = 2 * static_cast<std::int32_t>(j + 1);
    table.rows.push_back({k, s.mean, s.std_error});
    if (s.mean > 0.0) {
      const double x = std::pow(static_cast<double>(k), 1.0 / 6.0);
      const double y = std::log(s.mean);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      m += 1.0;
    }
  }
  if (m >= 2.0) {
    table.fit_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    table.fit_intercept = (sy - table.fit_slope * sx) / m;
  }
  return table;
}

}  // namespace gwtree

#endif  // GWTREE_WALK_HPP
