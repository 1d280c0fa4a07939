#ifndef GWTREE_DOMINATION_HPP
#define GWTREE_DOMINATION_HPP

// Stochastic domination between survival-conditioned Poisson trees.
//
// Q*_x is Poisson(x) conditioned to be positive and Q_x is Poisson(x). For
// mu > lambda, Q*_mu dominates Q*_lambda + Q_beta exactly when
// beta <= alpha(lambda, mu). Applying this to the number of infinite children
// at every type-I vertex, with finite subtrees matched by size, produces a
// coupling of PGW*(lambda) and PGW*(mu) under which the first embeds in the
// second.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "analytic.hpp"
#include "random.hpp"
#include "samplers.hpp"
#include "tree.hpp"

namespace gwtree {

namespace detail {

inline long double log_factorial(long double k) { return std::lgamma(k + 1.0L); }

/// a_k = e^{-beta}/(e^lambda - 1) ((lambda+beta)^k - beta^k)/k!, extended precision.
inline long double conv_pmf_ld(long double lambda, long double beta, std::int64_t k) {
  const long double kk = static_cast<long double>(k);
  const long double log_lead = -beta - std::log(std::expm1(lambda)) + kk * std::log(lambda + beta) - log_factorial(kk);
  long double ratio = 0.0L;  // (beta/(lambda+beta))^k
  if (beta > 0.0L) ratio = std::exp(kk * std::log(beta / (lambda + beta)));
  return std::exp(log_lead) * (1.0L - ratio);
}

/// b_k = mu^k / ((e^mu - 1) k!), the pmf of Q*_mu.
inline long double positive_poisson_pmf_ld(long double mu, std::int64_t k) {
  if (mu == 0.0L) return k == 1 ? 1.0L : 0.0L;
  const long double kk = static_cast<long double>(k);
  return std::exp(kk * std::log(mu) - std::log(std::expm1(mu)) - log_factorial(kk));
}

inline void check_positive_pair(double lambda, double mu, const char* what) {
  require_finite(lambda, what);
  require_finite(mu, what);
  if (!(lambda > 0.0) || !(mu > lambda)) throw std::domain_error(std::string(what) + ": requires mu > lambda > 0");
}

}  // namespace detail

/// P[Q*_lambda + Q_beta = k] for independent summands.
inline double conv_pmf(double lambda, double beta, std::int64_t k) {
  detail::require_finite(lambda, "conv_pmf");
  detail::require_finite(beta, "conv_pmf");
  if (k < 1) throw std::domain_error("conv_pmf: k must be positive");
  if (!(lambda > 0.0) || !(beta >= 0.0)) throw std::domain_error("conv_pmf: requires lambda > 0 and beta >= 0");
  return static_cast<double>(detail::conv_pmf_ld(lambda, beta, k));
}

inline double positive_poisson_pmf(double mu, std::int64_t k) {
  if (k < 1) throw std::domain_error("positive_poisson_pmf: k must be positive");
  return static_cast<double>(detail::positive_poisson_pmf_ld(mu, k));
}

/// Result of comparing the strict tails P[Q*_mu > k] and
/// P[Q*_lambda + Q_beta > k] for k = 1..kmax. (The tails at k = 0 are both 1.)
struct TailReport {
  double lambda = 0.0;
  double mu = 0.0;
  double beta = 0.0;
  std::int64_t kmax = 0;
  double min_margin = 0.0;                 // min_k P[Q*_mu > k] - P[Z > k]
  std::optional<std::int64_t> violated_at; // first k whose margin is below -eps*kmax
  // {k : a_k >= b_k} as computed; for beta = alpha it is the interval [1, k0].
  bool dominance_set_is_interval = true;
  std::int64_t dominance_set_end = 0;
};

inline TailReport verify_tail_domination(double lambda, double mu, double beta, std::int64_t kmax) {
  detail::check_positive_pair(lambda, mu, "verify_tail_domination");
  detail::require_finite(beta, "verify_tail_domination");
  if (!(beta >= 0.0)) throw std::domain_error("verify_tail_domination: beta must be non-negative");
  if (kmax < 50) throw std::domain_error("verify_tail_domination: kmax must be at least 50");

  // Extend the table until both pmfs are negligible so that the back-to-front
  // tail sums start from (numerically) zero.
  std::vector<long double> a{0.0L};
  std::vector<long double> b{0.0L};
  for (std::int64_t k = 1;; ++k) {
    a.push_back(detail::conv_pmf_ld(lambda, beta, k));
    b.push_back(detail::positive_poisson_pmf_ld(mu, k));
    if (k > kmax && a.back() < 1e-30L && b.back() < 1e-30L) break;
    if (k > 100000) throw std::runtime_error("verify_tail_domination: pmf tables did not decay");
  }
  const auto kend = static_cast<std::int64_t>(a.size()) - 1;
  std::vector<long double> tail_a(static_cast<std::size_t>(kend) + 2, 0.0L);
  std::vector<long double> tail_b(static_cast<std::size_t>(kend) + 2, 0.0L);
  for (std::int64_t k = kend; k >= 1; --k) {
    tail_a[static_cast<std::size_t>(k)] = tail_a[static_cast<std::size_t>(k) + 1] + a[static_cast<std::size_t>(k)];
    tail_b[static_cast<std::size_t>(k)] = tail_b[static_cast<std::size_t>(k) + 1] + b[static_cast<std::size_t>(k)];
  }

  TailReport r;
  r.lambda = lambda;
  r.mu = mu;
  r.beta = beta;
  r.kmax = kmax;
  const long double eps = static_cast<long double>(DBL_EPSILON) * static_cast<long double>(kmax);
  long double min_margin = INFINITY;
  for (std::int64_t k = 1; k <= kmax; ++k) {
    const long double margin = tail_b[static_cast<std::size_t>(k) + 1] - tail_a[static_cast<std::size_t>(k) + 1];
    min_margin = std::min(min_margin, margin);
    if (!r.violated_at && margin < -eps) r.violated_at = k;
  }
  r.min_margin = static_cast<double>(min_margin);

  // Membership a_k >= b_k up to rounding; a_1 = b_1 exactly when beta = alpha.
  auto in_set = [&](std::int64_t j) {
    return a[static_cast<std::size_t>(j)] >= b[static_cast<std::size_t>(j)] * (1.0L - 1e-12L);
  };
  std::int64_t k = 1;
  while (k <= kmax && in_set(k)) ++k;
  r.dominance_set_end = k - 1;
  for (; k <= kmax; ++k) {
    if (in_set(k)) r.dominance_set_is_interval = false;
  }
  return r;
}

inline TailReport verify_tail_domination(double lambda, double mu, std::int64_t kmax = 200) {
  return verify_tail_domination(lambda, mu, alpha(lambda, mu), kmax);
}

/// Quantile coupling of lo = Q*_lambda + Q_extra and hi = Q*_mu through a
/// shared uniform. With extra <= alpha(lambda, mu), hi >= lo on every draw.
class DominatedOffspring {
 public:
  struct Draw {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    std::int64_t positive_part = 0;  // the Q*_lambda summand of lo
    std::int64_t poisson_part = 0;   // the Q_extra summand of lo
  };

  DominatedOffspring(double lambda, double mu) : DominatedOffspring(lambda, mu, alpha(lambda, mu)) {}

  DominatedOffspring(double lambda, double mu, double extra) : lambda_(lambda), mu_(mu), extra_(extra) {
    if (!(lambda >= 0.0) || !(mu > lambda) || !std::isfinite(mu)) {
      throw std::domain_error("DominatedOffspring: requires mu > lambda >= 0");
    }
    if (!(extra >= 0.0) || extra > alpha(lambda, mu) * (1.0 + 1e-12)) {
      throw std::domain_error("DominatedOffspring: extra mass must lie in [0, alpha(lambda, mu)]");
    }
    long double ca = 0.0L;
    long double cb = 0.0L;
    cdf_lo_.push_back(0.0L);
    cdf_hi_.push_back(0.0L);
    for (std::int64_t k = 1;; ++k) {
      const long double ak = lambda == 0.0 ? poisson_ld(extra, k - 1) : detail::conv_pmf_ld(lambda, extra, k);
      const long double bk = detail::positive_poisson_pmf_ld(mu, k);
      ca += ak;
      cb += bk;
      cdf_lo_.push_back(ca);
      cdf_hi_.push_back(cb);
      if (k > 3 && ak < 1e-30L && bk < 1e-30L) break;
    }
  }

  Draw sample(Stream& rng) const {
    const long double u = rng.uniform();
    Draw d;
    d.lo = invert(cdf_lo_, u);
    // Guard against last-bit rounding where the two cdfs touch (k = 1 when
    // extra = alpha); the exact cdfs are ordered.
    d.hi = std::max(invert(cdf_hi_, u), d.lo);
    // Split lo into its two independent summands given their sum.
    if (lambda_ == 0.0) {
      d.positive_part = 1;
    } else {
      std::vector<long double> w(static_cast<std::size_t>(d.lo));
      long double total = 0.0L;
      for (std::int64_t j = 1; j <= d.lo; ++j) {
        w[static_cast<std::size_t>(j - 1)] = detail::positive_poisson_pmf_ld(lambda_, j) * poisson_ld(extra_, d.lo - j);
        total += w[static_cast<std::size_t>(j - 1)];
      }
      const long double v = rng.uniform() * total;
      long double acc = 0.0L;
      d.positive_part = d.lo;
      for (std::int64_t j = 1; j <= d.lo; ++j) {
        acc += w[static_cast<std::size_t>(j - 1)];
        if (v < acc) {
          d.positive_part = j;
          break;
        }
      }
    }
    d.poisson_part = d.lo - d.positive_part;
    return d;
  }

  double lambda() const noexcept { return lambda_; }
  double mu() const noexcept { return mu_; }
  double extra() const noexcept { return extra_; }

 private:
  static long double poisson_ld(long double mean, std::int64_t k) {
    if (mean == 0.0L) return k == 0 ? 1.0L : 0.0L;
    const long double kk = static_cast<long double>(k);
    return std::exp(-mean + kk * std::log(mean) - detail::log_factorial(kk));
  }

  static std::int64_t invert(const std::vector<long double>& cdf, long double u) {
    const auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), u);
    if (it == cdf.end()) return static_cast<std::int64_t>(cdf.size()) - 1;
    return static_cast<std::int64_t>(it - cdf.begin());
  }

  double lambda_;
  double mu_;
  double extra_;
  std::vector<long double> cdf_lo_;
  std::vector<long double> cdf_hi_;
};

/// One draw of the monotone coupling (lo, hi) with lo ~ Q*_lambda + Q_alpha and
/// hi ~ Q*_mu.
inline std::pair<std::int64_t, std::int64_t> sample_dominated_offspring(double lambda, double mu, Key seed) {
  detail::check_positive_pair(lambda, mu, "sample_dominated_offspring");
  Stream rng(seed);
  const auto d = DominatedOffspring(lambda, mu).sample(rng);
  return {d.lo, d.hi};
}

/// Greedy test of the <=_1 relation on the multisets of root-child subtree
/// sizes: an injection lo -> hi with hi size >= lo size exists iff the sorted
/// sequences dominate rank by rank.
inline bool check_le1(std::vector<std::int64_t> lo_sizes, std::vector<std::int64_t> hi_sizes) {
  if (lo_sizes.size() > hi_sizes.size()) return false;
  std::sort(lo_sizes.begin(), lo_sizes.end(), std::greater<>());
  std::sort(hi_sizes.begin(), hi_sizes.end(), std::greater<>());
  for (std::size_t i = 0; i < lo_sizes.size(); ++i) {
    if (hi_sizes[i] < lo_sizes[i]) return false;
  }
  return true;
}

inline std::vector<std::int64_t> child_sizes(const RootedTree& t, NodeId v) {
  std::vector<std::int64_t> s;
  const Node& n = t[v];
  if (n.first_child == kNoNode) return s;
  s.reserve(static_cast<std::size_t>(n.num_children));
  for (NodeId c = n.first_child; c < n.first_child + n.num_children; ++c) s.push_back(t[c].subtree_size);
  return s;
}

/// <=_1 between the roots of two trees whose subtree sizes are annotated
/// (see subtree_stats).
inline bool check_le1(const RootedTree& lo, const RootedTree& hi) {
  return check_le1(child_sizes(lo, RootedTree::root()), child_sizes(hi, RootedTree::root()));
}

/// Decomposition of root offspring in a coupled pair: finite subtrees of the
/// lo root of size k number Z_k + Z'_k, those of the hi root Z_k.
struct OffspringCouple {
  std::map<std::int64_t, std::int64_t> shared;  // Z_k
  std::map<std::int64_t, std::int64_t> extra;   // Z'_k
  std::int64_t n_inf_lo = 0;
  std::int64_t n_inf_hi = 0;

  std::int64_t extra_total() const {
    std::int64_t z = 0;
    for (auto [k, n] : extra) z += n;
    return z;
  }
  std::map<std::int64_t, std::int64_t> n_fin_lo() const {
    auto m = shared;
    for (auto [k, n] : extra) m[k] += n;
    return m;
  }
  const std::map<std::int64_t, std::int64_t>& n_fin_hi() const { return shared; }
};

struct CoupledPair {
  RootedTree lo;
  RootedTree hi;
  // lo id -> hi id. kNoNode inside finite lo subtrees that are matched to an
  // infinite hi branch: only the subtree root is placed there.
  std::vector<NodeId> embedding;
  // hi id -> lo id for type-I hi vertices whose growth is coupled to lo.
  std::vector<NodeId> partner;
  OffspringCouple root_couple;
  std::int64_t deferred_bushes = 0;
};

/// Inverse-cdf sampler over positive integer sizes with weights w_k.
class SizeSampler {
 public:
  SizeSampler() = default;

  template <typename Weight>
  explicit SizeSampler(Weight&& weight, std::int64_t max_size = 10000000) {
    cdf_.push_back(0.0L);
    long double total = 0.0L;
    for (std::int64_t k = 1; k <= max_size; ++k) {
      const long double w = weight(k);
      total += w;
      cdf_.push_back(total);
      if (k > 20 && w < 1e-18L * total) break;
    }
    total_ = total;
  }

  std::int32_t sample(Stream& rng) const {
    const long double u = rng.uniform() * total_;
    const auto it = std::upper_bound(cdf_.begin() + 1, cdf_.end(), u);
    if (it == cdf_.end()) return static_cast<std::int32_t>(cdf_.size() - 1);
    return static_cast<std::int32_t>(it - cdf_.begin());
  }

  long double total() const noexcept { return total_; }

 private:
  std::vector<long double> cdf_;
  long double total_ = 0.0L;
};

/// Recursive coupling of PGW*(lambda) (lo) and PGW*(mu) (hi), 1 < lambda < mu.
///
/// At each coupled pair of type-I vertices: the numbers of infinite children
/// come from DominatedOffspring(lambda theta(lambda), mu theta(mu)); finite
/// subtrees of size k are shared Z_k ~ Poisson(m_k(mu)) plus, on the lo side
/// only, Z'_k ~ Poisson(m_k(lambda) - m_k(mu)), where
/// m_k(x) = (x e^{-x})^k k^{k-1}/k! is the mean number of size-k root subtrees
/// of PGW(x). The Z' extra subtrees are thinned from the Poisson summand of
/// the lo draw, so hi has at least n_inf_lo + Z' infinite children. A finite
/// subtree of size k is a uniform rooted tree on k vertices.
class CoupledSampler {
 public:
  CoupledSampler(double lambda, double mu) : lo_model_(lambda), hi_model_(mu) {
    detail::check_positive_pair(lambda, mu, "CoupledSampler");
    if (!(lambda > 1.0)) throw std::domain_error("CoupledSampler: requires mu > lambda > 1");
    const GWParams& pl = lo_model_.params();
    const GWParams& pm = hi_model_.params();
    infinite_ = DominatedOffspring(lambda * pl.theta, mu * pm.theta);
    extra_mean_ = lambda * pl.q - mu * pm.q;
    thin_ = infinite_.extra() > 0.0 ? std::min(1.0, extra_mean_ / infinite_.extra()) : 0.0;
    shared_mean_ = mu * pm.q;
    shared_sizes_ = SizeSampler([mu](std::int64_t k) -> long double { return mean_subtree_count(mu, k); });
    extra_sizes_ = SizeSampler([lambda, mu](std::int64_t k) -> long double {
      const long double a = mean_subtree_count(lambda, k);
      const long double b = mean_subtree_count(mu, k);
      return std::max(0.0L, a - b);
    });
  }

  double lambda() const noexcept { return lo_model_.c(); }
  double mu() const noexcept { return hi_model_.c(); }
  const PgwStarModel& lo_model() const noexcept { return lo_model_; }
  const PgwStarModel& hi_model() const noexcept { return hi_model_; }
  /// lambda q(lambda) - mu q(mu): the mean of Z'.
  double extra_mean() const noexcept { return extra_mean_; }
  const DominatedOffspring& infinite_offspring() const noexcept { return infinite_; }

  struct Plan {
    std::int32_t n_inf_lo = 0;
    std::int32_t n_inf_hi = 0;
    std::vector<std::int32_t> shared;  // sizes of the Z shared finite subtrees
    std::vector<std::int32_t> extra;   // sizes of the Z' lo-only finite subtrees

    std::int32_t lo_children() const { return n_inf_lo + static_cast<std::int32_t>(shared.size() + extra.size()); }
    std::int32_t hi_children() const { return n_inf_hi + static_cast<std::int32_t>(shared.size()); }
  };

  /// Offspring plan of a coupled vertex pair, a pure function of the lo key.
  Plan plan(Key key) const {
    Stream rng(derive(key, kPlanTag));
    const auto d = infinite_.sample(rng);
    Plan p;
    p.n_inf_lo = static_cast<std::int32_t>(d.positive_part);
    p.n_inf_hi = static_cast<std::int32_t>(d.hi);
    const auto zprime = sample_binomial(rng, static_cast<std::uint64_t>(d.poisson_part), thin_);
    const auto z = sample_poisson(rng, shared_mean_);
    p.shared.reserve(z);
    for (std::uint64_t i = 0; i < z; ++i) p.shared.push_back(shared_sizes_.sample(rng));
    p.extra.reserve(zprime);
    for (std::uint64_t i = 0; i < zprime; ++i) p.extra.push_back(extra_sizes_.sample(rng));
    return p;
  }

  CoupledPair sample(std::int32_t depth, Key seed) const {
    if (depth < 1) throw std::domain_error("sample_coupled_trees: depth must be at least 1");
    CoupledPair pair;
    pair.lo.add_root(NodeType::Infinite, seed);
    pair.hi.add_root(NodeType::Infinite, derive(seed, kHiTag));
    const Plan p = plan(seed);
    pair.lo.mark_frontier(0, p.lo_children());
    pair.hi.mark_frontier(0, p.hi_children());
    pair.embedding = {0};
    pair.partner = {0};
    extend(pair, depth);
    subtree_stats(pair.lo);
    subtree_stats(pair.hi);
    return pair;
  }

  /// Expands every frontier type-I vertex (lo, and uncoupled hi) above `depth`.
  void extend(CoupledPair& pair, std::int32_t depth) const {
    bool changed = true;
    while (changed) {
      changed = false;
      for (NodeId v = 0; v < static_cast<NodeId>(pair.lo.size()); ++v) {
        if (pair.lo[v].frontier && pair.lo[v].depth < depth) {
          expand_lo(pair, v);
          changed = true;
        }
      }
      for (NodeId w = 0; w < static_cast<NodeId>(pair.hi.size()); ++w) {
        if (pair.hi[w].frontier && pair.hi[w].depth < depth) {
          expand_hi(pair, w);
          changed = true;
        }
      }
    }
    pair.lo.truncation_depth = depth;
    pair.hi.truncation_depth = depth;
  }

  /// Expands a coupled pair given its lo vertex.
  void expand_lo(CoupledPair& pair, NodeId v) const {
    const NodeId w = pair.embedding.at(static_cast<std::size_t>(v));
    if (w == kNoNode || pair.lo[v].type != NodeType::Infinite) {
      throw std::logic_error("CoupledSampler::expand_lo: vertex is not a coupled type-I vertex");
    }
    RootedTree& lo = pair.lo;
    RootedTree& hi = pair.hi;
    const Key key = lo[v].key;
    const Plan p = plan(key);
    const bool at_root = v == RootedTree::root();

    const NodeId lo_first = lo.add_children(v, p.lo_children(), NodeType::Infinite);
    const NodeId hi_first = hi.add_children(w, p.hi_children(), NodeType::Infinite);
    pair.embedding.resize(lo.size(), kNoNode);
    pair.partner.resize(hi.size(), kNoNode);

    for (std::int32_t i = 0; i < p.lo_children(); ++i) lo[lo_first + i].key = derive(key, static_cast<std::uint64_t>(i));
    const Key hi_key = derive(key, kHiTag);
    for (std::int32_t j = 0; j < p.hi_children(); ++j) hi[hi_first + j].key = derive(hi_key, static_cast<std::uint64_t>(j));

    // Infinite children: the first n_inf_lo are coupled pairs.
    for (std::int32_t j = 0; j < p.n_inf_lo; ++j) {
      const NodeId lc = lo_first + j;
      const NodeId hc = hi_first + j;
      const Plan cp = plan(lo[lc].key);
      lo.mark_frontier(lc, cp.lo_children());
      hi.mark_frontier(hc, cp.hi_children());
      pair.embedding[static_cast<std::size_t>(lc)] = hc;
      pair.partner[static_cast<std::size_t>(hc)] = lc;
    }
    for (std::int32_t j = p.n_inf_lo; j < p.n_inf_hi; ++j) {
      const NodeId hc = hi_first + j;
      hi.mark_frontier(hc, hi_model_.total_count(hi[hc].key));
    }

    // Shared finite subtrees: identical copies.
    const auto nshared = static_cast<std::int32_t>(p.shared.size());
    for (std::int32_t i = 0; i < nshared; ++i) {
      const NodeId lc = lo_first + p.n_inf_lo + i;
      const NodeId hc = hi_first + p.n_inf_hi + i;
      grow_finite(lo, lc, p.shared[static_cast<std::size_t>(i)]);
      std::vector<std::pair<NodeId, NodeId>> map;
      copy_subtree(lo, lc, hi, hc, map);
      pair.embedding.resize(lo.size(), kNoNode);
      pair.partner.resize(hi.size(), kNoNode);
      for (auto [a, b] : map) pair.embedding[static_cast<std::size_t>(a)] = b;
    }

    // Extra finite subtrees of lo, each placed on its own spare infinite hi child.
    for (std::size_t i = 0; i < p.extra.size(); ++i) {
      const NodeId lc = lo_first + p.n_inf_lo + nshared + static_cast<NodeId>(i);
      grow_finite(lo, lc, p.extra[i]);
      pair.embedding.resize(lo.size(), kNoNode);
      pair.embedding[static_cast<std::size_t>(lc)] = hi_first + p.n_inf_lo + static_cast<NodeId>(i);
      ++pair.deferred_bushes;
    }
    pair.embedding.resize(lo.size(), kNoNode);
    pair.partner.resize(hi.size(), kNoNode);

    if (at_root) {
      OffspringCouple oc;
      oc.n_inf_lo = p.n_inf_lo;
      oc.n_inf_hi = p.n_inf_hi;
      for (auto k : p.shared) ++oc.shared[k];
      for (auto k : p.extra) ++oc.extra[k];
      pair.root_couple = oc;
    }
  }

  /// Expands a hi frontier vertex: through its lo partner when coupled,
  /// otherwise as an independent PGW*(mu) vertex.
  void expand_hi(CoupledPair& pair, NodeId w) const {
    const NodeId v = pair.partner.at(static_cast<std::size_t>(w));
    if (v != kNoNode) {
      expand_lo(pair, v);
      return;
    }
    hi_model_.expand(pair.hi, w);
    pair.partner.resize(pair.hi.size(), kNoNode);
  }

  /// Walk expanders (see killed_walk_visits): grow one side on demand.
  struct LoExpander {
    const CoupledSampler* sampler;
    CoupledPair* pair;
    void operator()(RootedTree&, NodeId v) const { sampler->expand_lo(*pair, v); }
  };
  struct HiExpander {
    const CoupledSampler* sampler;
    CoupledPair* pair;
    void operator()(RootedTree&, NodeId w) const { sampler->expand_hi(*pair, w); }
  };

 private:
  static constexpr std::uint64_t kPlanTag = 0x506c616eULL;
  static constexpr std::uint64_t kHiTag = 0x4869ULL;
  static constexpr std::uint64_t kBushTag = 0x42757368ULL;

  static void grow_finite(RootedTree& t, NodeId at, std::int32_t size) {
    Stream rng(derive(t[at].key, kBushTag));
    const auto adj = uniform_labelled_tree(size, rng);
    const auto root = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(size)));
    attach_tree(t, at, adj, root, NodeType::Finite);
  }

  PgwStarModel lo_model_;
  PgwStarModel hi_model_;
  DominatedOffspring infinite_{0.0, 1.0, 0.0};
  double extra_mean_ = 0.0;
  double thin_ = 0.0;
  double shared_mean_ = 0.0;
  SizeSampler shared_sizes_;
  SizeSampler extra_sizes_;
};

inline CoupledPair sample_coupled_trees(double lambda, double mu, std::int32_t depth, Key seed) {
  return CoupledSampler(lambda, mu).sample(depth, seed);
}

struct CouplingAudit {
  bool embedding_valid = true;   // root -> root, parents commute, injective, types respected
  std::int64_t le1_checked = 0;  // coupled vertices where <=_1 was tested
  std::int64_t le1_failed = 0;
  std::int64_t mapped = 0;
  std::int64_t deferred = 0;     // lo vertices inside finite subtrees placed on infinite hi branches
  std::string first_problem;
};

/// Checks the explicit embedding of a coupled pair and the <=_1 relation at
/// every expanded lo vertex whose children are all mapped.
inline CouplingAudit audit_coupling(CoupledPair& pair) {
  subtree_stats(pair.lo);
  subtree_stats(pair.hi);
  CouplingAudit a;
  auto fail = [&a](std::string why) {
    a.embedding_valid = false;
    if (a.first_problem.empty()) a.first_problem = std::move(why);
  };
  const RootedTree& lo = pair.lo;
  const RootedTree& hi = pair.hi;
  if (pair.embedding.size() != lo.size()) fail("embedding size mismatch");
  if (pair.embedding.empty() || pair.embedding[0] != 0) fail("root not mapped to root");
  std::vector<char> used(hi.size(), 0);
  for (NodeId v = 0; v < static_cast<NodeId>(lo.size()) && v < static_cast<NodeId>(pair.embedding.size()); ++v) {
    const NodeId w = pair.embedding[static_cast<std::size_t>(v)];
    if (w == kNoNode) {
      ++a.deferred;
      continue;
    }
    ++a.mapped;
    if (w < 0 || w >= static_cast<NodeId>(hi.size())) {
      fail("image out of range at " + std::to_string(v));
      continue;
    }
    if (used[static_cast<std::size_t>(w)]) fail("embedding not injective at " + std::to_string(v));
    used[static_cast<std::size_t>(w)] = 1;
    if (v != 0) {
      const NodeId pv = lo[v].parent;
      if (pair.embedding[static_cast<std::size_t>(pv)] != hi[w].parent) {
        fail("parent of image differs from image of parent at " + std::to_string(v));
      }
    }
    if (lo[v].type == NodeType::Infinite && hi[w].type != NodeType::Infinite) {
      fail("type-I vertex mapped to finite vertex at " + std::to_string(v));
    }
    if (hi[w].subtree_size < lo[v].subtree_size) fail("image subtree smaller at " + std::to_string(v));
  }
  for (NodeId v = 0; v < static_cast<NodeId>(lo.size()); ++v) {
    const Node& n = lo[v];
    const NodeId w = pair.embedding[static_cast<std::size_t>(v)];
    if (w == kNoNode || n.first_child == kNoNode) continue;
    bool all_mapped = true;
    for (NodeId c = n.first_child; c < n.first_child + n.num_children; ++c) {
      all_mapped = all_mapped && pair.embedding[static_cast<std::size_t>(c)] != kNoNode;
    }
    if (!all_mapped) continue;
    ++a.le1_checked;
    if (!check_le1(child_sizes(lo, v), child_sizes(hi, w))) ++a.le1_failed;
  }
  return a;
}

/// Writes both trees and the embedding in the text tree format:
///   # lo / <tree> / # hi / <tree> / # embedding <count> / "<lo-id> <hi-id>" lines.
inline void write_coupled_pair(std::ostream& os, CoupledPair& pair) {
  os << "# lo\n";
  write_tree(os, pair.lo);
  os << "# hi\n";
  write_tree(os, pair.hi);
  std::size_t mapped = 0;
  for (NodeId w : pair.embedding) mapped += w != kNoNode ? 1 : 0;
  os << "# embedding " << mapped << '\n';
  for (std::size_t v = 0; v < pair.embedding.size(); ++v) {
    if (pair.embedding[v] != kNoNode) os << v << ' ' << pair.embedding[v] << '\n';
  }
}

}  // namespace gwtree

#endif  // GWTREE_DOMINATION_HPP
