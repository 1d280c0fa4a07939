#ifndef GWTREE_ANALYTIC_HPP
#define GWTREE_ANALYTIC_HPP

// Closed-form scalar quantities of Poisson Galton-Watson trees: extinction
// probability, the Borel law, the root-degree law of the survival-conditioned
// tree, bounds on the spanning-tree entropy f(c) and its derivative.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gwtree {

/// Branching parameter together with its extinction/survival probabilities.
struct GWParams {
  double c = 0.0;
  double q = 0.0;      // extinction probability, smallest root of q = exp(-c(1-q))
  double theta = 0.0;  // survival probability 1 - q
};

struct BoundsRecord {
  double c = 0.0;
  double f_lower = 0.0;
  double f_upper = 0.0;
  double fprime_lower = 0.0;
  int kmax = 0;  // last series index actually summed
};

namespace detail {

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite input");
}

/// Sums term(k) for k = first, first+1, ... Stops once k >= kmin, the term is
/// below `eps` in magnitude and the last three magnitudes strictly decreased.
template <typename Term>
double sum_series(Term&& term, int first, int kmin, int* last = nullptr,
                  double eps = 1e-12, int hard_cap = 100000) {
  double total = 0.0;
  double prev[3] = {INFINITY, INFINITY, INFINITY};
  int k = first;
  for (; k <= hard_cap; ++k) {
    const double t = term(k);
    total += t;
    const double a = std::fabs(t);
    prev[0] = prev[1];
    prev[1] = prev[2];
    prev[2] = a;
    const bool decreasing = prev[0] > prev[1] && prev[1] > prev[2];
    if (k >= kmin && a < eps && decreasing) break;
  }
  if (k > hard_cap) throw std::runtime_error("sum_series: no convergence before hard cap");
  if (last != nullptr) *last = k;
  return total;
}

inline double h_extinct(double c, double q) { return q - std::exp(-c * (1.0 - q)); }

}  // namespace detail

/// Smallest root of q = exp(-c(1-q)) for c > 1.
///
/// Monotone fixed-point iteration from 0 with Aitken acceleration, finished by
/// Newton steps. Close to criticality (|c-1| < 0.05) the iteration is slow and
/// bisection on [0, 1/c] is used instead; the root lies there because c q < 1.
inline GWParams extinction_prob(double c, double tol = 1e-12) {
  detail::require_finite(c, "extinction_prob");
  detail::require_finite(tol, "extinction_prob");
  if (c <= 1.0) throw std::domain_error("extinction_prob: c must exceed 1");
  if (!(tol > 0.0 && tol <= 1e-6)) throw std::domain_error("extinction_prob: tol must lie in (0, 1e-6]");

  auto phi = [c](double q) { return std::exp(-c * (1.0 - q)); };
  double q = 0.0;
  bool converged = false;

  if (c - 1.0 >= 0.05) {
    for (int it = 0; it < 10000 && !converged; ++it) {
      const double q1 = phi(q);
      const double q2 = phi(q1);
      const double denom = q2 - 2.0 * q1 + q;
      double next = q2;
      if (denom != 0.0) {
        const double aitken = q - (q1 - q) * (q1 - q) / denom;
        // The iteration is increasing towards the smallest root; only accept
        // an accelerated step that stays in the monotone region.
        if (aitken > q2 && aitken < 1.0 / c && detail::h_extinct(c, aitken) <= 0.0) next = aitken;
      }
      if (std::fabs(next - q) <= 0.25 * tol) converged = true;
      q = next;
    }
  }
  if (!converged) {
    double lo = 0.0;
    double hi = 1.0 / c;
    for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
      const double mid = 0.5 * (lo + hi);
      (detail::h_extinct(c, mid) < 0.0 ? lo : hi) = mid;
    }
    q = 0.5 * (lo + hi);
  }
  for (int it = 0; it < 3; ++it) {
    const double slope = 1.0 - c * phi(q);
    if (slope <= 0.0) break;
    const double next = q - detail::h_extinct(c, q) / slope;
    if (!(next > 0.0 && next < 1.0 / c)) break;
    q = next;
  }
  if (std::fabs(detail::h_extinct(c, q)) > tol) {
    throw std::runtime_error("extinction_prob: residual above tolerance at c = " + std::to_string(c));
  }
  return GWParams{c, q, 1.0 - q};
}

/// log((e^mu - 1)/mu) - log((e^lambda - 1)/lambda), mu > lambda > 0.
inline double alpha(double lambda, double mu) {
  detail::require_finite(lambda, "alpha");
  detail::require_finite(mu, "alpha");
  if (!(lambda >= 0.0) || !(mu > lambda)) throw std::domain_error("alpha: requires mu > lambda > 0");
  auto log_ratio = [](double x) { return x == 0.0 ? 0.0 : std::log(std::expm1(x) / x); };
  return log_ratio(mu) - log_ratio(lambda);
}

/// Probability that a PGW(lambda) tree has exactly k vertices.
/// For lambda > 1 the masses sum to q(lambda) rather than 1.
inline double borel_pmf(double lambda, std::int64_t k) {
  detail::require_finite(lambda, "borel_pmf");
  if (k < 1) throw std::domain_error("borel_pmf: k must be positive");
  if (!(lambda > 0.0)) throw std::domain_error("borel_pmf: lambda must be positive");
  const double kk = static_cast<double>(k);
  const double log_p = kk * (std::log(lambda) - lambda) + (kk - 1.0) * std::log(kk) -
                       std::log(lambda) - std::lgamma(kk + 1.0);
  return std::exp(log_p);
}

/// Expected number of root children of PGW(lambda) whose subtree has exactly k
/// vertices: (lambda e^{-lambda})^k k^{k-1} / k!.
inline double mean_subtree_count(double lambda, std::int64_t k) {
  return lambda * borel_pmf(lambda, k);
}

/// P[deg(root) = k] under PGW*(c): e^{-c} c^k (1 - q^k) / (theta k!).
inline double degree_pmf(const GWParams& p, std::int64_t k) {
  if (k < 1) throw std::domain_error("degree_pmf: k must be positive");
  const double kk = static_cast<double>(k);
  const double log_r = -p.c + kk * std::log(p.c) - std::lgamma(kk + 1.0) +
                       std::log1p(-std::pow(p.q, kk)) - std::log(p.theta);
  return std::exp(log_r);
}

/// s_k(c) = P[deg(root) > k] under PGW*(c), summed directly over the tail.
inline double degree_tail(const GWParams& p, std::int64_t k) {
  if (k < 0) throw std::domain_error("degree_tail: k must be non-negative");
  const int first = static_cast<int>(k) + 1;
  const int kmin = std::max(first, static_cast<int>(std::ceil(p.c)) + 3);
  return detail::sum_series([&](int j) { return degree_pmf(p, j); }, first, kmin, nullptr, 1e-18);
}

/// E[log deg(root)] under PGW*(1): the degree is 1 + Poisson(1).
inline double critical_log_degree_constant() {
  return detail::sum_series(
      [](int k) { return std::exp(-1.0 - std::lgamma(k + 1.0)) * std::log1p(static_cast<double>(k)); },
      0, 3);
}

/// E[log deg(root)] under PGW*(c). This is also the trivial upper bound on f(c).
inline double expected_log_degree(const GWParams& p, int kmin = 1, int* kmax_used = nullptr) {
  const int floor_k = std::max(kmin, static_cast<int>(std::ceil(p.c)) + 3);
  return detail::sum_series(
      [&](int k) { return degree_pmf(p, k) * std::log(static_cast<double>(k)); }, 1, floor_k,
      kmax_used);
}

/// Lower bound on f'(c): (c-1) e^{-c q(c)} / c^2.
inline double fprime_lower(const GWParams& p) {
  return (p.c - 1.0) * std::exp(-p.c * p.q) / (p.c * p.c);
}

inline BoundsRecord f_bounds(const GWParams& p, int kmax = 1) {
  BoundsRecord r;
  r.c = p.c;
  r.f_upper = expected_log_degree(p, kmax, &r.kmax);
  r.f_lower = std::max(0.0, r.f_upper - critical_log_degree_constant());
  r.fprime_lower = fprime_lower(p);
  return r;
}

/// delta - log(1 + delta/c): gap between the Poisson mass that may be added to
/// the root degree of PGW*(c) and the shift needed to reach PGW*(c+delta).
inline double g_gap(double c, double delta) {
  detail::require_finite(c, "g_gap");
  detail::require_finite(delta, "g_gap");
  if (!(c > 1.0) || !(delta > 0.0)) throw std::domain_error("g_gap: requires c > 1 and delta > 0");
  return delta - std::log1p(delta / c);
}

/// Limit of g_gap(c, delta)/delta as delta -> 0.
inline double beta(double c) {
  detail::require_finite(c, "beta");
  if (!(c > 1.0)) throw std::domain_error("beta: requires c > 1");
  return 1.0 - 1.0 / c;
}

}  // namespace gwtree

#endif  // GWTREE_ANALYTIC_HPP
