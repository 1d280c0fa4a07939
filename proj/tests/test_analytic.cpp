#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gwtree/analytic.hpp"

using namespace gwtree;

namespace {

std::vector<double> c_grid() {
  std::vector<double> g;
  for (int i = 11; i <= 60; ++i) g.push_back(i / 10.0);
  return g;
}

}  // namespace

TEST(ExtinctionProb, MatchesBisectionOracle) {
  EXPECT_NEAR(extinction_prob(2.0).q, 0.2031878699799799, 1e-12);
  EXPECT_NEAR(extinction_prob(1.5).q, 0.4171883561341886, 1e-12);
  EXPECT_NEAR(extinction_prob(3.0).q, 0.05952020929264037, 1e-12);
  EXPECT_NEAR(extinction_prob(4.0).q, 0.01982740128177841, 1e-12);
  EXPECT_NEAR(extinction_prob(1.2).q, 0.6863016689587823, 1e-12);
}

TEST(ExtinctionProb, NearCriticalUsesBisection) {
  const GWParams p = extinction_prob(1.01);
  EXPECT_LE(std::fabs(p.q - std::exp(-p.c * (1 - p.q))), 1e-12);
  EXPECT_GT(p.q, 0.97);
  EXPECT_LT(p.q, 1.0);
}

TEST(ExtinctionProb, RejectsBadInput) {
  EXPECT_THROW(extinction_prob(1.0), std::domain_error);
  EXPECT_THROW(extinction_prob(0.5), std::domain_error);
  EXPECT_THROW(extinction_prob(NAN), std::domain_error);
  EXPECT_THROW(extinction_prob(INFINITY), std::domain_error);
  EXPECT_THROW(extinction_prob(2.0, 0.0), std::domain_error);
  EXPECT_THROW(extinction_prob(2.0, 1e-3), std::domain_error);
}

TEST(ExtinctionProb, ResidualDualityAndSubcriticalDual) {
  double prev_cq = 2.0;
  for (double c : c_grid()) {
    const GWParams p = extinction_prob(c);
    EXPECT_LE(std::fabs(p.q - std::exp(-c * (1 - p.q))), 1e-12) << c;
    EXPECT_LE(std::fabs(c * std::exp(-c) - c * p.q * std::exp(-c * p.q)), 1e-10) << c;
    EXPECT_GT(p.q, 0.0);
    EXPECT_LT(p.q, 1.0);
    EXPECT_LT(c * p.q, 1.0);
    EXPECT_DOUBLE_EQ(p.theta, 1.0 - p.q);
    EXPECT_LT(c * p.q, prev_cq) << c;
    prev_cq = c * p.q;
  }
  EXPECT_LT(6.0 * extinction_prob(6.0).q, 2.0 * extinction_prob(2.0).q);
}

TEST(Alpha, Values) {
  EXPECT_NEAR(alpha(1.5, 2.0), 0.3193869286048140, 1e-13);
  EXPECT_NEAR(alpha(1.0, 2.0), 0.6201145069582775, 1e-13);
  EXPECT_THROW(alpha(2.0, 2.0), std::domain_error);
  EXPECT_THROW(alpha(2.0, 1.0), std::domain_error);
}

TEST(Alpha, DerivativeInequalitiesOnGrid) {
  const auto grid = c_grid();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const double l = grid[i], m = grid[j];
      const GWParams pl = extinction_prob(l), pm = extinction_prob(m);
      EXPECT_LT(alpha(l, m), m - l);
      const double a = alpha(l * pl.theta, m * pm.theta);
      EXPECT_GT(a, l * pl.q - m * pm.q);
      EXPECT_NEAR(a, std::log(l * pl.q) - std::log(m * pm.q), 1e-9);
    }
  }
}

TEST(Borel, Values) {
  EXPECT_NEAR(borel_pmf(1.0, 1), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(borel_pmf(0.5, 2), 0.1839397205857212, 1e-15);
  EXPECT_THROW(borel_pmf(0.5, 0), std::domain_error);
  double s = 0.0;
  for (int k = 1; k <= 10000; ++k) s += borel_pmf(1.0, k);
  // Borel(1) has a k^{-3/2} tail: the mass beyond 10^4 is about 0.008.
  EXPECT_NEAR(s, 1.0 - 0.00797862398013280, 1e-10);
  double half = 0.0;
  for (int k = 1; k <= 200; ++k) half += borel_pmf(0.5, k);
  EXPECT_NEAR(half, 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(borel_pmf(0.9, 5000)));
}

TEST(Borel, SupercriticalMassIsExtinctionProbability) {
  double s = 0.0;
  for (int k = 1; k <= 2000; ++k) s += borel_pmf(2.0, k);
  EXPECT_NEAR(s, extinction_prob(2.0).q, 1e-10);
}

TEST(DegreeLaw, Values) {
  const GWParams p2 = extinction_prob(2.0);
  EXPECT_NEAR(degree_pmf(p2, 1), 0.2706705664732254, 1e-14);
  for (double c : c_grid()) {
    const GWParams p = extinction_prob(c);
    double s = 0.0;
    for (int k = 1; k <= 200; ++k) s += degree_pmf(p, k);
    EXPECT_NEAR(s, 1.0, 1e-9) << c;
    EXPECT_NEAR(degree_tail(p, 0), 1.0, 1e-9);
    EXPECT_NEAR(degree_tail(p, 2), 1.0 - degree_pmf(p, 1) - degree_pmf(p, 2), 1e-12);
  }
  const GWParams p3 = extinction_prob(3.0);
  for (int k = 1; k <= 50; ++k) EXPECT_GE(degree_tail(p3, k), degree_tail(p2, k)) << k;
}

TEST(Bounds, CriticalConstant) { EXPECT_NEAR(critical_log_degree_constant(), 0.5734028091226202, 1e-13); }

TEST(Bounds, ValuesAtTwo) {
  const BoundsRecord b = f_bounds(extinction_prob(2.0));
  EXPECT_NEAR(b.f_upper, 0.7403619807939325, 1e-11);
  EXPECT_NEAR(b.f_lower, 0.1669591716713123, 1e-11);
  EXPECT_NEAR(b.fprime_lower, 0.1665149637745935, 1e-13);
  EXPECT_GT(b.kmax, 5);
}

TEST(Bounds, Grid) {
  struct Row {
    double c, up, lo, fpl;
  };
  const Row rows[] = {{1.5, 0.62698324, 0.05358043, 0.11885394}, {2.25, 0.80647194, 0.23306914, 0.17754762},
                      {3.0, 1.01410152, 0.44069871, 0.18588296}, {3.25, 1.08237327, 0.50897046, 0.18411855},
                      {4.0, 1.27647979, 0.70307698, 0.17320385}};
  for (const Row& r : rows) {
    const BoundsRecord b = f_bounds(extinction_prob(r.c));
    EXPECT_NEAR(b.f_upper, r.up, 1e-8);
    EXPECT_NEAR(b.f_lower, r.lo, 1e-8);
    EXPECT_NEAR(b.fprime_lower, r.fpl, 1e-8);
  }
  for (double c : c_grid()) {
    const BoundsRecord b = f_bounds(extinction_prob(c));
    EXPECT_GE(b.f_lower, 0.0);
    EXPECT_LE(b.f_lower, b.f_upper);
    EXPECT_GT(b.fprime_lower, 0.0);
  }
}

TEST(Bounds, DerivativeBoundAsymptotics) {
  EXPECT_LT(std::fabs(50.0 * fprime_lower(extinction_prob(50.0)) - 1.0), 0.1);
  // Behaviour as c decreases to 1: the bound goes to 0.
  EXPECT_LT(fprime_lower(extinction_prob(1.001)), 1e-3);
}

TEST(Gap, Values) {
  EXPECT_NEAR(g_gap(2.0, 0.5), 0.2768564486857902, 1e-15);
  EXPECT_DOUBLE_EQ(beta(2.0), 0.5);
  for (double c : {1.5, 2.0, 4.0}) {
    for (double d : {0.01, 0.001, 1e-4}) EXPECT_LT(std::fabs(g_gap(c, d) / d - beta(c)), d);
  }
  EXPECT_THROW(g_gap(1.0, 0.5), std::domain_error);
  EXPECT_THROW(g_gap(2.0, 0.0), std::domain_error);
  EXPECT_THROW(beta(0.9), std::domain_error);
}

TEST(Gap, EqualsAlphaMinusDualShift) {
  for (double c : {1.5, 2.0, 3.0}) {
    for (double d : {0.1, 0.5, 1.0}) {
      const GWParams a = extinction_prob(c), b = extinction_prob(c + d);
      const double via_alpha = alpha(c * a.theta, (c + d) * b.theta) - (c * a.q - (c + d) * b.q);
      EXPECT_NEAR(g_gap(c, d), via_alpha, 1e-9);
    }
  }
}
