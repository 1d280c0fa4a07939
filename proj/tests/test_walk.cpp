#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

#include "gwtree/analytic.hpp"
#include "gwtree/samplers.hpp"
#include "gwtree/walk.hpp"

using namespace gwtree;

namespace {

RootedTree edge() {
  RootedTree t;
  t.add_root(NodeType::Untyped);
  t.add_children(0, 1);
  return t;
}

RootedTree path3() {
  RootedTree t;
  t.add_root(NodeType::Untyped);
  const NodeId a = t.add_children(0, 1);
  t.add_children(a, 1);
  return t;
}

RootedTree star(int d) {
  RootedTree t;
  t.add_root(NodeType::Untyped);
  t.add_children(0, d);
  return t;
}

double harmonic(int n) {
  double h = 0.0;
  for (int i = 1; i <= n; ++i) h += 1.0 / i;
  return h;
}

}  // namespace

TEST(ReturnProbs, SmallTrees) {
  const ReturnProfile e = return_probs(edge(), 10);
  for (int k = 1; k <= 10; ++k) EXPECT_DOUBLE_EQ(e.p(k), k % 2 == 0 ? 1.0 : 0.0);
  EXPECT_EQ(e.exact_upto, 10);
  const ReturnProfile p = return_probs(path3(), 4);
  EXPECT_DOUBLE_EQ(p.p(2), 0.5);
  EXPECT_DOUBLE_EQ(p.p(4), 0.5);
  const ReturnProfile s = return_probs(star(5), 6);
  EXPECT_DOUBLE_EQ(s.p(2), 1.0);
  EXPECT_DOUBLE_EQ(s.p(4), 1.0);
}

TEST(ReturnProbs, Errors) {
  RootedTree lone;
  lone.add_root(NodeType::Untyped);
  EXPECT_THROW(return_probs(lone, 4), std::domain_error);
  EXPECT_THROW(return_probs(edge(), 1), std::domain_error);
  RootedTree t = sample_pgw_star(2.0, 3, 1);
  try {
    return_probs(t, 20);
    FAIL() << "expected a precondition error";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("depth 10"), std::string::npos) << e.what();
  }
  const ReturnProfile r = return_probs(t, 20, Truncation::AllowFrontier);
  EXPECT_EQ(r.exact_upto, 6);
}

TEST(ReturnSum, Values) {
  for (int K : {2, 10, 60}) EXPECT_NEAR(return_sum(edge(), K), 0.5 * harmonic(K / 2), 1e-14);
  EXPECT_DOUBLE_EQ(return_sum(path3(), 4), 0.375);
  RootedTree t = sample_pgw_star(1.5, 12, 4);
  double prev = 0.0;
  for (int K = 2; K <= 24; K += 2) {
    const double s = return_sum(t, K);
    EXPECT_GE(s, prev);
    prev = s;
  }
}

TEST(GreenValue, Values) {
  const GreenValue g = green_value(edge(), 0.5, 40);
  EXPECT_NEAR(g.value, 4.0 / 3.0, g.truncation_bound);
  EXPECT_DOUBLE_EQ(g.truncation_bound, std::pow(0.5, 40) / 0.5);
  RootedTree t = sample_pgw_star(2.0, 5, 8);
  for (double s : {0.1, 0.5, 0.9}) EXPECT_GE(green_value(t, s, 10).value, 1.0);
  EXPECT_NEAR(green_value(t, 1e-9, 10).value, 1.0, 1e-15);
  EXPECT_THROW(green_value(t, 0.0, 10), std::domain_error);
  EXPECT_THROW(green_value(t, 1.0, 10), std::domain_error);
}

TEST(ReturnProbs, ParityRangeAndSecondStepFormula) {
  for (double c : {1.5, 2.0, 3.0}) {
    const PgwStarModel model(c);
    for (Key s = 0; s < 40; ++s) {
      RootedTree t = sample_pgw_star(model, 5, derive(s, "test.parity"));
      const ReturnProfile r = return_probs(t, 10);
      for (int k = 1; k <= 10; ++k) {
        if (k % 2 == 1) {
          ASSERT_EQ(r.p(k), 0.0);
        }
        ASSERT_GE(r.p(k), 0.0);
        ASSERT_LE(r.p(k), 1.0);
      }
      double p2 = 0.0;
      const Node& root = t[0];
      for (NodeId c2 = root.first_child; c2 < root.first_child + root.num_children; ++c2) {
        p2 += 1.0 / t.degree(0) / t.degree(c2);
      }
      EXPECT_NEAR(r.p(2), p2, 1e-15);
    }
  }
}

TEST(ReturnProbs, ExactUnderExtension) {
  const PgwStarModel model(2.0);
  for (Key s = 0; s < 30; ++s) {
    RootedTree t = sample_pgw_star(model, 4, derive(s, "test.exact"));
    const ReturnProfile before = return_probs(t, 20, Truncation::AllowFrontier);
    model.extend(t, 6);
    const ReturnProfile after = return_probs(t, 20, Truncation::AllowFrontier);
    for (int k = 1; k <= before.exact_upto; ++k) ASSERT_EQ(before.p(k), after.p(k)) << k;
    // Beyond the exact range, dropped mass can only make values smaller.
    for (int k = before.exact_upto + 1; k <= 20; ++k) ASSERT_LE(before.p(k), after.p(k) + 1e-15);
  }
}

TEST(ReturnProbs, IntegralOfGreenFunction) {
  const RootedTree t = path3();
  const int K = 40;
  const ReturnProfile prof = return_probs(t, K);
  auto integrand = [&](double s) {
    double v = 0.0, sk = 1.0;
    for (int k = 1; k <= K; ++k) {
      sk *= s;
      v += prof.p(k) * sk;
    }
    return v / s;
  };
  const double integral = boost::math::quadrature::gauss<double, 64>::integrate(integrand, 0.0, 1.0);
  EXPECT_NEAR(integral, return_sum(prof), 1e-12);
}

TEST(KilledWalk, SingleEdge) {
  RootedTree t = edge();
  const std::int64_t n = 100000;
  double sum = 0.0, sq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto x = killed_walk_visits(t, 0.5, derive(derive(1, "test.killed"), static_cast<std::uint64_t>(i)));
    ASSERT_GE(x, 1);
    sum += static_cast<double>(x);
    sq += static_cast<double>(x) * static_cast<double>(x);
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, 4.0 / 3.0, 3 * se);
}

TEST(KilledWalk, SmallSurvivalRarelyReturns) {
  RootedTree t = edge();
  const double s = 0.05;
  const std::int64_t n = 200000;
  std::int64_t ones = 0;
  for (std::int64_t i = 0; i < n; ++i) ones += killed_walk_visits(t, s, derive(2, static_cast<std::uint64_t>(i))) == 1;
  const double p_return = s * s / (1 - s * s);  // P(X >= 2) on an edge
  EXPECT_NEAR(1.0 - static_cast<double>(ones) / n, p_return, 4 * std::sqrt(p_return / n));
}

TEST(KilledWalk, MeanIsGreenValueOnSpine) {
  const PgwStarModel model(1.0);
  RootedTree t = sample_pgw_star(model, 21, 31);
  const double s = 0.5;
  const GreenValue g = green_value(t, s, 42);
  const std::int64_t n = 100000;
  double sum = 0.0, sq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto x = static_cast<double>(killed_walk_visits(t, s, derive(3, static_cast<std::uint64_t>(i))));
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, g.value, 4 * std::sqrt((sq / n - mean * mean) / n) + g.truncation_bound);
}

TEST(KilledWalk, GuardAndLazyExpansion) {
  RootedTree shallow = sample_pgw_star(2.0, 3, 5);
  EXPECT_THROW(killed_walk_visits(shallow, 0.7, 1), PreconditionError);
  EXPECT_EQ(killed_walk_depth_guard(0.7), 39);
  EXPECT_THROW(killed_walk_visits(shallow, 1.2, 1), std::domain_error);
  // Growing on demand gives the same visits as walking a pre-grown tree.
  const PgwStarModel model(1.5);
  for (Key s = 0; s < 50; ++s) {
    RootedTree lazy = sample_pgw_star(model, 0, s);
    const auto a = killed_walk_visits(lazy, 0.7, derive(s, "walk"), model);
    std::int32_t max_depth = 0;
    for (const Node& n : lazy.nodes()) max_depth = std::max(max_depth, n.depth);
    RootedTree full = sample_pgw_star(model, max_depth + 1, s);
    const auto b = killed_walk_visits(full, 0.7, derive(s, "walk"), detail::NoExpansion{});
    EXPECT_EQ(a, b);
  }
}

TEST(Estimators, DeterministicAndOrdered) {
  WalkOptions opt;
  const auto a = estimate_return_integral(2.0, 20, 400, 17, opt);
  const auto b = estimate_return_integral(2.0, 20, 400, 17, opt);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.std_error, b.std_error);
  opt.threads = 3;
  const auto c = estimate_return_integral(2.0, 20, 400, 17, opt);
  EXPECT_EQ(a.value, c.value);
  const auto longer = estimate_return_integral(2.0, 60, 400, 17);
  EXPECT_GE(longer.value, a.value);
  const auto f20 = estimate_f(2.0, 20, 400, 17);
  const auto f60 = estimate_f(2.0, 60, 400, 17);
  EXPECT_GE(f20.value, f60.value);
  EXPECT_THROW(estimate_return_integral(2.0, 21, 10, 1), std::domain_error);
  EXPECT_THROW(estimate_return_integral(2.0, 18, 10, 1), std::domain_error);
  EXPECT_THROW(estimate_return_integral(1.0, 20, 10, 1), std::domain_error);
}

TEST(Estimators, MonotoneAndBounded) {
  const auto r2 = estimate_return_integral(2.0, 60, 3000, 5);
  const auto r4 = estimate_return_integral(4.0, 60, 3000, 5);
  EXPECT_GT(r2.value - r4.value, 3 * std::hypot(r2.std_error, r4.std_error));
  const auto f2 = estimate_f(2.0, 60, 3000, 5);
  const BoundsRecord b = f_bounds(extinction_prob(2.0));
  EXPECT_GE(f2.value, b.f_lower - 2 * f2.std_error);
  EXPECT_LE(f2.value, b.f_upper);
  EXPECT_EQ(f2.quantity, "f");
  EXPECT_EQ(f2.K, 60);
}

TEST(Estimators, DecayDiagnostic) {
  const DecayTable d = pbar_decay_diagnostic(2.0, 40, 3000, 8);
  ASSERT_EQ(d.rows.size(), 20U);
  EXPECT_LT(d.fit_slope, 0.0);
  for (std::size_t i = 0; i + 1 < d.rows.size(); ++i) {
    if (d.rows[i].k < 10) continue;
    const auto& a = d.rows[i];
    const auto& b = d.rows[i + 1];
    EXPECT_LE(b.mean, a.mean + 3 * std::hypot(a.std_error, b.std_error)) << a.k;
  }
}
