#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "shepherd/stats.hpp"

using namespace shepherd;
using namespace shepherd::stats;

namespace {

double t_density(double x, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  return c * std::pow(1 + x * x / df, -(df + 1) / 2);
}

// Two-sided tail by composite Simpson over [0, |t|].
double two_sided_p_numeric(double t, double df) {
  const int n = 20000;
  const double a = 0.0, b = std::abs(t), h = (b - a) / n;
  double s = t_density(a, df) + t_density(b, df);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * t_density(a + i * h, df);
  return 1.0 - 2.0 * s * h / 3.0;
}

std::vector<double> constant(double v, int n) { return std::vector<double>(static_cast<std::size_t>(n), v); }

}  // namespace

TEST(Welch, WorkedExampleAgainstNumericIntegration) {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{3, 4, 5, 6, 7};
  const auto r = welch_t_test(a, b);
  EXPECT_NEAR(r.t, -2.0, 1e-12);
  EXPECT_NEAR(r.df, 8.0, 1e-12);
  EXPECT_NEAR(r.p, two_sided_p_numeric(-2.0, 8.0), 1e-9);
  EXPECT_NEAR(r.p, 0.08, 0.005);
  EXPECT_NEAR(welch_t_test(a, b, Sided::Less).p, r.p / 2, 1e-12);
  EXPECT_NEAR(welch_t_test(a, b, Sided::Greater).p, 1 - r.p / 2, 1e-12);
}

TEST(Welch, TailAccuracyAcrossDegreesOfFreedom) {
  for (double df : {1.0, 2.5, 5.0, 30.0, 200.0})
    for (double t : {0.3, 1.0, 2.0, 4.0})
      EXPECT_NEAR(p_from_t(t, df, Sided::Two), two_sided_p_numeric(t, df), 1e-8) << df << " " << t;
}

TEST(Welch, DegenerateAndIdentical) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto same = welch_t_test(x, x);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_NEAR(same.p, 1.0, 1e-12);

  const auto sep = welch_t_test(constant(0, 4), constant(1, 4));
  EXPECT_TRUE(sep.degenerate);
  EXPECT_EQ(sep.p, 0.0);
  const auto eq = welch_t_test(constant(2, 4), constant(2, 4));
  EXPECT_TRUE(eq.degenerate);
  EXPECT_EQ(eq.p, 1.0);
  EXPECT_EQ(welch_t_test(constant(0, 4), constant(1, 4), Sided::Greater).p, 1.0);
  EXPECT_THROW(welch_t_test(std::vector<double>{1}, x), std::invalid_argument);
}

TEST(Welch, SwappingArmsNegatesT) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> a, b;
    for (int i = 0; i < 3 + k % 7; ++i) a.push_back(g(rng));
    for (int i = 0; i < 4 + k % 5; ++i) b.push_back(2 * g(rng) + 0.5);
    const auto ab = welch_t_test(a, b), ba = welch_t_test(b, a);
    EXPECT_NEAR(ab.t, -ba.t, 1e-12);
    EXPECT_NEAR(ab.p, ba.p, 1e-12);
  }
}

TEST(Pearson, ExamplesAndInvariance) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> lin, neg;
  for (double v : x) {
    lin.push_back(2 * v + 1);
    neg.push_back(-v);
  }
  EXPECT_NEAR(pearson_r(x, lin).r, 1.0, 1e-12);
  EXPECT_NEAR(pearson_r(x, neg).r, -1.0, 1e-12);
  EXPECT_NEAR(pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}).r, 0.5, 1e-12);
  EXPECT_TRUE(pearson_r(x, constant(3, 5)).undefined);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> a, b, a2;
  for (int i = 0; i < 30; ++i) {
    a.push_back(g(rng));
    b.push_back(a.back() + g(rng));
    a2.push_back(7.5 * a.back() - 3);
  }
  EXPECT_NEAR(pearson_r(a, b).r, pearson_r(a2, b).r, 1e-12);
  // Two-sided p from the t transform with n - 2 degrees of freedom.
  const double r = pearson_r(a, b).r;
  EXPECT_NEAR(pearson_r(a, b).p, two_sided_p_numeric(r * std::sqrt(28 / (1 - r * r)), 28), 1e-8);
}

TEST(BestTp, ConstructedDominanceAndTies) {
  ResultsTable t;
  for (int tp = 1; tp <= 25; ++tp) {
    t[{Scenario::S2, tp}] = {0, 0, 1, 0, 0, 1, 0, 0, 1, 0};
    t[{Scenario::S5, tp}] = {1, 0, 1, 0};
  }
  t[{Scenario::S2, 4}] = {1, 1, 1, 1, 1, 1, 1, 1, 0, 1};
  const auto rows = best_tp_table(t, true);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].scenario, Scenario::S2);
  EXPECT_EQ(rows[0].best_tp, 4);
  EXPECT_TRUE(rows[0].significant);
  EXPECT_EQ(rows[1].best_tp, 1);
  EXPECT_FALSE(rows[1].significant);
}

TEST(BestTp, LowerIsBetterPicksMinimum) {
  ResultsTable t;
  for (int tp = 1; tp <= 25; ++tp) t[{Scenario::S3, tp}] = {double(30 - tp), double(31 - tp)};
  const auto rows = best_tp_table(t, false);
  EXPECT_EQ(rows[0].best_tp, 25);
  EXPECT_NEAR(rows[0].best.mean, 5.5, 1e-12);
  EXPECT_NEAR(rows[0].tp5.mean, 25.5, 1e-12);
}

TEST(Suitability, ShapeSelfAndDominated) {
  ResultsTable t;
  for (int tp = 1; tp <= 25; ++tp)
    for (std::size_t s = 0; s < kNumScenarios; ++s) t[{scenario_at(s), tp}] = {0.9, 1.0, 0.95, 1.0};
  t[{Scenario::S7, 13}] = {0.0, 0.05, 0.0, 0.1};
  const auto m = suitability_matrix(t, true);
  ASSERT_EQ(m.size(), 25u);
  ASSERT_EQ(m[0].size(), 11u);
  EXPECT_FALSE(m[12][index_of(Scenario::S7)]);
  int falses = 0;
  for (const auto& row : m)
    for (bool b : row) falses += !b;
  EXPECT_EQ(falses, 1);
  for (const auto& row : best_tp_table(t, true))
    EXPECT_TRUE(m[static_cast<std::size_t>(row.best_tp - 1)][index_of(row.scenario)]);
}

TEST(Summary, SampleStd) {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  const auto s = summarise(x);
  EXPECT_EQ(s.n, 8);
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_NEAR(s.std, std::sqrt(32.0 / 7.0), 1e-12);
  EXPECT_EQ(summarise(std::vector<double>{3}).std, 0.0);
}
