#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "lifexp/errors.hpp"
#include "lifexp/explore.hpp"
#include "lifexp/rng.hpp"
#include "lifexp/special.hpp"
#include "test_util.hpp"

using namespace lifexp;
using lifexp::testing::random_vector;

namespace {

// Sums of squares computed from scratch, F and p from them.
std::pair<double, double> anova_oracle(const std::vector<Vector>& groups) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    for (double v : g) total += v;
    n += g.size();
  }
  const double grand = total / n;
  long double ss_between = 0, ss_within = 0;
  for (const auto& g : groups) {
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
    ss_between += g.size() * (mean - grand) * (mean - grand);
    for (double v : g) ss_within += (v - mean) * (v - mean);
  }
  const std::size_t d1 = groups.size() - 1, d2 = n - groups.size();
  const double f = static_cast<double>((ss_between / d1) / (ss_within / d2));
  return {f, f_survival_p(f, d1, d2)};
}

}  // namespace

TEST(Histogram, OneValuePerBin) {
  Vector v(10);
  std::iota(v.begin(), v.end(), 0.0);
  const Histogram h = histogram(v, 10);
  ASSERT_EQ(h.counts.size(), 10u);
  ASSERT_EQ(h.bin_edges.size(), 11u);
  for (auto c : h.counts) EXPECT_EQ(c, 1u);
  EXPECT_EQ(h.bin_edges.front(), 0.0);
  EXPECT_EQ(h.bin_edges.back(), 9.0);
}

TEST(Histogram, ConstantInput) {
  const Histogram h = histogram(Vector(7, 3.0), 4);
  EXPECT_EQ(h.bin_edges.front(), 2.5);
  EXPECT_EQ(h.bin_edges.back(), 3.5);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}), 7u);
  EXPECT_EQ(std::count(h.counts.begin(), h.counts.end(), 0u), 3);
}

TEST(Histogram, CountsArePermutationInvariantAndComplete) {
  Rng rng(4);
  Vector v = random_vector(rng, 500, -3, 8);
  const Histogram a = histogram(v, 13);
  std::reverse(v.begin(), v.end());
  std::swap(v[0], v[250]);
  const Histogram b = histogram(v, 13);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_EQ(std::accumulate(a.counts.begin(), a.counts.end(), std::size_t{0}), 500u);
  for (std::size_t i = 1; i < a.bin_edges.size(); ++i) EXPECT_GT(a.bin_edges[i], a.bin_edges[i - 1]);
}

TEST(Histogram, Errors) {
  EXPECT_THROW(histogram(Vector{}, 5), ContractError);
  EXPECT_THROW(histogram(Vector{1, 2}, 0), ContractError);
}

TEST(Pearson, SelfAndNegation) {
  Rng rng(5);
  const Vector x = random_vector(rng, 40);
  Vector neg(x.size());
  std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
  EXPECT_NEAR(pearson(x, x), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, neg), -1.0, 1e-15);
}

TEST(Pearson, AffineInvariance) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = random_vector(rng, 30), y = random_vector(rng, 30);
    Vector ax(x.size()), by(y.size());
    std::transform(x.begin(), x.end(), ax.begin(), [](double v) { return 3.5 * v - 7; });
    std::transform(y.begin(), y.end(), by.begin(), [](double v) { return 0.01 * v + 100; });
    const double r = pearson(x, y);
    EXPECT_NEAR(pearson(ax, by), r, 1e-12);
    EXPECT_LE(std::abs(r), 1.0);
  }
}

TEST(Pearson, ZeroVarianceAndShapeErrors) {
  EXPECT_THROW(pearson(Vector{1, 1, 1}, Vector{1, 2, 3}), UndefinedCorrelationError);
  EXPECT_THROW(pearson(Vector{1, 2}, Vector{1, 2, 3}), Error);
}

TEST(CorrelationMatrix, LinearPairAndSymmetry) {
  Rng rng(7);
  Matrix x(25, 3);
  for (std::size_t i = 0; i < 25; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = 2 * x(i, 0);
    x(i, 2) = rng.uniform();
  }
  const Vector y = random_vector(rng, 25);
  const CorrelationMatrix c = correlation_matrix(lifexp::testing::make_dataset(x, y), true);
  ASSERT_EQ(c.r.rows(), 4u);
  EXPECT_EQ(c.names.back(), "y");
  EXPECT_NEAR(c.r(0, 1), 1.0, 1e-14);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(c.r(i, i), 1.0);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(c.r(i, j), c.r(j, i));
  }
  EXPECT_NEAR(c.r(2, 3), pearson(x.column(2), y), 1e-15);
}

TEST(CorrelationMatrix, ZeroVarianceColumnIsReported) {
  Matrix x{{1, 5}, {2, 5}, {3, 5}};
  const CorrelationMatrix c = correlation_matrix(lifexp::testing::make_dataset(x, Vector{1, 0, 2}), false);
  EXPECT_EQ(c.zero_variance, std::vector<std::string>{"x1"});
  EXPECT_EQ(c.r(0, 1), 0.0);
  EXPECT_EQ(c.r(1, 0), 0.0);
}

TEST(Anova, EqualMeans) {
  const AnovaResult r = anova_oneway({{1, 3}, {1, 3}});
  EXPECT_EQ(r.f, 0.0);
  EXPECT_EQ(r.p, 1.0);
}

TEST(Anova, ZeroWithinVariance) {
  const AnovaResult r = anova_oneway({{0, 0}, {1, 1}});
  EXPECT_TRUE(std::isinf(r.f));
  EXPECT_EQ(r.p, 0.0);
}

TEST(Anova, MatchesSumOfSquaresOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vector> groups;
    for (int g = 0; g < 3; ++g) {
      Vector v = random_vector(rng, 5 + rng.below(20), 0, 10);
      for (double& e : v) e += g * 0.7;
      groups.push_back(v);
    }
    const AnovaResult r = anova_oneway(groups);
    const auto [f, p] = anova_oracle(groups);
    EXPECT_NEAR(r.f, f, 1e-10 * std::max(1.0, f));
    EXPECT_NEAR(r.p, p, 1e-10);
    EXPECT_GE(r.f, 0.0);
    EXPECT_GT(r.p, 0.0);
    EXPECT_LE(r.p, 1.0);
    // Order within a group does not matter.
    std::reverse(groups[1].begin(), groups[1].end());
    const AnovaResult s = anova_oneway(groups);
    EXPECT_NEAR(s.f, r.f, 1e-12 * std::max(1.0, r.f));
  }
}

TEST(Anova, Errors) {
  EXPECT_THROW(anova_oneway({{1, 2, 3}}), ContractError);
  EXPECT_THROW(anova_oneway({{1}, {2}}), ContractError);
}

TEST(Anova, GroupByCategory) {
  const Table t({Column{"y", {Cell{1.0}, Cell{2.0}, Cell{Missing{}}, Cell{4.0}}},
                 Column{"s", {Cell{"b"}, Cell{"a"}, Cell{"a"}, Cell{"b"}}}});
  const auto groups = group_by_category(t, "y", "s");
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0], (Vector{2}));
  EXPECT_EQ(groups[1], (Vector{1, 4}));
}
