#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "lifexp/errors.hpp"
#include "lifexp/forest.hpp"
#include "lifexp/ols.hpp"
#include "lifexp/rng.hpp"
#include "lifexp/tree.hpp"
#include "test_util.hpp"

using namespace lifexp;
using lifexp::testing::make_dataset;
using lifexp::testing::random_matrix;
using lifexp::testing::random_vector;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double node_error(const std::vector<double>& y, Criterion c) {
  if (y.empty()) return 0.0;
  double e = 0;
  if (c == Criterion::SquaredError) {
    const double m = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    for (double v : y) e += (v - m) * (v - m);
  } else {
    const double m = median(y);
    for (double v : y) e += std::abs(v - m);
  }
  return e;
}

struct BruteSplit {
  std::size_t feature = TreeNode::kLeaf;
  double threshold = 0;
  double error = std::numeric_limits<double>::infinity();
  std::size_t near_ties = 0;  // other splits within 1e-9 of the best
};

double split_error(const Matrix& x, const Vector& y, std::size_t f, double t, Criterion c) {
  std::vector<double> left, right;
  for (std::size_t r = 0; r < x.rows(); ++r) (x(r, f) <= t ? left : right).push_back(y[r]);
  return node_error(left, c) + node_error(right, c);
}

// Every feature, every midpoint between consecutive distinct values.
BruteSplit brute_force_root(const Matrix& x, const Vector& y, Criterion c) {
  std::vector<BruteSplit> all;
  for (std::size_t f = 0; f < x.cols(); ++f) {
    Vector values = x.column(f);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double t = 0.5 * (values[i] + values[i + 1]);
      all.push_back({f, t, split_error(x, y, f, t, c), 0});
    }
  }
  BruteSplit best;
  for (const auto& s : all)
    if (s.error < best.error) best = s;
  for (const auto& s : all)
    if (std::abs(s.error - best.error) <= 1e-9) ++best.near_ties;
  --best.near_ties;
  return best;
}

// Weakest-link pruning re-derived on a pointer-free copy of the node list.
std::vector<double> weakest_link_alphas(const RegressionTree& tree) {
  const auto& nodes = tree.nodes();
  const double total = static_cast<double>(nodes[0].n_samples);
  std::vector<bool> leaf(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) leaf[i] = nodes[i].is_leaf();
  std::function<std::pair<double, std::size_t>(std::size_t)> subtree = [&](std::size_t i) {
    if (leaf[i]) return std::pair<double, std::size_t>{nodes[i].impurity * nodes[i].n_samples / total, 1};
    const auto l = subtree(nodes[i].left), r = subtree(nodes[i].right);
    return std::pair<double, std::size_t>{l.first + r.first, l.second + r.second};
  };
  std::vector<double> alphas;
  while (!leaf[0]) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    std::function<void(std::size_t)> visit = [&](std::size_t i) {
      if (leaf[i]) return;
      const auto [risk, count] = subtree(i);
      const double g = (nodes[i].impurity * nodes[i].n_samples / total - risk) / (count - 1.0);
      if (g < best) {
        best = g;
        arg = i;
      }
      visit(nodes[i].left);
      visit(nodes[i].right);
    };
    visit(0);
    leaf[arg] = true;
    alphas.push_back(best);
  }
  return alphas;
}

// True when `small` is `big` with some subtrees collapsed into leaves.
bool is_pruned_subtree(const RegressionTree& small, std::size_t s, const RegressionTree& big, std::size_t b) {
  const TreeNode& a = small.nodes()[s];
  const TreeNode& c = big.nodes()[b];
  if (a.n_samples != c.n_samples) return false;
  if (a.is_leaf()) return true;
  if (c.is_leaf() || a.feature != c.feature || a.threshold != c.threshold) return false;
  return is_pruned_subtree(small, a.left, big, c.left) && is_pruned_subtree(small, a.right, big, c.right);
}

double training_sse(const RegressionTree& t, const Dataset& d) {
  const Vector p = tree_predict(t, d.features);
  double e = 0;
  for (std::size_t i = 0; i < p.size(); ++i) e += (p[i] - d.target[i]) * (p[i] - d.target[i]);
  return e;
}

Dataset noisy_regression(Rng& rng, std::size_t n, std::size_t p) {
  Matrix x = random_matrix(rng, n, p);
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = 3.0;
    for (std::size_t j = 0; j < p; ++j) y[i] += (j + 1.0) * x(i, j) * (j % 2 ? -1 : 1);
    y[i] += 0.3 * (rng.uniform() - 0.5);
  }
  return make_dataset(std::move(x), std::move(y));
}

}  // namespace

TEST(Ols, ExactLine) {
  const Dataset d = make_dataset(Matrix{{0}, {1}, {2}, {3}}, Vector{1, 3, 5, 7});
  const OlsModel m = ols_fit(d);
  EXPECT_NEAR(m.coefficients[0], 1.0, 1e-12);
  EXPECT_NEAR(m.coefficients[1], 2.0, 1e-12);
  EXPECT_NEAR(m.rss, 0.0, 1e-20);
  const Vector p = m.predict(d.features);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], d.target[i], 1e-12);
}

TEST(Ols, OrthogonalFeatureHasZeroT) {
  // x2 is orthogonal to both the intercept and x1, and y does not depend on it.
  const Dataset d = make_dataset(Matrix{{0, 1}, {1, -1}, {2, -1}, {3, 1}, {4, 0}, {5, 0}},
                                 Vector{0.5, 1.0, 2.5, 2.5, 4.5, 4.5});
  const OlsModel m = ols_fit(d);
  // Σx2·y = 0.5 − 1 − 2.5 + 2.5 = −0.5 ≠ 0, so build y to be exactly orthogonal instead.
  const Dataset e = make_dataset(d.features, Vector{0.5, 1.25, 2.25, 3.0, 4.0, 5.0});
  const OlsModel me = ols_fit(e);
  (void)m;
  Vector x2 = e.features.column(1);
  double s = 0;
  for (std::size_t i = 0; i < 6; ++i) s += x2[i] * e.target[i];
  ASSERT_NEAR(s, 0.0, 1e-15);
  EXPECT_NEAR(me.coefficients[2], 0.0, 1e-12);
  EXPECT_NEAR(me.t_stats[2], 0.0, 1e-10);
  EXPECT_NEAR(me.p_values[2], 1.0, 1e-10);
}

TEST(Ols, MatchesNormalEquationsOracle) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + rng.below(40), p = 1 + rng.below(5);
    const Dataset d = noisy_regression(rng, n, p);
    const OlsModel m = ols_fit(d);

    Eigen::MatrixXd x(n, p + 1);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x(i, 0) = 1;
      for (std::size_t j = 0; j < p; ++j) x(i, j + 1) = d.features(i, j);
      y(i) = d.target[i];
    }
    const Eigen::MatrixXd inv = (x.transpose() * x).inverse();
    const Eigen::VectorXd beta = inv * x.transpose() * y;
    const double rss = (y - x * beta).squaredNorm();
    const double dof = static_cast<double>(n - p - 1);
    const double s2 = rss / dof;
    boost::math::students_t dist(dof);
    ASSERT_EQ(m.dof, n - p - 1);
    EXPECT_NEAR(m.residual_variance, s2, 1e-8 * s2);
    for (std::size_t j = 0; j <= p; ++j) {
      const double se = std::sqrt(s2 * inv(j, j));
      const double t = beta(j) / se;
      const double pv = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
      EXPECT_NEAR(m.coefficients[j], beta(j), 1e-8 * std::max(1.0, std::abs(beta(j))));
      EXPECT_NEAR(m.standard_errors[j], se, 1e-8 * se);
      EXPECT_NEAR(m.t_stats[j], t, 1e-8 * std::max(1.0, std::abs(t)));
      EXPECT_NEAR(m.p_values[j], pv, 1e-8 * std::max(pv, 1e-300) + 1e-300);
    }
  }
}

TEST(Ols, ResidualPropertiesAndAffineInvariance) {
  Rng rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset d = noisy_regression(rng, 60, 3);
    const OlsModel m = ols_fit(d);
    const Vector fitted = m.predict(d.features);
    double resid_sum = 0, ymax = 0;
    for (std::size_t i = 0; i < 60; ++i) {
      resid_sum += d.target[i] - fitted[i];
      ymax = std::max(ymax, std::abs(d.target[i]));
    }
    EXPECT_LE(std::abs(resid_sum), 1e-8 * 60 * ymax);

    Dataset scaled = d;
    for (std::size_t i = 0; i < 60; ++i) scaled.features(i, 1) = 250.0 * d.features(i, 1) - 17.0;
    const Vector refit = ols_fit(scaled).predict(scaled.features);
    for (std::size_t i = 0; i < 60; ++i) EXPECT_NEAR(refit[i], fitted[i], 1e-8);
  }
}

TEST(Ols, SignificantFeatures) {
  Rng rng(23);
  const Dataset d = noisy_regression(rng, 80, 3);
  const OlsModel m = ols_fit(d);
  const auto all = ols_significant_features(m, 1.0 + 1e-9);
  ASSERT_EQ(all.size(), 3u);
  for (std::size_t i = 1; i < all.size(); ++i) {
    const auto idx = [&](const std::string& n) {
      return std::find(m.feature_names.begin(), m.feature_names.end(), n) - m.feature_names.begin() + 1;
    };
    EXPECT_LE(m.p_values[idx(all[i - 1])], m.p_values[idx(all[i])]);
  }
  OlsModel none = m;
  std::fill(none.p_values.begin(), none.p_values.end(), 1.0);
  EXPECT_TRUE(ols_significant_features(none, 0.05).empty());
}

TEST(Ols, CollinearColumnsAreNamed) {
  Rng rng(24);
  Matrix x = random_matrix(rng, 30, 3);
  for (std::size_t i = 0; i < 30; ++i) x(i, 2) = x(i, 0) - 2 * x(i, 1);
  try {
    ols_fit(make_dataset(x, random_vector(rng, 30)));
    FAIL();
  } catch (const RankError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("collinear columns: x"), std::string::npos) << msg;
    EXPECT_EQ(e.rank(), 3u);
  }
}

TEST(Ols, ComplementaryIndicatorsAreDropped) {
  Rng rng(25);
  Matrix x(40, 3);
  Vector y(40);
  for (std::size_t i = 0; i < 40; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = i % 3 == 0 ? 1 : 0;
    x(i, 2) = 1 - x(i, 1);
    y[i] = 2 * x(i, 0) + 3 * x(i, 1) + 0.1 * rng.uniform();
  }
  EXPECT_EQ(complementary_indicator_columns(x), std::vector<std::size_t>{1});
  const Dataset d = make_dataset(x, y);
  EXPECT_THROW(ols_fit(d), RankError);
  const LinearModel lm = fit_linear_model(d);
  EXPECT_EQ(lm.dropped_features, std::vector<std::string>{"x1"});
  EXPECT_EQ(lm.kept_columns, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(lm.predict(x).size(), 40u);
}

TEST(Tree, ConstantTargetIsOneLeaf) {
  Rng rng(31);
  const RegressionTree t = tree_fit(make_dataset(random_matrix(rng, 20, 2), Vector(20, 4.5)), {});
  ASSERT_EQ(t.nodes().size(), 1u);
  EXPECT_EQ(t.root().value, 4.5);
  EXPECT_EQ(tree_importances(t), (Vector{0, 0}));
  const TreeRendering r = tree_render(t, 3, {"a", "b"});
  EXPECT_EQ(r.dot.find("->"), std::string::npos);
}

TEST(Tree, StepFunction) {
  Matrix x(10, 1);
  Vector y(10);
  for (std::size_t i = 0; i < 10; ++i) {
    x(i, 0) = static_cast<double>(i) - 4.5;
    y[i] = x(i, 0) > 0 ? 1 : 0;
  }
  TreeParams p;
  p.max_depth = 1;
  const RegressionTree t = tree_fit(make_dataset(x, y), p);
  ASSERT_EQ(t.nodes().size(), 3u);
  EXPECT_EQ(t.root().feature, 0u);
  EXPECT_DOUBLE_EQ(t.root().threshold, 0.0);
  EXPECT_EQ(t.nodes()[t.root().left].value, 0.0);
  EXPECT_EQ(t.nodes()[t.root().right].value, 1.0);
  EXPECT_EQ(tree_importances(t), (Vector{1}));
}

TEST(Tree, RootSplitMatchesBruteForce) {
  Rng rng(32);
  for (Criterion c : {Criterion::SquaredError, Criterion::AbsoluteError}) {
    for (int trial = 0; trial < 25; ++trial) {
      const std::size_t n = 5 + rng.below(46), p = 1 + rng.below(4);
      Matrix x = random_matrix(rng, n, p);
      // Some repeated values so ties between distinct values are exercised.
      for (std::size_t i = 0; i < n; i += 3) x(i, 0) = std::round(x(i, 0) * 2) / 2;
      const Vector y = random_vector(rng, n, 0, 10);
      TreeParams params;
      params.max_depth = 1;
      params.criterion = c;
      const RegressionTree t = tree_fit(make_dataset(x, y), params);
      const BruteSplit b = brute_force_root(x, y, c);
      ASSERT_FALSE(t.root().is_leaf());
      const double chosen = split_error(x, y, t.root().feature, t.root().threshold, c);
      EXPECT_NEAR(chosen, b.error, 1e-9) << "trial " << trial;
      if (b.near_ties == 0) {
        EXPECT_EQ(t.root().feature, b.feature) << "trial " << trial;
        EXPECT_NEAR(t.root().threshold, b.threshold, 1e-12);
      }
    }
  }
}

TEST(Tree, FullDepthReproducesTrainingTargets) {
  Rng rng(33);
  const Dataset d = make_dataset(random_matrix(rng, 80, 3), random_vector(rng, 80));
  for (Criterion c : {Criterion::SquaredError, Criterion::AbsoluteError}) {
    TreeParams p;
    p.criterion = c;
    const RegressionTree t = tree_fit(d, p);
    EXPECT_EQ(tree_predict(t, d.features), d.target);
    EXPECT_EQ(t.leaf_count(), 80u);
  }
}

TEST(Tree, PredictionIsRowwise) {
  Rng rng(34);
  const Dataset d = noisy_regression(rng, 100, 3);
  TreeParams p;
  p.max_depth = 4;
  const RegressionTree t = tree_fit(d, p);
  const Vector a = tree_predict(t, d.features);
  std::vector<std::size_t> perm(100);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  const Vector b = tree_predict(t, d.features.select_rows(perm));
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(b[i], a[perm[i]]);
  EXPECT_THROW(tree_predict(t, Matrix(2, 5)), ShapeError);
}

TEST(Tree, TrainingLossFallsWithDepth) {
  Rng rng(35);
  const Dataset d = noisy_regression(rng, 200, 4);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t depth = 1; depth <= 10; ++depth) {
    TreeParams p;
    p.max_depth = depth;
    p.min_samples_leaf = 3;
    const double e = training_sse(tree_fit(d, p), d);
    EXPECT_LE(e, prev + 1e-9);
    prev = e;
  }
}

TEST(Tree, PruningPathAndNesting) {
  Rng rng(36);
  const Dataset d = noisy_regression(rng, 150, 3);
  const RegressionTree full = tree_fit(d, {});
  EXPECT_EQ(tree_prune(full, 0.0), full);

  std::vector<double> path;
  const RegressionTree stump = tree_prune(full, 1e9, &path);
  ASSERT_EQ(stump.nodes().size(), 1u);
  EXPECT_NEAR(stump.root().value, std::accumulate(d.target.begin(), d.target.end(), 0.0) / 150, 1e-12);
  for (std::size_t i = 1; i < path.size(); ++i) EXPECT_GE(path[i], path[i - 1] - 1e-12);

  const std::vector<double> oracle = weakest_link_alphas(full);
  ASSERT_EQ(path.size(), oracle.size());
  for (std::size_t i = 0; i < path.size(); ++i) EXPECT_NEAR(path[i], oracle[i], 1e-12);

  const std::vector<double> alphas{0.0, 1e-4, 1e-3, 0.005, 0.01, 0.05, 0.2};
  for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
    const RegressionTree lo = tree_prune(full, alphas[i]);
    const RegressionTree hi = tree_prune(full, alphas[i + 1]);
    EXPECT_TRUE(is_pruned_subtree(hi, 0, lo, 0)) << alphas[i + 1];
    EXPECT_LE(hi.leaf_count(), lo.leaf_count());
  }
}

TEST(Tree, ImportancesSumToOne) {
  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset d = noisy_regression(rng, 60, 4);
    TreeParams p;
    p.max_depth = 1 + trial % 5;
    const Vector imp = tree_importances(tree_fit(d, p));
    EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-12);
    for (double v : imp) EXPECT_GE(v, 0.0);
  }
}

TEST(Tree, RenderingTruncatesAndEmitsBalancedDot) {
  Rng rng(38);
  const Dataset d = noisy_regression(rng, 120, 3);
  const RegressionTree t = tree_fit(d, {});
  const TreeRendering r = tree_render(t, 2, d.feature_names);
  EXPECT_EQ(r.dot.rfind("digraph", 0), 0u);
  EXPECT_EQ(std::count(r.dot.begin(), r.dot.end(), '{'), std::count(r.dot.begin(), r.dot.end(), '}'));
  EXPECT_EQ(std::count(r.dot.begin(), r.dot.end(), '"') % 2, 0);
  EXPECT_NE(r.text.find(d.feature_names[t.root().feature]), std::string::npos);
  // 1 + 2 + 4 split/leaf boxes at most, plus elision markers below depth 2.
  EXPECT_LE(std::count(r.dot.begin(), r.dot.end(), '['), 7 + 8 + 6 + 8);
  EXPECT_LT(r.text.size(), tree_render(t, 20, d.feature_names).text.size());
}

TEST(Tree, ParamsJsonRoundTrip) {
  TreeParams p;
  p.max_depth = 7;
  p.ccp_alpha = 0.01;
  p.criterion = Criterion::AbsoluteError;
  const TreeParams q = tree_params_from_json(to_json(p));
  EXPECT_EQ(q.max_depth, p.max_depth);
  EXPECT_EQ(q.ccp_alpha, p.ccp_alpha);
  EXPECT_EQ(q.criterion, p.criterion);
  EXPECT_FALSE(tree_params_from_json(nlohmann::json::parse(R"({"max_depth": null})")).max_depth);
  EXPECT_THROW(tree_params_from_json(nlohmann::json::parse(R"({"max_depth": -3})")), ConfigError);
  EXPECT_THROW(tree_params_from_json(nlohmann::json::parse(R"({"criterion": "gini"})")), ConfigError);
}

TEST(Forest, DegenerateForestIsATree) {
  Rng rng(41);
  const Dataset d = noisy_regression(rng, 90, 3);
  ForestParams fp;
  fp.n_trees = 1;
  fp.bootstrap = false;
  fp.tree.max_depth = 5;
  const Forest f = forest_fit(d, fp);
  EXPECT_EQ(f.predict(d.features), tree_predict(tree_fit(d, fp.tree), d.features));
}

TEST(Forest, IdenticalTreesWithoutRandomness) {
  Rng rng(42);
  const Dataset d = noisy_regression(rng, 70, 3);
  ForestParams fp;
  fp.n_trees = 5;
  fp.bootstrap = false;
  const Forest f = forest_fit(d, fp);
  for (const auto& t : f.trees) EXPECT_EQ(t, f.trees.front());
  const Vector imp = forest_importances(f);
  const Vector single = tree_importances(f.trees.front());
  for (std::size_t j = 0; j < imp.size(); ++j) EXPECT_NEAR(imp[j], single[j], 1e-12);
}

TEST(Forest, PredictionIsTheMeanOfTrees) {
  Rng rng(43);
  const Dataset d = noisy_regression(rng, 100, 4);
  ForestParams fp;
  fp.n_trees = 7;
  fp.max_features.kind = MaxFeatures::Kind::Sqrt;
  const Forest f = forest_fit(d, fp);
  const Vector p = f.predict(d.features);
  for (std::size_t i = 0; i < 100; ++i) {
    double s = 0;
    for (const auto& t : f.trees) s += t.predict_row(d.features.row(i));
    EXPECT_NEAR(p[i], s / 7, 1e-12);
  }
  const Vector imp = forest_importances(f);
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-12);
}

TEST(Forest, SingleSplitTreesOnOneFeature) {
  Matrix x(40, 3);
  Vector y(40);
  Rng rng(44);
  for (std::size_t i = 0; i < 40; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 1) = i < 20 ? -1 : 1;
    x(i, 2) = rng.uniform();
    y[i] = i < 20 ? 0 : 10;
  }
  ForestParams fp;
  fp.n_trees = 6;
  fp.tree.max_depth = 1;
  fp.bootstrap = false;
  EXPECT_EQ(forest_importances(forest_fit(make_dataset(x, y), fp)), (Vector{0, 1, 0}));
}

TEST(Forest, ThreadCountDoesNotChangeTheResult) {
  Rng rng(45);
  const Dataset d = noisy_regression(rng, 120, 5);
  ForestParams fp;
  fp.n_trees = 12;
  fp.max_features.kind = MaxFeatures::Kind::Log2;
  fp.threads = 1;
  const Forest a = forest_fit(d, fp);
  fp.threads = 4;
  const Forest b = forest_fit(d, fp);
  ASSERT_EQ(a.trees.size(), b.trees.size());
  for (std::size_t i = 0; i < a.trees.size(); ++i) EXPECT_EQ(a.trees[i], b.trees[i]);
  fp.seed = 43;
  const Forest c = forest_fit(d, fp);
  EXPECT_NE(c.predict(d.features), a.predict(d.features));
}

TEST(Forest, MaxFeaturesResolution) {
  EXPECT_EQ(MaxFeatures{}.resolve(16), 16u);
  EXPECT_EQ((MaxFeatures{MaxFeatures::Kind::Sqrt}).resolve(16), 4u);
  EXPECT_EQ((MaxFeatures{MaxFeatures::Kind::Sqrt}).resolve(17), 5u);
  EXPECT_EQ((MaxFeatures{MaxFeatures::Kind::Log2}).resolve(16), 4u);
  EXPECT_EQ((MaxFeatures{MaxFeatures::Kind::Fraction, 0.3}).resolve(16), 4u);
  EXPECT_EQ(MaxFeatures::from_json("sqrt").kind, MaxFeatures::Kind::Sqrt);
  EXPECT_THROW(forest_fit(Dataset{}, {}), ContractError);
}
