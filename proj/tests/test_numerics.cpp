#include <cmath>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "lifexp/errors.hpp"
#include "lifexp/linalg.hpp"
#include "lifexp/matrix.hpp"
#include "lifexp/parallel.hpp"
#include "lifexp/special.hpp"
#include "test_util.hpp"

using namespace lifexp;
using lifexp::testing::random_matrix;
using lifexp::testing::random_vector;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

// Beta(a, b) CDF by integrating the density; independent of the continued fraction.
double beta_cdf_quadrature(double a, double b, double x) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double norm = boost::math::beta(a, b);
  auto density = [&](double t) { return std::pow(t, a - 1) * std::pow(1 - t, b - 1) / norm; };
  return integrator.integrate(density, 0.0, x);
}

}  // namespace

TEST(Matrix, ConstructionAndAccess) {
  Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6);
  EXPECT_EQ(m.column(1), (Vector{2, 5}));
  EXPECT_EQ(m.transpose()(2, 1), 6);
  const Matrix p = m * m.transpose();
  EXPECT_DOUBLE_EQ(p(0, 1), 32);
  EXPECT_THROW(m * m, ShapeError);
}

TEST(Matrix, SelectRowsAndColumns) {
  Matrix m{{1, 2}, {3, 4}, {5, 6}};
  const std::vector<std::size_t> rows{2, 0};
  const std::vector<std::size_t> cols{1};
  EXPECT_EQ(m.select_rows(rows), (Matrix{{5, 6}, {1, 2}}));
  EXPECT_EQ(m.select_cols(cols), (Matrix{{2}, {4}, {6}}));
}

TEST(LeastSquares, IdentitySystem) {
  const Vector b{1, 2, 3};
  const Vector x = solve_least_squares(Matrix::identity(3), b);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(x[i], b[i], 1e-14);
}

TEST(LeastSquares, DiagonalSystem) {
  const Vector x = solve_least_squares(Matrix{{2, 0}, {0, 4}}, Vector{2, 8});
  EXPECT_NEAR(x[0], 1.0, 1e-14);
  EXPECT_NEAR(x[1], 2.0, 1e-14);
}

TEST(LeastSquares, NormalEquationResidualOnRandomTallSystems) {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix a = random_matrix(rng, 50, 5);
    const Vector b = random_vector(rng, 50);
    const Vector x = solve_least_squares(a, b);
    const Vector r = [&] {
      Vector ax = a * x;
      for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= b[i];
      return ax;
    }();
    const Vector atr = a.transpose() * r;
    const Vector atb = a.transpose() * b;
    EXPECT_LE(norm2(atr), 1e-8 * norm2(atb));
  }
}

TEST(LeastSquares, SquareSystemsAreSolvedExactly) {
  Rng rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix a = random_matrix(rng, 6, 6);
    const Vector b = random_vector(rng, 6);
    const Vector ax = a * solve_least_squares(a, b);
    double err = 0;
    for (std::size_t i = 0; i < 6; ++i) err += (ax[i] - b[i]) * (ax[i] - b[i]);
    EXPECT_LE(std::sqrt(err), 1e-10 * norm2(b));
  }
}

TEST(LeastSquares, InverseGramDiagonalMatchesEigen) {
  Rng rng(13);
  const Matrix a = random_matrix(rng, 30, 4);
  const Vector b = random_vector(rng, 30);
  const LeastSquaresSolution sol = least_squares(a, b);
  const Eigen::MatrixXd e = to_eigen(a);
  const Eigen::MatrixXd inv = (e.transpose() * e).inverse();
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(sol.inverse_gram_diagonal[j], inv(j, j), 1e-10 * inv(j, j));
}

TEST(LeastSquares, RankDeficiencyIsReported) {
  Matrix a{{1, 2, 3}, {2, 4, 1}, {3, 6, 2}, {4, 8, 5}};  // column 1 = 2 × column 0
  try {
    solve_least_squares(a, Vector{1, 2, 3, 4});
    FAIL() << "expected RankError";
  } catch (const RankError& e) {
    EXPECT_EQ(e.rank(), 2u);
  }
  const RankReport report = numerical_rank(a);
  EXPECT_EQ(report.rank, 2u);
  ASSERT_EQ(report.dependent_columns.size(), 1u);
}

TEST(LeastSquares, RejectsUnderdeterminedSystems) {
  EXPECT_THROW(solve_least_squares(Matrix(2, 3, 1.0), Vector{1, 2}), Error);
}

TEST(Eigen, DiagonalMatrix) {
  const EigenDecomposition d = eig_symmetric(Matrix{{1, 0}, {0, 3}});
  EXPECT_DOUBLE_EQ(d.eigenvalues[0], 3);
  EXPECT_DOUBLE_EQ(d.eigenvalues[1], 1);
  EXPECT_NEAR(std::abs(d.eigenvectors(1, 0)), 1.0, 1e-15);
}

TEST(Eigen, TwoByTwoSymmetric) {
  const EigenDecomposition d = eig_symmetric(Matrix{{2, 1}, {1, 2}});
  EXPECT_NEAR(d.eigenvalues[0], 3, 1e-14);
  EXPECT_NEAR(d.eigenvalues[1], 1, 1e-14);
  const double s = 1 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(d.eigenvectors(0, 0)), s, 1e-12);
  EXPECT_NEAR(d.eigenvectors(0, 0) * d.eigenvectors(1, 0), 0.5, 1e-12);
  EXPECT_NEAR(d.eigenvectors(0, 1) * d.eigenvectors(1, 1), -0.5, 1e-12);
}

TEST(Eigen, RandomSymmetricResidualsTraceAndOrthogonality) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix g = random_matrix(rng, 8, 8);
    const Matrix s = g * g.transpose();
    const EigenDecomposition d = eig_symmetric(s);
    double trace = 0, sum = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      trace += s(i, i);
      sum += d.eigenvalues[i];
      if (i > 0) EXPECT_GE(d.eigenvalues[i - 1], d.eigenvalues[i]);
    }
    EXPECT_NEAR(sum, trace, 1e-9 * std::abs(trace));
    for (std::size_t j = 0; j < 8; ++j) {
      const Vector v = d.eigenvectors.column(j);
      const Vector sv = s * v;
      for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(sv[i], d.eigenvalues[j] * v[i], 1e-9);
      for (std::size_t k = 0; k < 8; ++k)
        EXPECT_NEAR(dot(v, d.eigenvectors.column(k)), j == k ? 1.0 : 0.0, 1e-10);
    }
    // Independent solver.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(s));
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(d.eigenvalues[i], es.eigenvalues()(7 - i), 1e-9);
  }
}

TEST(Eigen, RejectsAsymmetricOrNonSquareInput) {
  EXPECT_THROW(eig_symmetric(Matrix{{1, 2}, {0, 1}}), ContractError);
  EXPECT_THROW(eig_symmetric(Matrix(2, 3)), ContractError);
}

TEST(IncompleteBeta, Boundaries) {
  EXPECT_EQ(regularized_incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(regularized_incomplete_beta(2.0, 3.0, 1.0), 1.0);
  EXPECT_NEAR(regularized_incomplete_beta(1.0, 1.0, 0.5), 0.5, 1e-15);
  for (double x : {0.1, 0.37, 0.9}) EXPECT_NEAR(regularized_incomplete_beta(1.0, 1.0, x), x, 1e-14);
}

TEST(IncompleteBeta, MatchesQuadrature) {
  EXPECT_NEAR(regularized_incomplete_beta(2.5, 4.0, 0.3), beta_cdf_quadrature(2.5, 4.0, 0.3), 1e-10);
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = lifexp::testing::uniform(rng, 0.5, 30.0);
    const double b = lifexp::testing::uniform(rng, 0.5, 30.0);
    const double x = lifexp::testing::uniform(rng, 0.01, 0.99);
    EXPECT_NEAR(regularized_incomplete_beta(a, b, x), beta_cdf_quadrature(a, b, x), 1e-10)
        << "a=" << a << " b=" << b << " x=" << x;
  }
}

TEST(IncompleteBeta, MonotoneInX) {
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = regularized_incomplete_beta(3.5, 0.5, i / 1000.0);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(IncompleteBeta, DomainErrors) {
  EXPECT_THROW(regularized_incomplete_beta(0.0, 1.0, 0.5), ContractError);
  EXPECT_THROW(regularized_incomplete_beta(1.0, -1.0, 0.5), ContractError);
  EXPECT_THROW(regularized_incomplete_beta(1.0, 1.0, 1.5), ContractError);
}

TEST(StudentT, ZeroAndSymmetry) {
  EXPECT_DOUBLE_EQ(student_t_two_sided_p(0.0, 7), 1.0);
  for (double t : {0.3, 1.0, 2.5, 8.0}) EXPECT_DOUBLE_EQ(student_t_two_sided_p(t, 9), student_t_two_sided_p(-t, 9));
  EXPECT_THROW(student_t_two_sided_p(1.0, 0), ContractError);
}

TEST(StudentT, NormalLimit) { EXPECT_NEAR(student_t_two_sided_p(1.96, 1'000'000), 0.05, 1e-3); }

TEST(StudentT, MatchesQuadratureOfDensity) {
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  for (std::uint64_t dof : {1u, 3u, 12u, 40u}) {
    const double nu = static_cast<double>(dof);
    const double c = std::tgamma((nu + 1) / 2) / (std::sqrt(nu * M_PI) * std::tgamma(nu / 2));
    auto density = [&](double s) { return c * std::pow(1 + s * s / nu, -(nu + 1) / 2); };
    for (double t : {0.5, 1.7, 3.2}) {
      const double central = gk.integrate(density, -t, t, 15, 1e-14);
      EXPECT_NEAR(student_t_two_sided_p(t, dof), 1.0 - central, 1e-10) << "dof=" << dof << " t=" << t;
    }
  }
}

TEST(StudentT, DecreasingInAbsoluteT) {
  double prev = 1.0;
  for (int i = 1; i <= 200; ++i) {
    const double p = student_t_two_sided_p(i * 0.05, 25);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(FDistribution, ZeroAndMedianSymmetry) {
  EXPECT_DOUBLE_EQ(f_survival_p(0.0, 3, 9), 1.0);
  for (std::uint64_t d : {1u, 4u, 17u}) EXPECT_NEAR(f_survival_p(1.0, d, d), 0.5, 1e-12);
  EXPECT_THROW(f_survival_p(1.0, 0, 3), ContractError);
  EXPECT_THROW(f_survival_p(-1.0, 2, 3), ContractError);
}

TEST(FDistribution, MatchesQuadratureOfDensity) {
  const double d1 = 2, d2 = 30, f = 3.2;
  const double norm = boost::math::beta(d1 / 2, d2 / 2);
  auto density = [&](double x) {
    if (!(x > 0) || !std::isfinite(x)) return 0.0;
    const double log_num = d1 * std::log(d1 * x) + d2 * std::log(d2) - (d1 + d2) * std::log(d1 * x + d2);
    return std::exp(0.5 * log_num) / (x * norm);
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double tail = integrator.integrate(density, f, std::numeric_limits<double>::infinity());
  EXPECT_NEAR(f_survival_p(f, 2, 30), tail, 1e-8);
}

TEST(Parallel, CoversEveryIndexOnceAndPropagatesErrors) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw ContractError("boom");
                            }),
               ContractError);
}

TEST(Rng, SeededStreamsAreReproducible) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(derive_seed(42, 0), derive_seed(42, 1));
  Rng c(9);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_LT(c.below(7), 7u);
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}
