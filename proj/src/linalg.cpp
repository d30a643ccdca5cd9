#include "lifexp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lifexp/errors.hpp"

namespace lifexp {
namespace {

// Householder QR with column pivoting, R stored in the upper triangle of
// `work`, reflectors kept separately.
struct PivotedQr {
  Matrix work;
  std::vector<Vector> reflectors;  // reflector k acts on rows k..n-1
  std::vector<std::size_t> perm;
  std::size_t rank = 0;
};

PivotedQr pivoted_qr(const Matrix& a) {
  const std::size_t n = a.rows();
  const std::size_t p = a.cols();
  PivotedQr qr{a, {}, std::vector<std::size_t>(p), 0};
  std::iota(qr.perm.begin(), qr.perm.end(), 0);
  Matrix& w = qr.work;
  const std::size_t steps = std::min(n, p);
  qr.reflectors.reserve(steps);

  for (std::size_t k = 0; k < steps; ++k) {
    // Remaining column norms are recomputed each step; p is small.
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t j = k; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += w(i, j) * w(i, j);
      if (s > best_norm) {
        best_norm = s;
        best = j;
      }
    }
    if (best != k) {
      for (std::size_t i = 0; i < n; ++i) std::swap(w(i, k), w(i, best));
      std::swap(qr.perm[k], qr.perm[best]);
    }

    Vector v(n - k);
    for (std::size_t i = k; i < n; ++i) v[i - k] = w(i, k);
    const double x_norm = std::sqrt(best_norm);
    if (x_norm == 0.0) {
      qr.reflectors.emplace_back(n - k, 0.0);
      continue;
    }
    const double alpha = v[0] > 0 ? -x_norm : x_norm;
    v[0] -= alpha;
    const double v_norm_sq = dot(v, v);
    for (std::size_t j = k; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += v[i - k] * w(i, j);
      const double f = 2.0 * s / v_norm_sq;
      for (std::size_t i = k; i < n; ++i) w(i, j) -= f * v[i - k];
    }
    qr.reflectors.push_back(std::move(v));
  }

  const double lead = steps > 0 ? std::abs(w(0, 0)) : 0.0;
  while (qr.rank < steps && lead > 0.0 &&
         std::abs(w(qr.rank, qr.rank)) > kRankTolerance * lead)
    ++qr.rank;
  return qr;
}

std::string describe_columns(const std::vector<std::size_t>& cols) {
  std::string out;
  for (std::size_t c : cols) {
    if (!out.empty()) out += ", ";
    out += std::to_string(c);
  }
  return out;
}

}  // namespace

RankReport numerical_rank(const Matrix& a) {
  const PivotedQr qr = pivoted_qr(a);
  RankReport report{qr.rank, {}};
  for (std::size_t k = qr.rank; k < a.cols(); ++k)
    report.dependent_columns.push_back(qr.perm[k]);
  std::sort(report.dependent_columns.begin(), report.dependent_columns.end());
  return report;
}

LeastSquaresSolution least_squares(const Matrix& a, std::span<const double> b) {
  const std::size_t n = a.rows();
  const std::size_t p = a.cols();
  if (b.size() != n) throw ShapeError("least squares: rhs length differs from row count");
  if (n < p) throw ContractError("least squares: fewer rows than columns");

  const PivotedQr qr = pivoted_qr(a);
  if (qr.rank < p) {
    std::vector<std::size_t> dependent(qr.perm.begin() + static_cast<long>(qr.rank),
                                       qr.perm.end());
    std::sort(dependent.begin(), dependent.end());
    throw RankError("least squares: numerical rank " + std::to_string(qr.rank) + " < " +
                        std::to_string(p) + "; dependent columns [" +
                        describe_columns(dependent) + "]",
                    qr.rank);
  }

  Vector qtb(b.begin(), b.end());
  for (std::size_t k = 0; k < qr.reflectors.size(); ++k) {
    const Vector& v = qr.reflectors[k];
    const double v_norm_sq = dot(v, v);
    if (v_norm_sq == 0.0) continue;
    double s = 0.0;
    for (std::size_t i = k; i < n; ++i) s += v[i - k] * qtb[i];
    const double f = 2.0 * s / v_norm_sq;
    for (std::size_t i = k; i < n; ++i) qtb[i] -= f * v[i - k];
  }

  const Matrix& r = qr.work;
  Vector z(p);
  for (std::size_t k = p; k-- > 0;) {
    double s = qtb[k];
    for (std::size_t j = k + 1; j < p; ++j) s -= r(k, j) * z[j];
    z[k] = s / r(k, k);
  }

  // R⁻¹ by back substitution, one column at a time.
  Matrix r_inv(p, p);
  for (std::size_t col = 0; col < p; ++col) {
    for (std::size_t k = col + 1; k-- > 0;) {
      double s = k == col ? 1.0 : 0.0;
      for (std::size_t j = k + 1; j <= col; ++j) s -= r(k, j) * r_inv(j, col);
      r_inv(k, col) = s / r(k, k);
    }
  }

  LeastSquaresSolution out;
  out.x.assign(p, 0.0);
  out.inverse_gram_diagonal.assign(p, 0.0);
  out.rank = qr.rank;
  for (std::size_t k = 0; k < p; ++k) {
    out.x[qr.perm[k]] = z[k];
    double s = 0.0;
    for (std::size_t j = k; j < p; ++j) s += r_inv(k, j) * r_inv(k, j);
    out.inverse_gram_diagonal[qr.perm[k]] = s;
  }
  return out;
}

Vector solve_least_squares(const Matrix& a, std::span<const double> b) {
  return least_squares(a, b).x;
}

EigenDecomposition eig_symmetric(const Matrix& s) {
  const std::size_t n = s.rows();
  if (s.cols() != n) throw ContractError("eig_symmetric: matrix is not square");
  if (!s.all_finite()) throw ContractError("eig_symmetric: non-finite entry");
  const double fro = frobenius_norm(s);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(s(i, j) - s(j, i)) > 1e-12 * fro)
        throw ContractError("eig_symmetric: matrix is not symmetric");

  Matrix a = s;
  Matrix v = Matrix::identity(n);
  const double off_tol = 1e-12 * fro;
  constexpr int kMaxSweeps = 100;

  auto max_off_diagonal = [&] {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) m = std::max(m, std::abs(a(i, j)));
    return m;
  };

  int sweep = 0;
  while (max_off_diagonal() > off_tol) {
    if (++sweep > kMaxSweeps) throw ConvergenceError("eig_symmetric: Jacobi sweeps exhausted");
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        // A ← Jᵀ A J with J the (p,q) rotation.
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.eigenvectors(k, j) = v(k, order[j]);
  }
  return out;
}

}  // namespace lifexp
