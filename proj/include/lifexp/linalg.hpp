#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lifexp/matrix.hpp"

namespace lifexp {

/// Pivot magnitudes at or below this fraction of the largest pivot count
/// as numerically zero.
inline constexpr double kRankTolerance = 1e-10;

/// Full output of a column-pivoted QR least-squares solve.
struct LeastSquaresSolution {
  Vector x;
  /// Diagonal of (AᵀA)⁻¹ in original column order. Needed for coefficient
  /// standard errors.
  Vector inverse_gram_diagonal;
  std::size_t rank = 0;
};

/// Minimizes ‖Ax − b‖₂ by Householder QR with column pivoting.
/// Throws RankError when the numerical rank is below A.cols(); the error
/// message lists the original indices of the columns pivoted out.
LeastSquaresSolution least_squares(const Matrix& a, std::span<const double> b);

/// Convenience wrapper returning only the minimizer.
Vector solve_least_squares(const Matrix& a, std::span<const double> b);

/// Numerical rank of A and the original indices of the columns that the
/// pivoting left behind (empty when full rank).
struct RankReport {
  std::size_t rank = 0;
  std::vector<std::size_t> dependent_columns;
};
RankReport numerical_rank(const Matrix& a);

struct EigenDecomposition {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column j pairs with eigenvalues[j]
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Iterates until every
/// off-diagonal magnitude is at most 1e-12 × ‖S‖_F.
EigenDecomposition eig_symmetric(const Matrix& s);

}  // namespace lifexp
