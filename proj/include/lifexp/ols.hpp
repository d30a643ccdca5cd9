#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lifexp/matrix.hpp"
#include "lifexp/tabular.hpp"

namespace lifexp {

/// Ordinary least squares with an intercept and coefficient inference.
/// All per-coefficient vectors have the intercept first.
struct OlsModel {
  std::vector<std::string> feature_names;  // excludes the intercept
  Vector coefficients;
  Vector standard_errors;
  Vector t_stats;
  Vector p_values;
  double residual_variance = 0.0;
  double rss = 0.0;
  std::size_t dof = 0;  // n − p − 1

  Vector predict(const Matrix& x) const;
};

/// Fits y = b₀ + Xb by pivoted QR. Throws RankError naming the collinear
/// columns when the design (ones column prepended) is rank deficient.
OlsModel ols_fit(const Dataset& train);

/// Non-intercept features with p < alpha, most significant first.
std::vector<std::string> ols_significant_features(const OlsModel& model, double alpha);

/// Pairs of 0/1 columns that sum to one on every row duplicate the
/// intercept. Returns the column indices to drop: the earlier column of
/// each such pair.
std::vector<std::size_t> complementary_indicator_columns(const Matrix& x);

/// OLS plus the column bookkeeping needed to predict on the original
/// feature layout after complementary indicators were dropped.
struct LinearModel {
  OlsModel ols;
  std::vector<std::size_t> kept_columns;
  std::vector<std::string> dropped_features;

  Vector predict(const Matrix& x) const;
};

LinearModel fit_linear_model(const Dataset& train);

}  // namespace lifexp
