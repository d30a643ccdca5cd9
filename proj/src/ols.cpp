#include "lifexp/ols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lifexp/errors.hpp"
#include "lifexp/linalg.hpp"
#include "lifexp/special.hpp"

namespace lifexp {
namespace {

Matrix design_with_intercept(const Matrix& x) {
  Matrix a(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    a(r, 0) = 1.0;
    for (std::size_t j = 0; j < x.cols(); ++j) a(r, j + 1) = x(r, j);
  }
  return a;
}

bool is_indicator(const Matrix& x, std::size_t j) {
  for (std::size_t r = 0; r < x.rows(); ++r)
    if (x(r, j) != 0.0 && x(r, j) != 1.0) return false;
  return true;
}

}  // namespace

Vector OlsModel::predict(const Matrix& x) const {
  if (x.cols() + 1 != coefficients.size())
    throw ShapeError("ols predict: expected " + std::to_string(coefficients.size() - 1) +
                     " features, got " + std::to_string(x.cols()));
  Vector out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = coefficients[0];
    for (std::size_t j = 0; j < x.cols(); ++j) s += coefficients[j + 1] * x(r, j);
    out[r] = s;
  }
  return out;
}

OlsModel ols_fit(const Dataset& train) {
  const std::size_t n = train.n_samples();
  const std::size_t p = train.n_features();
  if (n <= p + 1)
    throw ContractError("ols: need more than p + 1 = " + std::to_string(p + 1) +
                        " samples, got " + std::to_string(n));
  const Matrix a = design_with_intercept(train.features);

  LeastSquaresSolution sol;
  try {
    sol = least_squares(a, train.target);
  } catch (const RankError& e) {
    const RankReport rank = numerical_rank(a);
    std::string names;
    for (std::size_t c : rank.dependent_columns) {
      if (!names.empty()) names += ", ";
      names += c == 0 ? std::string("(intercept)") : train.feature_names[c - 1];
    }
    throw RankError("ols: design matrix has rank " + std::to_string(rank.rank) + " of " +
                        std::to_string(p + 1) + "; collinear columns: " + names,
                    rank.rank);
  }

  OlsModel m;
  m.feature_names = train.feature_names;
  m.coefficients = std::move(sol.x);
  m.dof = n - p - 1;
  const Vector fitted = a * m.coefficients;
  for (std::size_t r = 0; r < n; ++r) {
    const double e = train.target[r] - fitted[r];
    m.rss += e * e;
  }
  m.residual_variance = m.rss / static_cast<double>(m.dof);

  const std::size_t q = p + 1;
  m.standard_errors.resize(q);
  m.t_stats.resize(q);
  m.p_values.resize(q);
  for (std::size_t j = 0; j < q; ++j) {
    const double se = std::sqrt(m.residual_variance * sol.inverse_gram_diagonal[j]);
    m.standard_errors[j] = se;
    if (se > 0.0) {
      m.t_stats[j] = m.coefficients[j] / se;
      m.p_values[j] = student_t_two_sided_p(m.t_stats[j], m.dof);
    } else if (m.coefficients[j] == 0.0) {
      m.t_stats[j] = 0.0;
      m.p_values[j] = 1.0;
    } else {
      // Exact fit: the coefficient is determined without error.
      m.t_stats[j] = std::copysign(std::numeric_limits<double>::infinity(), m.coefficients[j]);
      m.p_values[j] = 0.0;
    }
  }
  return m;
}

std::vector<std::string> ols_significant_features(const OlsModel& model, double alpha) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 1; j < model.p_values.size(); ++j)
    if (model.p_values[j] < alpha) idx.push_back(j);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return model.p_values[a] < model.p_values[b];
  });
  std::vector<std::string> names;
  for (std::size_t j : idx) names.push_back(model.feature_names[j - 1]);
  return names;
}

std::vector<std::size_t> complementary_indicator_columns(const Matrix& x) {
  std::vector<std::size_t> drop;
  std::vector<bool> used(x.cols(), false);
  for (std::size_t i = 0; i < x.cols(); ++i) {
    if (used[i] || !is_indicator(x, i)) continue;
    for (std::size_t j = i + 1; j < x.cols(); ++j) {
      if (used[j] || !is_indicator(x, j)) continue;
      bool complementary = x.rows() > 0;
      for (std::size_t r = 0; r < x.rows() && complementary; ++r)
        complementary = x(r, i) + x(r, j) == 1.0;
      if (complementary) {
        used[i] = used[j] = true;
        drop.push_back(i);
        break;
      }
    }
  }
  return drop;
}

Vector LinearModel::predict(const Matrix& x) const {
  return ols.predict(x.select_cols(kept_columns));
}

LinearModel fit_linear_model(const Dataset& train) {
  const std::vector<std::size_t> drop = complementary_indicator_columns(train.features);
  LinearModel lm;
  Dataset reduced;
  reduced.target = train.target;
  reduced.target_name = train.target_name;
  for (std::size_t j = 0; j < train.n_features(); ++j) {
    if (std::find(drop.begin(), drop.end(), j) != drop.end()) {
      lm.dropped_features.push_back(train.feature_names[j]);
      continue;
    }
    lm.kept_columns.push_back(j);
    reduced.feature_names.push_back(train.feature_names[j]);
  }
  reduced.features = train.features.select_cols(lm.kept_columns);
  lm.ols = ols_fit(reduced);
  return lm;
}

}  // namespace lifexp
