#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lifexp/matrix.hpp"
#include "lifexp/tabular.hpp"

namespace lifexp {

inline constexpr std::size_t kDefaultHistogramBins = 20;

struct Histogram {
  Vector bin_edges;                 // ascending, counts.size() + 1 entries
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max]; the last bin is closed on the right.
/// A constant input is binned over [v − 0.5, v + 0.5].
Histogram histogram(std::span<const double> values, std::size_t n_bins = kDefaultHistogramBins);

/// Sample Pearson correlation. Throws UndefinedCorrelationError when either
/// input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> names;
  Matrix r;
  /// Columns with zero variance; their off-diagonal entries are 0.
  std::vector<std::string> zero_variance;
};

/// Pairwise Pearson over the dataset's features, with the target appended
/// as the last variable when include_target is set.
CorrelationMatrix correlation_matrix(const Dataset& dataset, bool include_target);

struct AnovaResult {
  double f = 0.0;  // +infinity when within-group variation is zero
  double p = 1.0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
};

AnovaResult anova_oneway(const std::vector<Vector>& groups);

/// Groups a numeric column by the distinct values of a categorical column
/// (categories in sorted order). Rows with a missing cell in either column
/// are skipped.
std::vector<Vector> group_by_category(const Table& table, const std::string& numeric,
                                      const std::string& categorical);

}  // namespace lifexp
