#include "lifexp/explore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "lifexp/errors.hpp"
#include "lifexp/special.hpp"

namespace lifexp {
namespace {

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

Histogram histogram(std::span<const double> values, std::size_t n_bins) {
  if (values.empty()) throw ContractError("histogram: no values");
  if (n_bins == 0) throw ContractError("histogram: zero bins");
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw ContractError("histogram: non-finite value");
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.bin_edges.resize(n_bins + 1);
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i <= n_bins; ++i) h.bin_edges[i] = lo + width * static_cast<double>(i);
  h.bin_edges.back() = hi;
  h.counts.assign(n_bins, 0);
  for (double v : values) {
    auto bin = static_cast<std::size_t>((v - lo) / width);
    if (bin >= n_bins) bin = n_bins - 1;
    // Guard against rounding in the division; edges are authoritative.
    while (bin > 0 && v < h.bin_edges[bin]) --bin;
    while (bin + 1 < n_bins && v >= h.bin_edges[bin + 1]) ++bin;
    ++h.counts[bin];
  }
  return h;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("pearson: length mismatch");
  if (x.size() < 2) throw ContractError("pearson: need at least two observations");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("pearson: zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const Dataset& dataset, bool include_target) {
  if (dataset.n_samples() < 2) throw ContractError("correlation_matrix: need at least two samples");
  std::vector<Vector> columns;
  CorrelationMatrix out;
  for (std::size_t j = 0; j < dataset.n_features(); ++j) {
    columns.push_back(dataset.features.column(j));
    out.names.push_back(dataset.feature_names[j]);
  }
  if (include_target) {
    columns.push_back(dataset.target);
    out.names.push_back(dataset.target_name);
  }

  const std::size_t m = columns.size();
  std::vector<bool> constant(m, false);
  for (std::size_t j = 0; j < m; ++j) {
    const auto [lo, hi] = std::minmax_element(columns[j].begin(), columns[j].end());
    constant[j] = *lo == *hi;
    if (constant[j]) out.zero_variance.push_back(out.names[j]);
  }

  out.r = Matrix::identity(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const double r = (constant[i] || constant[j]) ? 0.0 : pearson(columns[i], columns[j]);
      out.r(i, j) = r;
      out.r(j, i) = r;
    }
  return out;
}

AnovaResult anova_oneway(const std::vector<Vector>& groups) {
  if (groups.size() < 2) throw ContractError("anova: need at least two groups");
  std::size_t n = 0;
  double total = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) throw ContractError("anova: empty group");
    n += g.size();
    for (double v : g) total += v;
  }
  const std::size_t k = groups.size();
  if (n <= k) throw ContractError("anova: need more observations than groups");
  const double grand = total / static_cast<double>(n);

  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ss_within += (v - m) * (v - m);
  }

  AnovaResult res;
  res.df_between = k - 1;
  res.df_within = n - k;
  const double ms_between = ss_between / static_cast<double>(res.df_between);
  const double ms_within = ss_within / static_cast<double>(res.df_within);
  if (ms_within == 0.0) {
    if (ms_between > 0.0) {
      res.f = std::numeric_limits<double>::infinity();
      res.p = 0.0;
    } else {
      res.f = 0.0;
      res.p = 1.0;
    }
    return res;
  }
  res.f = ms_between / ms_within;
  res.p = f_survival_p(res.f, res.df_between, res.df_within);
  return res;
}

std::vector<Vector> group_by_category(const Table& table, const std::string& numeric,
                                      const std::string& categorical) {
  const auto& values = table.column(numeric).cells;
  const auto& labels = table.column(categorical).cells;
  std::map<std::string, Vector> groups;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (is_missing(values[r]) || is_missing(labels[r])) continue;
    if (!is_number(values[r])) throw SchemaError("anova: column '" + numeric + "' is not numeric");
    // Numeric-coded categories (e.g. 0/1 indicators) are grouped by value.
    std::string key;
    if (is_category(labels[r])) {
      key = std::get<std::string>(labels[r]);
    } else {
      key = std::to_string(std::get<double>(labels[r]));
    }
    groups[key].push_back(std::get<double>(values[r]));
  }
  std::vector<Vector> out;
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

}  // namespace lifexp
