#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifexp/forest.hpp"
#include "lifexp/ols.hpp"
#include "lifexp/tabular.hpp"
#include "lifexp/tree.hpp"

namespace lifexp {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  double ratio = 0.0;
};

/// Shuffles 0..n−1 with the seeded generator; the first ⌊ratio·n⌋ indices
/// are the training rows.
SplitIndices train_test_split(std::size_t n, double ratio, std::uint64_t seed);

/// k validation folds of shuffled indices; sizes differ by at most one,
/// larger folds first.
std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed);

struct MetricSet {
  std::optional<double> r2;  // undefined for a constant y_true
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
};

MetricSet compute_metrics(std::span<const double> y_true, std::span<const double> y_pred);
/// R² alone; throws ContractError when y_true is constant.
double r2_score(std::span<const double> y_true, std::span<const double> y_pred);

enum class ModelKind { Linear, Tree, Forest };
std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

using FittedModel = std::variant<LinearModel, RegressionTree, Forest>;

Vector predict(const FittedModel& model, const Matrix& x);

/// Fits `kind` with parameters `params` (keys per tree/forest parameter
/// parsers; ignored for the linear model).
FittedModel fit_model(ModelKind kind, const Dataset& train, const nlohmann::json& params);

/// Axes of a Cartesian grid, enumerated in declaration order with the last
/// axis varying fastest.
using ParamGrid = std::vector<std::pair<std::string, std::vector<nlohmann::json>>>;

/// Parses {"name": [values...], ...} preserving key order.
ParamGrid param_grid_from_json(const nlohmann::ordered_json& doc);

struct GridCandidate {
  nlohmann::json params;  // the grid point only
  Vector fold_r2;
  double mean_r2 = 0.0;
};

struct GridResult {
  std::vector<GridCandidate> candidates;
  std::size_t best = 0;
  nlohmann::json best_params;  // base parameters with the winning point applied
  FittedModel model;           // winner refit on the full training set
};

struct GridSearchOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  nlohmann::json base_params = nlohmann::json::object();
  std::size_t threads = 1;  // 0: hardware concurrency
};

/// k-fold cross-validated grid search maximizing mean R². Ties keep the
/// earlier grid point.
GridResult grid_search(const Dataset& train, ModelKind kind, const ParamGrid& grid,
                       const GridSearchOptions& options = {});

struct TimingReport {
  double fit_seconds = 0.0;
  double predict_seconds_total = 0.0;
  double predict_seconds_per_sample = 0.0;
  std::size_t repeats = 0;
};

/// Median wall time of `repeats` runs of `fit` on the monotonic clock.
TimingReport time_fit(const std::function<void()>& fit, std::size_t repeats);
/// Median wall time of `repeats` prediction passes over n_samples rows.
TimingReport time_predict(const std::function<void()>& predict, std::size_t n_samples,
                          std::size_t repeats);

}  // namespace lifexp
