#include "lifexp/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "lifexp/errors.hpp"
#include "lifexp/parallel.hpp"
#include "lifexp/rng.hpp"

namespace lifexp {

SplitIndices train_test_split(std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ContractError("split ratio must lie in (0, 1)");
  if (n < 2) throw ContractError("train_test_split: need at least two rows");
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  if (n_train == 0 || n_train == n)
    throw ContractError("train_test_split: ratio " + std::to_string(ratio) + " leaves an empty side for n = " +
                        std::to_string(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  SplitIndices s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
  s.test.assign(idx.begin() + static_cast<long>(n_train), idx.end());
  s.seed = seed;
  s.ratio = ratio;
  return s;
}

std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n)
    throw ContractError("kfold: need 2 <= k <= n; k = " + std::to_string(k) + ", n = " + std::to_string(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(idx.begin() + static_cast<long>(pos), idx.begin() + static_cast<long>(pos + size));
    pos += size;
  }
  return folds;
}

MetricSet compute_metrics(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw ContractError("metrics: length mismatch");
  if (y_true.empty()) throw ContractError("metrics: empty input");
  const double n = static_cast<double>(y_true.size());
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / n;
  double abs_sum = 0.0, ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true[i] - y_pred[i];
    abs_sum += std::abs(e);
    ss_res += e * e;
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  MetricSet m;
  m.mae = abs_sum / n;
  m.mse = ss_res / n;
  m.rmse = std::sqrt(m.mse);
  if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
  return m;
}

double r2_score(std::span<const double> y_true, std::span<const double> y_pred) {
  const MetricSet m = compute_metrics(y_true, y_pred);
  if (!m.r2) throw ContractError("R² undefined: constant target");
  return *m.r2;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear:
      return "lr";
    case ModelKind::Tree:
      return "tree";
    case ModelKind::Forest:
      return "forest";
  }
  return {};
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "lr") return ModelKind::Linear;
  if (name == "tree") return ModelKind::Tree;
  if (name == "forest") return ModelKind::Forest;
  throw ConfigError("unknown model '" + name + "'");
}

Vector predict(const FittedModel& model, const Matrix& x) {
  return std::visit(
      [&](const auto& m) -> Vector {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RegressionTree>)
          return tree_predict(m, x);
        else
          return m.predict(x);
      },
      model);
}

FittedModel fit_model(ModelKind kind, const Dataset& train, const nlohmann::json& params) {
  switch (kind) {
    case ModelKind::Linear:
      return fit_linear_model(train);
    case ModelKind::Tree:
      return tree_fit(train, tree_params_from_json(params));
    case ModelKind::Forest:
      return forest_fit(train, forest_params_from_json(params));
  }
  throw ContractError("unknown model kind");
}

ParamGrid param_grid_from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_object()) throw ConfigError("parameter grid must be a JSON object");
  ParamGrid grid;
  for (const auto& [name, values] : doc.items()) {
    if (!values.is_array() || values.empty())
      throw ConfigError("grid axis '" + name + "' must be a non-empty array");
    std::vector<nlohmann::json> axis;
    for (const auto& v : values) axis.push_back(nlohmann::json::parse(v.dump()));
    grid.emplace_back(name, std::move(axis));
  }
  return grid;
}

GridResult grid_search(const Dataset& train, ModelKind kind, const ParamGrid& grid,
                       const GridSearchOptions& options) {
  if (grid.empty()) throw ConfigError("grid search: empty grid");
  std::size_t points = 1;
  for (const auto& [name, values] : grid) {
    if (values.empty()) throw ConfigError("grid search: axis '" + name + "' is empty");
    points *= values.size();
  }
  const auto folds = kfold(train.n_samples(), options.folds, options.seed);

  std::vector<nlohmann::json> point_params(points);
  std::vector<nlohmann::json> full_params(points);
  for (std::size_t p = 0; p < points; ++p) {
    nlohmann::json point = nlohmann::json::object();
    std::size_t rest = p;
    for (std::size_t a = grid.size(); a-- > 0;) {
      const auto& [name, values] = grid[a];
      point[name] = values[rest % values.size()];
      rest /= values.size();
    }
    nlohmann::json merged = options.base_params.is_object() ? options.base_params : nlohmann::json::object();
    merged.update(point);
    point_params[p] = std::move(point);
    full_params[p] = std::move(merged);
  }

  // Training sets for each fold are shared across grid points.
  std::vector<Dataset> fold_train(folds.size());
  std::vector<Dataset> fold_valid(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> in_fold(train.n_samples(), false);
    for (std::size_t i : folds[f]) in_fold[i] = true;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < train.n_samples(); ++i)
      if (!in_fold[i]) rest.push_back(i);
    fold_train[f] = train.subset(rest);
    fold_valid[f] = train.subset(folds[f]);
  }

  Vector scores(points * folds.size());
  parallel_for(scores.size(), options.threads, [&](std::size_t task) {
    const std::size_t p = task / folds.size();
    const std::size_t f = task % folds.size();
    try {
      const FittedModel m = fit_model(kind, fold_train[f], full_params[p]);
      scores[task] = r2_score(fold_valid[f].target, predict(m, fold_valid[f].features));
    } catch (const std::exception& e) {
      throw Error("grid search: parameter point " + point_params[p].dump() + " failed: " + e.what());
    }
  });

  GridResult result;
  for (std::size_t p = 0; p < points; ++p) {
    GridCandidate c;
    c.params = point_params[p];
    c.fold_r2.assign(scores.begin() + static_cast<long>(p * folds.size()),
                     scores.begin() + static_cast<long>((p + 1) * folds.size()));
    c.mean_r2 = std::accumulate(c.fold_r2.begin(), c.fold_r2.end(), 0.0) /
                static_cast<double>(folds.size());
    if (p > 0 && c.mean_r2 > result.candidates[result.best].mean_r2) result.best = p;
    result.candidates.push_back(std::move(c));
  }
  result.best_params = full_params[result.best];
  result.model = fit_model(kind, train, result.best_params);
  return result;
}

namespace {

double median(Vector v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Vector run_timed(const std::function<void()>& fn, std::size_t repeats) {
  if (repeats == 0) throw ContractError("timing: repeats must be at least 1");
  Vector seconds;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    seconds.push_back(std::chrono::duration<double>(stop - start).count());
  }
  return seconds;
}

}  // namespace

TimingReport time_fit(const std::function<void()>& fit, std::size_t repeats) {
  TimingReport t;
  t.fit_seconds = median(run_timed(fit, repeats));
  t.repeats = repeats;
  return t;
}

TimingReport time_predict(const std::function<void()>& predict_fn, std::size_t n_samples,
                          std::size_t repeats) {
  if (n_samples == 0) throw ContractError("timing: zero samples");
  TimingReport t;
  t.predict_seconds_total = median(run_timed(predict_fn, repeats));
  t.predict_seconds_per_sample = t.predict_seconds_total / static_cast<double>(n_samples);
  t.repeats = repeats;
  return t;
}

}  // namespace lifexp
