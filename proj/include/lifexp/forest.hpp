#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifexp/tree.hpp"

namespace lifexp {

/// Number of features scanned at each split.
struct MaxFeatures {
  enum class Kind { All, Sqrt, Log2, Fraction };
  Kind kind = Kind::All;
  double fraction = 1.0;  // Fraction only, in (0, 1]

  /// all → p; sqrt → ⌈√p⌉; log2 → ⌈log₂ p⌉; fraction → max(1, ⌊f·p⌋).
  std::size_t resolve(std::size_t p) const;
  std::string describe() const;

  static MaxFeatures from_json(const nlohmann::json& v);
  nlohmann::json to_json() const;
};

struct ForestParams {
  std::size_t n_trees = 100;
  bool bootstrap = true;
  MaxFeatures max_features{};
  TreeParams tree{};
  std::uint64_t seed = 42;
  std::size_t threads = 1;  // 0: hardware concurrency

  void validate() const;
};

/// Recognised keys: n_trees, bootstrap, max_features, seed, plus every
/// TreeParams key.
ForestParams forest_params_from_json(const nlohmann::json& doc, ForestParams base = {});
nlohmann::json to_json(const ForestParams& params);

struct Forest {
  std::vector<RegressionTree> trees;

  /// Arithmetic mean of the trees' predictions.
  Vector predict(const Matrix& x) const;
};

/// Tree t is grown with its own generator seeded by derive_seed(seed, t),
/// so results do not depend on the thread count.
Forest forest_fit(const Dataset& train, const ForestParams& params);

/// Mean of per-tree importances, renormalized to sum 1.
Vector forest_importances(const Forest& forest);

}  // namespace lifexp
