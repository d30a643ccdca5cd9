#include "lifexp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_fields.hpp"
#include "lifexp/errors.hpp"
#include "lifexp/parallel.hpp"
#include "lifexp/rng.hpp"

namespace lifexp {

std::size_t MaxFeatures::resolve(std::size_t p) const {
  if (p == 0) return 0;
  const double dp = static_cast<double>(p);
  std::size_t m = p;
  switch (kind) {
    case Kind::All:
      m = p;
      break;
    case Kind::Sqrt:
      m = static_cast<std::size_t>(std::ceil(std::sqrt(dp)));
      break;
    case Kind::Log2:
      m = static_cast<std::size_t>(std::ceil(std::log2(dp)));
      break;
    case Kind::Fraction:
      m = static_cast<std::size_t>(std::floor(fraction * dp));
      break;
  }
  return std::clamp<std::size_t>(m, 1, p);
}

std::string MaxFeatures::describe() const {
  switch (kind) {
    case Kind::All:
      return "all";
    case Kind::Sqrt:
      return "sqrt";
    case Kind::Log2:
      return "log2";
    case Kind::Fraction:
      return std::to_string(fraction);
  }
  return {};
}

MaxFeatures MaxFeatures::from_json(const nlohmann::json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "all") return {Kind::All, 1.0};
    if (s == "sqrt") return {Kind::Sqrt, 1.0};
    if (s == "log2") return {Kind::Log2, 1.0};
    throw ConfigError("unknown max_features '" + s + "'");
  }
  if (v.is_null()) return {Kind::All, 1.0};
  if (v.is_number()) {
    const double f = v.get<double>();
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("max_features fraction must lie in (0, 1]");
    return {Kind::Fraction, f};
  }
  throw ConfigError("max_features must be \"all\", \"sqrt\", \"log2\" or a fraction");
}

nlohmann::json MaxFeatures::to_json() const {
  if (kind == Kind::Fraction) return fraction;
  return describe();
}

void ForestParams::validate() const {
  if (n_trees == 0) throw ConfigError("n_trees must be at least 1");
  tree.validate();
}

ForestParams forest_params_from_json(const nlohmann::json& doc, ForestParams base) {
  detail::reject_unknown_keys(doc,
                              {"n_trees", "bootstrap", "max_features", "seed", "max_depth", "min_samples_leaf",
                               "min_samples_split", "ccp_alpha", "criterion"},
                              "forest parameters");
  nlohmann::json tree_doc = nlohmann::json::object();
  for (const auto& [key, value] : doc.items())
    if (key != "n_trees" && key != "bootstrap" && key != "max_features" && key != "seed") tree_doc[key] = value;
  base.tree = tree_params_from_json(tree_doc, base.tree);
  try {
    if (doc.contains("n_trees")) base.n_trees = detail::unsigned_field(doc.at("n_trees"), "n_trees");
    if (doc.contains("bootstrap")) base.bootstrap = doc.at("bootstrap").get<bool>();
    if (doc.contains("max_features")) base.max_features = MaxFeatures::from_json(doc.at("max_features"));
    if (doc.contains("seed")) base.seed = detail::unsigned_field(doc.at("seed"), "seed");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("forest parameters: ") + e.what());
  }
  base.validate();
  return base;
}

nlohmann::json to_json(const ForestParams& params) {
  nlohmann::json j = to_json(params.tree);
  j["n_trees"] = params.n_trees;
  j["bootstrap"] = params.bootstrap;
  j["max_features"] = params.max_features.to_json();
  j["seed"] = params.seed;
  return j;
}

Vector Forest::predict(const Matrix& x) const {
  if (trees.empty()) throw ContractError("forest: no trees");
  Vector out(x.rows(), 0.0);
  for (const auto& tree : trees) {
    const Vector p = tree_predict(tree, x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
  }
  for (double& v : out) v /= static_cast<double>(trees.size());
  return out;
}

Forest forest_fit(const Dataset& train, const ForestParams& params) {
  params.validate();
  const std::size_t n = train.n_samples();
  if (n == 0) throw ContractError("forest: empty training set");
  const std::size_t max_features = params.max_features.resolve(train.n_features());

  Forest forest;
  forest.trees.resize(params.n_trees);
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, t));
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    forest.trees[t] = grow_tree(train.features, train.target, rows, params.tree, max_features, &rng);
  });
  return forest;
}

Vector forest_importances(const Forest& forest) {
  if (forest.trees.empty()) return {};
  Vector imp(forest.trees.front().n_features(), 0.0);
  for (const auto& tree : forest.trees) {
    const Vector ti = tree_importances(tree);
    for (std::size_t j = 0; j < imp.size(); ++j) imp[j] += ti[j];
  }
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0)
    for (double& v : imp) v /= total;
  return imp;
}

}  // namespace lifexp
