#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifexp/matrix.hpp"
#include "lifexp/tabular.hpp"

namespace lifexp {

class Rng;

enum class Criterion { SquaredError, AbsoluteError };

std::string to_string(Criterion c);
Criterion criterion_from_string(const std::string& name);

struct TreeParams {
  std::optional<std::size_t> max_depth;  // nullopt: unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  double ccp_alpha = 0.0;
  Criterion criterion = Criterion::SquaredError;

  void validate() const;
};

/// Recognised keys: max_depth (integer or null), min_samples_leaf,
/// min_samples_split, ccp_alpha, criterion. Absent keys keep `base`.
TreeParams tree_params_from_json(const nlohmann::json& doc, TreeParams base = {});
nlohmann::json to_json(const TreeParams& params);

/// One node of a fitted tree. Leaves have feature == kLeaf.
struct TreeNode {
  static constexpr std::size_t kLeaf = static_cast<std::size_t>(-1);

  std::size_t feature = kLeaf;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  double value = 0.0;
  std::size_t n_samples = 0;
  double impurity = 0.0;  // variance, or mean absolute deviation from the median
  std::size_t depth = 0;

  bool is_leaf() const { return feature == kLeaf; }
};

/// Fitted regression tree stored as a flat node array; node 0 is the root
/// and children always follow their parent.
class RegressionTree {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, std::size_t n_features, Criterion criterion);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t n_features() const { return n_features_; }
  Criterion criterion() const { return criterion_; }

  double predict_row(std::span<const double> row) const;
  std::size_t leaf_count() const;
  std::size_t depth() const;

  friend bool operator==(const RegressionTree& a, const RegressionTree& b);

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
  Criterion criterion_ = Criterion::SquaredError;
};

/// Greedy CART induction followed by cost-complexity pruning at
/// params.ccp_alpha.
RegressionTree tree_fit(const Dataset& train, const TreeParams& params);

/// Induction on raw arrays. When max_features < p, each node scans a fresh
/// random subset drawn from `rng` (required in that case).
RegressionTree grow_tree(const Matrix& x, std::span<const double> y,
                         const std::vector<std::size_t>& rows, const TreeParams& params,
                         std::size_t max_features, Rng* rng);

/// Weakest-link pruning: repeatedly collapses the internal node with the
/// smallest effective alpha while that alpha is ≤ ccp_alpha. Effective
/// alphas of the collapsed nodes are appended to `alpha_path` if given.
RegressionTree tree_prune(const RegressionTree& tree, double ccp_alpha,
                          std::vector<double>* alpha_path = nullptr);

Vector tree_predict(const RegressionTree& tree, const Matrix& x);

/// Impurity-based importances normalized to sum 1; all zeros for a leaf.
Vector tree_importances(const RegressionTree& tree);

struct TreeRendering {
  std::string text;
  std::string dot;
};

/// Text and DOT views of the top `max_depth` levels; deeper subtrees are
/// replaced by an elision marker.
TreeRendering tree_render(const RegressionTree& tree, std::size_t max_depth,
                          const std::vector<std::string>& feature_names);

nlohmann::json to_json(const RegressionTree& tree);

}  // namespace lifexp
