#include "lifexp/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "json_fields.hpp"
#include "lifexp/errors.hpp"
#include "lifexp/rng.hpp"

namespace lifexp {

std::string to_string(Criterion c) {
  return c == Criterion::SquaredError ? "squared_error" : "absolute_error";
}

Criterion criterion_from_string(const std::string& name) {
  if (name == "squared_error") return Criterion::SquaredError;
  if (name == "absolute_error") return Criterion::AbsoluteError;
  throw ConfigError("unknown split criterion '" + name + "'");
}

void TreeParams::validate() const {
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be at least 2");
  if (!(ccp_alpha >= 0.0) || !std::isfinite(ccp_alpha))
    throw ConfigError("ccp_alpha must be a finite non-negative number");
}

TreeParams tree_params_from_json(const nlohmann::json& doc, TreeParams base) {
  detail::reject_unknown_keys(doc, {"max_depth", "min_samples_leaf", "min_samples_split", "ccp_alpha", "criterion"},
                              "tree parameters");
  try {
    if (doc.contains("max_depth")) {
      const auto& v = doc.at("max_depth");
      if (v.is_null() || (v.is_string() && v.get<std::string>() == "unlimited"))
        base.max_depth.reset();
      else
        base.max_depth = detail::unsigned_field(v, "max_depth");
    }
    if (doc.contains("min_samples_leaf")) base.min_samples_leaf = detail::unsigned_field(doc.at("min_samples_leaf"), "min_samples_leaf");
    if (doc.contains("min_samples_split"))
      base.min_samples_split = detail::unsigned_field(doc.at("min_samples_split"), "min_samples_split");
    if (doc.contains("ccp_alpha")) base.ccp_alpha = doc.at("ccp_alpha").get<double>();
    if (doc.contains("criterion")) base.criterion = criterion_from_string(doc.at("criterion").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("tree parameters: ") + e.what());
  }
  base.validate();
  return base;
}

nlohmann::json to_json(const TreeParams& params) {
  return {
      {"max_depth", params.max_depth ? nlohmann::json(*params.max_depth) : nlohmann::json(nullptr)},
      {"min_samples_leaf", params.min_samples_leaf},
      {"min_samples_split", params.min_samples_split},
      {"ccp_alpha", params.ccp_alpha},
      {"criterion", to_string(params.criterion)},
  };
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, std::size_t n_features,
                               Criterion criterion)
    : nodes_(std::move(nodes)), n_features_(n_features), criterion_(criterion) {
  if (nodes_.empty()) throw ContractError("tree must have at least one node");
}

double RegressionTree::predict_row(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf())
    i = row[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
  return nodes_[i].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t RegressionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

bool operator==(const RegressionTree& a, const RegressionTree& b) {
  if (a.n_features_ != b.n_features_ || a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const auto& x = a.nodes_[i];
    const auto& y = b.nodes_[i];
    if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left ||
        x.right != y.right || x.value != y.value || x.n_samples != y.n_samples ||
        x.impurity != y.impurity)
      return false;
  }
  return true;
}

namespace {

// Fenwick tree over ranks 0..n-1 holding counts and value sums.
class RankIndex {
 public:
  // Empty index over n ranks.
  void reset(std::size_t n) {
    count_.assign(n + 1, 0);
    sum_.assign(n + 1, 0.0);
    log_ = 0;
    while ((std::size_t{1} << (log_ + 1)) <= n) ++log_;
  }

  void add(std::size_t rank, long delta, double value) {
    for (std::size_t i = rank + 1; i < count_.size(); i += i & (~i + 1)) {
      count_[i] += delta;
      sum_[i] += static_cast<double>(delta) * value;
    }
  }

  double prefix_sum(std::size_t rank) const {
    double s = 0.0;
    for (std::size_t i = rank + 1; i > 0; i -= i & (~i + 1)) s += sum_[i];
    return s;
  }

  // Rank of the k-th smallest element present (k is 1-based).
  std::size_t kth(long k) const {
    std::size_t pos = 0;
    for (std::size_t step = std::size_t{1} << log_; step > 0; step >>= 1) {
      if (pos + step < count_.size() && count_[pos + step] < k) {
        pos += step;
        k -= count_[pos];
      }
    }
    return pos;  // 0-based rank
  }

 private:
  std::vector<long> count_;
  std::vector<double> sum_;
  std::size_t log_ = 0;
};

struct SplitCandidate {
  std::size_t feature = TreeNode::kLeaf;
  double threshold = 0.0;
  double decrease = 0.0;  // weighted impurity decrease
  std::size_t n_left = 0;
};

// Samples are the positions 0..n-1 of the tree's row list (bootstrap
// duplicates are distinct samples). Each feature keeps its samples sorted
// by (value, sample); a node owns the segment [start, end) of every such
// array, and children are formed by stable partition, so no node re-sorts.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const TreeParams& params,
              std::size_t max_features, Rng* rng)
      : x_(x), y_(y), params_(params), max_features_(max_features), rng_(rng) {}

  std::vector<TreeNode> build(const std::vector<std::size_t>& rows) {
    n_ = rows.size();
    p_ = x_.cols();
    values_.resize(p_ * n_);
    targets_.resize(n_);
    for (std::size_t s = 0; s < n_; ++s) {
      targets_[s] = y_[rows[s]];
      for (std::size_t f = 0; f < p_; ++f) values_[f * n_ + s] = x_(rows[s], f);
    }
    samples_.resize(n_);
    std::iota(samples_.begin(), samples_.end(), 0);
    order_.assign(p_ * n_, 0);
    for (std::size_t f = 0; f < p_; ++f) {
      auto first = order_.begin() + static_cast<long>(f * n_);
      std::iota(first, first + static_cast<long>(n_), 0);
      const double* v = values_.data() + f * n_;
      std::sort(first, first + static_cast<long>(n_),
                [v](std::size_t a, std::size_t b) { return v[a] < v[b] || (v[a] == v[b] && a < b); });
    }
    if (params_.criterion == Criterion::AbsoluteError) {
      y_order_ = samples_;
      std::sort(y_order_.begin(), y_order_.end(), [this](std::size_t a, std::size_t b) {
        return targets_[a] < targets_[b] || (targets_[a] == targets_[b] && a < b);
      });
      rank_.resize(n_);
    }
    goes_left_.resize(n_);
    scratch_.resize(n_);
    nodes_.clear();
    grow(0, n_, 0);
    return std::move(nodes_);
  }

 private:
  // Sum of squared deviations from the mean, or absolute deviations from
  // the median, over the node's samples.
  void node_stats(std::size_t start, std::size_t end, TreeNode& node, double& total_error) const {
    const std::size_t n = end - start;
    node.n_samples = n;
    if (params_.criterion == Criterion::SquaredError) {
      double s = 0.0;
      for (std::size_t i = start; i < end; ++i) s += targets_[samples_[i]];
      const double mean = s / static_cast<double>(n);
      double sse = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const double d = targets_[samples_[i]] - mean;
        sse += d * d;
      }
      node.value = mean;
      total_error = sse;
    } else {
      auto at = [&](std::size_t k) { return targets_[y_order_[start + k]]; };
      node.value = n % 2 == 1 ? at(n / 2) : 0.5 * (at(n / 2 - 1) + at(n / 2));
      const double lower = at((n - 1) / 2);
      double sad = 0.0;
      for (std::size_t k = 0; k < n; ++k) sad += std::abs(at(k) - lower);
      total_error = sad;
    }
    node.impurity = total_error / static_cast<double>(n);
  }

  void stable_partition(std::vector<std::size_t>& arr, std::size_t offset, std::size_t start,
                        std::size_t end) {
    std::size_t l = offset + start, r = 0;
    for (std::size_t i = offset + start; i < offset + end; ++i) {
      const std::size_t s = arr[i];
      if (goes_left_[s])
        arr[l++] = s;
      else
        scratch_[r++] = s;
    }
    std::copy(scratch_.begin(), scratch_.begin() + static_cast<long>(r), arr.begin() + static_cast<long>(l));
  }

  std::size_t grow(std::size_t start, std::size_t end, std::size_t depth) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    TreeNode node;
    node.depth = depth;
    double total_error = 0.0;
    node_stats(start, end, node, total_error);

    const std::size_t n = end - start;
    bool pure = true;
    const double first = targets_[samples_[start]];
    for (std::size_t i = start; i < end; ++i)
      if (targets_[samples_[i]] != first) {
        pure = false;
        break;
      }
    const bool can_split = !pure && n >= params_.min_samples_split &&
                           n >= 2 * params_.min_samples_leaf &&
                           (!params_.max_depth || depth < *params_.max_depth);
    SplitCandidate best;
    if (can_split) best = find_split(start, end, total_error);

    if (best.feature == TreeNode::kLeaf) {
      nodes_[id] = node;
      return id;
    }

    const double* v = values_.data() + best.feature * n_;
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t s = samples_[i];
      goes_left_[s] = v[s] <= best.threshold;
    }
    stable_partition(samples_, 0, start, end);
    for (std::size_t f = 0; f < p_; ++f) stable_partition(order_, f * n_, start, end);
    if (params_.criterion == Criterion::AbsoluteError) stable_partition(y_order_, 0, start, end);
    const std::size_t mid = start + best.n_left;

    node.feature = best.feature;
    node.threshold = best.threshold;
    nodes_[id] = node;
    const std::size_t left = grow(start, mid, depth + 1);
    const std::size_t right = grow(mid, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> features(p_);
    std::iota(features.begin(), features.end(), 0);
    if (max_features_ < p_) {
      // Random visiting order; find_split stops after max_features
      // non-constant features.
      rng_->shuffle(std::span<std::size_t>(features));
    }
    return features;
  }

  SplitCandidate find_split(std::size_t start, std::size_t end, double parent_error) {
    const std::size_t n = end - start;
    const std::size_t min_leaf = params_.min_samples_leaf;
    SplitCandidate best;

    std::vector<double> y_sorted;
    if (params_.criterion == Criterion::AbsoluteError) {
      y_sorted.resize(n);
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t s = y_order_[start + k];
        rank_[s] = k;
        y_sorted[k] = targets_[s];
      }
    }
    double parent_mean = 0.0;
    for (std::size_t i = start; i < end; ++i) parent_mean += targets_[samples_[i]];
    parent_mean /= static_cast<double>(n);
    double total_s = 0.0, total_ss = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const double d = targets_[samples_[i]] - parent_mean;
      total_s += d;
      total_ss += d * d;
    }

    std::size_t visited = 0;
    for (std::size_t f : candidate_features()) {
      if (max_features_ < p_ && visited >= max_features_) break;
      const std::size_t* ord = order_.data() + f * n_ + start;
      const double* v = values_.data() + f * n_;
      if (v[ord[0]] == v[ord[n - 1]]) continue;  // constant in this node
      ++visited;

      auto consider = [&](std::size_t i, double left_error, double right_error) {
        const double a = v[ord[i]];
        const double b = v[ord[i + 1]];
        double threshold = 0.5 * (a + b);
        if (threshold >= b) threshold = a;
        const double decrease = (parent_error - left_error - right_error) / static_cast<double>(n);
        const bool better =
            decrease > best.decrease ||
            (best.feature != TreeNode::kLeaf && decrease == best.decrease &&
             (f < best.feature || (f == best.feature && threshold < best.threshold)));
        if (better && decrease > 0.0) best = {f, threshold, decrease, i + 1};
      };

      if (params_.criterion == Criterion::SquaredError) {
        double s = 0.0, ss = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
          const double d = targets_[ord[i]] - parent_mean;
          s += d;
          ss += d * d;
          const std::size_t nl = i + 1;
          const std::size_t nr = n - nl;
          if (nl < min_leaf) continue;
          if (nr < min_leaf) break;
          if (v[ord[i]] == v[ord[i + 1]]) continue;
          const double left_error = std::max(0.0, ss - s * s / static_cast<double>(nl));
          const double rs = total_s - s;
          const double right_error =
              std::max(0.0, (total_ss - ss) - rs * rs / static_cast<double>(nr));
          consider(i, left_error, right_error);
        }
      } else {
        RankIndex& left = left_index_;
        RankIndex& right = right_index_;
        left.reset(n);
        right.reset(n);
        double all_total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          all_total += y_sorted[k];
          right.add(k, 1, y_sorted[k]);
        }
        double left_total = 0.0;
        auto sad = [&](const RankIndex& idx, std::size_t count, double total) {
          const long k = static_cast<long>((count - 1) / 2) + 1;
          const std::size_t r = idx.kth(k);
          const double m = y_sorted[r];
          const double below = idx.prefix_sum(r);
          const double c_below = static_cast<double>(k);
          return m * c_below - below + (total - below) - m * (static_cast<double>(count) - c_below);
        };
        for (std::size_t i = 0; i + 1 < n; ++i) {
          const std::size_t rank = rank_[ord[i]];
          left.add(rank, 1, y_sorted[rank]);
          right.add(rank, -1, y_sorted[rank]);
          left_total += y_sorted[rank];
          const std::size_t nl = i + 1;
          const std::size_t nr = n - nl;
          if (nl < min_leaf) continue;
          if (nr < min_leaf) break;
          if (v[ord[i]] == v[ord[i + 1]]) continue;
          const double left_error = std::max(0.0, sad(left, nl, left_total));
          const double right_error = std::max(0.0, sad(right, nr, all_total - left_total));
          consider(i, left_error, right_error);
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const TreeParams& params_;
  std::size_t max_features_;
  Rng* rng_;

  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<double> values_;       // feature-major, indexed by sample
  std::vector<double> targets_;      // by sample
  std::vector<std::size_t> samples_; // node segments in sample order
  std::vector<std::size_t> order_;   // per feature, node segments sorted by value
  std::vector<std::size_t> y_order_; // node segments sorted by target (absolute error)
  std::vector<std::size_t> rank_;    // sample -> rank of its target within the node
  std::vector<char> goes_left_;
  std::vector<std::size_t> scratch_;
  RankIndex left_index_, right_index_;
  std::vector<TreeNode> nodes_;
};

// Copies the subtree of `src` reachable without passing a collapsed node,
// in preorder, turning collapsed nodes into leaves.
std::size_t copy_pruned(const std::vector<TreeNode>& src, const std::vector<bool>& collapsed,
                        std::size_t i, std::vector<TreeNode>& out) {
  const std::size_t id = out.size();
  out.push_back(src[i]);
  if (src[i].is_leaf() || collapsed[i]) {
    out[id].feature = TreeNode::kLeaf;
    out[id].left = out[id].right = 0;
    out[id].threshold = 0.0;
    return id;
  }
  const std::size_t l = copy_pruned(src, collapsed, src[i].left, out);
  const std::size_t r = copy_pruned(src, collapsed, src[i].right, out);
  out[id].left = l;
  out[id].right = r;
  return id;
}

}  // namespace

RegressionTree grow_tree(const Matrix& x, std::span<const double> y,
                         const std::vector<std::size_t>& rows, const TreeParams& params,
                         std::size_t max_features, Rng* rng) {
  params.validate();
  if (rows.empty()) throw ContractError("tree: empty training set");
  if (y.size() != x.rows()) throw ShapeError("tree: target length differs from row count");
  if (max_features == 0 || max_features > x.cols()) max_features = x.cols();
  if (max_features < x.cols() && rng == nullptr)
    throw ContractError("tree: feature subsampling requires a generator");
  TreeBuilder builder(x, y, params, max_features, rng);
  RegressionTree tree(builder.build(rows), x.cols(), params.criterion);
  return params.ccp_alpha > 0.0 ? tree_prune(tree, params.ccp_alpha) : tree;
}

RegressionTree tree_fit(const Dataset& train, const TreeParams& params) {
  if (train.n_samples() == 0) throw ContractError("tree: empty training set");
  std::vector<std::size_t> rows(train.n_samples());
  std::iota(rows.begin(), rows.end(), 0);
  return grow_tree(train.features, train.target, rows, params, train.n_features(), nullptr);
}

RegressionTree tree_prune(const RegressionTree& tree, double ccp_alpha,
                          std::vector<double>* alpha_path) {
  if (ccp_alpha <= 0.0) return tree;
  const auto& nodes = tree.nodes();
  const std::size_t m = nodes.size();
  const double total = static_cast<double>(tree.root().n_samples);
  Vector node_risk(m);
  for (std::size_t i = 0; i < m; ++i)
    node_risk[i] = nodes[i].impurity * static_cast<double>(nodes[i].n_samples) / total;

  std::vector<bool> collapsed(m, false);
  Vector subtree_risk(m);
  std::vector<std::size_t> leaves(m);
  std::vector<bool> reachable(m);
  for (;;) {
    // Children follow parents, so a reverse sweep is a post-order.
    for (std::size_t i = m; i-- > 0;) {
      if (nodes[i].is_leaf() || collapsed[i]) {
        subtree_risk[i] = node_risk[i];
        leaves[i] = 1;
      } else {
        subtree_risk[i] = subtree_risk[nodes[i].left] + subtree_risk[nodes[i].right];
        leaves[i] = leaves[nodes[i].left] + leaves[nodes[i].right];
      }
    }
    std::fill(reachable.begin(), reachable.end(), false);
    reachable[0] = true;
    std::size_t weakest = m;
    double weakest_alpha = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (!reachable[i] || nodes[i].is_leaf() || collapsed[i]) continue;
      reachable[nodes[i].left] = reachable[nodes[i].right] = true;
      const double g = (node_risk[i] - subtree_risk[i]) / static_cast<double>(leaves[i] - 1);
      bool take = g < weakest_alpha;
      if (!take && g == weakest_alpha) {
        const auto& w = nodes[weakest];
        take = nodes[i].depth > w.depth ||
               (nodes[i].depth == w.depth && nodes[i].feature < w.feature);
      }
      if (take) {
        weakest = i;
        weakest_alpha = g;
      }
    }
    if (weakest == m || weakest_alpha > ccp_alpha) break;
    collapsed[weakest] = true;
    if (alpha_path) alpha_path->push_back(weakest_alpha);
  }

  std::vector<TreeNode> out;
  copy_pruned(nodes, collapsed, 0, out);
  return RegressionTree(std::move(out), tree.n_features(), tree.criterion());
}

Vector tree_predict(const RegressionTree& tree, const Matrix& x) {
  if (x.cols() != tree.n_features())
    throw ShapeError("tree predict: expected " + std::to_string(tree.n_features()) +
                     " features, got " + std::to_string(x.cols()));
  Vector out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = tree.predict_row(x.row(r));
  return out;
}

Vector tree_importances(const RegressionTree& tree) {
  Vector imp(tree.n_features(), 0.0);
  const auto& nodes = tree.nodes();
  for (const auto& node : nodes) {
    if (node.is_leaf()) continue;
    const auto& l = nodes[node.left];
    const auto& r = nodes[node.right];
    const double gain = static_cast<double>(node.n_samples) * node.impurity -
                        static_cast<double>(l.n_samples) * l.impurity -
                        static_cast<double>(r.n_samples) * r.impurity;
    imp[node.feature] += std::max(0.0, gain);
  }
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0)
    for (double& v : imp) v /= total;
  return imp;
}

namespace {

std::string fmt4(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::string node_label(const TreeNode& node, const std::vector<std::string>& names) {
  std::string head;
  if (!node.is_leaf()) {
    const std::string name =
        node.feature < names.size() ? names[node.feature] : "x" + std::to_string(node.feature);
    head = name + " <= " + fmt4(node.threshold) + " | ";
  }
  return head + "n=" + std::to_string(node.n_samples) + " | impurity=" + fmt4(node.impurity) +
         " | value=" + fmt4(node.value);
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

TreeRendering tree_render(const RegressionTree& tree, std::size_t max_depth,
                          const std::vector<std::string>& feature_names) {
  const auto& nodes = tree.nodes();
  TreeRendering out;
  std::ostringstream text;
  std::ostringstream dot;
  dot << "digraph Tree {\n"
      << "  node [shape=box, fontname=\"helvetica\"];\n"
      << "  edge [fontname=\"helvetica\"];\n";
  std::size_t elided = 0;

  auto visit = [&](auto&& self, std::size_t i, std::size_t level, const std::string& prefix) -> void {
    const TreeNode& node = nodes[i];
    const bool truncated = !node.is_leaf() && level >= max_depth;
    text << prefix << node_label(node, feature_names) << '\n';
    dot << "  n" << i << " [label=\"" << dot_escape(node_label(node, feature_names)) << "\"];\n";
    if (node.is_leaf()) return;
    if (truncated) {
      text << prefix << "|   ...\n";
      const std::string id = "e" + std::to_string(elided++);
      dot << "  " << id << " [label=\"...\", shape=plaintext];\n"
          << "  n" << i << " -> " << id << ";\n";
      return;
    }
    dot << "  n" << i << " -> n" << node.left << " [label=\"true\"];\n";
    self(self, node.left, level + 1, prefix + "|   ");
    dot << "  n" << i << " -> n" << node.right << " [label=\"false\"];\n";
    self(self, node.right, level + 1, prefix + "|   ");
  };
  visit(visit, 0, 0, "");
  dot << "}\n";
  out.text = text.str();
  out.dot = dot.str();
  return out;
}

nlohmann::json to_json(const RegressionTree& tree) {
  auto nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    nlohmann::json j = {{"n_samples", n.n_samples}, {"impurity", n.impurity}, {"value", n.value},
                        {"depth", n.depth}};
    if (!n.is_leaf()) {
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
    }
    nodes.push_back(std::move(j));
  }
  return {{"n_features", tree.n_features()}, {"criterion", to_string(tree.criterion())},
          {"nodes", std::move(nodes)}};
}

}  // namespace lifexp
