#include "treereg/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace treereg::tree {

namespace {

constexpr double kImpurityTol = 1e-12;

double gini(int n_pos, int n) {
  if (n == 0) return 0.0;
  double p = static_cast<double>(n_pos) / n;
  return 2.0 * p * (1.0 - p);
}

int majority_label(int n_pos, int n) {
  // ties go to label 0
  return 2 * n_pos > n ? 1 : 0;
}

struct Builder {
  const Matrix& X;
  std::span<const int> y;
  const TreeConfig& cfg;
  Rng rng;
  std::vector<TreeNode> nodes;
  // scratch: per-feature (value, label) pairs for the node being split
  std::vector<std::pair<double, int>> sorted;

  Builder(const Matrix& X_, std::span<const int> y_, const TreeConfig& cfg_,
          std::uint64_t seed)
      : X(X_), y(y_), cfg(cfg_), rng(derive_seed(seed, "cart")) {}

  std::vector<int> feature_set() {
    const int p = X.cols;
    if (cfg.max_features >= 1.0) return iota_indices(p);
    int k = std::max(1, static_cast<int>(std::ceil(cfg.max_features * p)));
    std::vector<int> all = iota_indices(p);
    // partial Fisher-Yates, then sorted for deterministic split enumeration
    for (int i = 0; i < k; ++i)
      std::swap(all[i], all[i + static_cast<int>(rng.below(p - i))]);
    all.resize(static_cast<std::size_t>(k));
    std::sort(all.begin(), all.end());
    return all;
  }

  int build(std::vector<int>& idx, int depth) {
    const int n = static_cast<int>(idx.size());
    int n_pos = 0;
    for (int i : idx) n_pos += y[i];

    const int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[node_id].n_samples = n;
    nodes[node_id].n_pos = n_pos;
    nodes[node_id].label = majority_label(n_pos, n);

    const double parent_gini = gini(n_pos, n);
    const bool depth_capped = cfg.max_depth > 0 && depth >= cfg.max_depth;
    if (n_pos == 0 || n_pos == n || n < 2 * cfg.min_samples_leaf || depth_capped)
      return node_id;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = parent_gini - kImpurityTol;
    for (int f : feature_set()) {
      sorted.clear();
      sorted.reserve(static_cast<std::size_t>(n));
      for (int i : idx) sorted.emplace_back(X.at(i, f), y[i]);
      std::sort(sorted.begin(), sorted.end());
      int left_n = 0, left_pos = 0;
      for (int i = 0; i + 1 < n; ++i) {
        left_n += 1;
        left_pos += sorted[static_cast<std::size_t>(i)].second;
        if (sorted[static_cast<std::size_t>(i)].first ==
            sorted[static_cast<std::size_t>(i + 1)].first)
          continue;  // split only between distinct values
        int right_n = n - left_n;
        if (left_n < cfg.min_samples_leaf || right_n < cfg.min_samples_leaf)
          continue;
        double w = (left_n * gini(left_pos, left_n) +
                    right_n * gini(n_pos - left_pos, right_n)) /
                   n;
        // strict improvement keeps ties at the lowest feature, then threshold
        if (w < best_impurity - kImpurityTol) {
          best_impurity = w;
          best_feature = f;
          best_threshold = (sorted[static_cast<std::size_t>(i)].first +
                            sorted[static_cast<std::size_t>(i + 1)].first) /
                           2.0;
        }
      }
    }
    if (best_feature < 0) return node_id;

    std::vector<int> left_idx, right_idx;
    left_idx.reserve(idx.size());
    right_idx.reserve(idx.size());
    for (int i : idx)
      (X.at(i, best_feature) <= best_threshold ? left_idx : right_idx)
          .push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    nodes[node_id].feature = best_feature;
    nodes[node_id].threshold = best_threshold;
    int l = build(left_idx, depth + 1);
    int r = build(right_idx, depth + 1);
    nodes[node_id].left = l;
    nodes[node_id].right = r;
    return node_id;
  }
};

// drop unreachable nodes after pruning, renumbering children
DecisionTree compact(const DecisionTree& t) {
  DecisionTree out;
  out.nodes.reserve(t.nodes.size());
  std::vector<int> remap(t.nodes.size(), -1);
  // preorder copy
  std::vector<int> stack{0};
  std::vector<int> order;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    if (!t.nodes[static_cast<std::size_t>(v)].is_leaf()) {
      stack.push_back(t.nodes[static_cast<std::size_t>(v)].right);
      stack.push_back(t.nodes[static_cast<std::size_t>(v)].left);
    }
  }
  for (int v : order) {
    remap[static_cast<std::size_t>(v)] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(t.nodes[static_cast<std::size_t>(v)]);
  }
  for (auto& node : out.nodes) {
    if (!node.is_leaf()) {
      node.left = remap[static_cast<std::size_t>(node.left)];
      node.right = remap[static_cast<std::size_t>(node.right)];
    }
  }
  return out;
}

// indices sorted lexicographically by (features..., label); makes seeded
// fit/validation splits invariant to the input row order
std::vector<int> canonical_order(const Matrix& X, std::span<const int> labels) {
  std::vector<int> idx = iota_indices(X.rows);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    for (int c = 0; c < X.cols; ++c) {
      if (X.at(a, c) != X.at(b, c)) return X.at(a, c) < X.at(b, c);
    }
    if (labels[a] != labels[b]) return labels[a] < labels[b];
    return a < b;
  });
  return idx;
}

}  // namespace

int DecisionTree::leaf_for(std::span<const double> x) const {
  if (nodes.empty()) fail_contract("empty decision tree");
  int v = 0;
  while (!nodes[static_cast<std::size_t>(v)].is_leaf()) {
    const TreeNode& nd = nodes[static_cast<std::size_t>(v)];
    if (nd.feature >= static_cast<int>(x.size()))
      fail_shape("tree routing: input has too few features");
    v = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left
                                                                : nd.right;
  }
  return v;
}

int DecisionTree::predict(std::span<const double> x) const {
  return nodes[static_cast<std::size_t>(leaf_for(x))].label;
}

double DecisionTree::predict_proba(std::span<const double> x) const {
  const TreeNode& leaf = nodes[static_cast<std::size_t>(leaf_for(x))];
  return leaf.n_samples > 0
             ? static_cast<double>(leaf.n_pos) / leaf.n_samples
             : static_cast<double>(leaf.label);
}

int DecisionTree::max_depth() const {
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [v, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const TreeNode& nd = nodes[static_cast<std::size_t>(v)];
    if (!nd.is_leaf()) {
      stack.push_back({nd.left, d + 1});
      stack.push_back({nd.right, d + 1});
    }
  }
  return best;
}

DecisionTree train_tree(const Matrix& X, std::span<const int> y,
                        const TreeConfig& cfg) {
  if (X.rows == 0) fail_invalid("train_tree: empty dataset");
  if (static_cast<int>(y.size()) != X.rows)
    fail_shape("train_tree: label count does not match row count");
  for (int v : y)
    if (v != 0 && v != 1) fail_invalid("train_tree: labels must be binary");
  if (cfg.min_samples_leaf < 1)
    fail_invalid("train_tree: min_samples_leaf must be >= 1");
  if (cfg.max_features <= 0.0 || cfg.max_features > 1.0)
    fail_invalid("train_tree: max_features fraction must be in (0, 1]");

  Builder b(X, y, cfg, cfg.seed);
  std::vector<int> idx = iota_indices(X.rows);
  b.build(idx, 0);
  DecisionTree t;
  t.nodes = std::move(b.nodes);
  return t;
}

DecisionTree prune_tree(const DecisionTree& tree, const Matrix& X_val,
                        std::span<const int> y_val) {
  if (X_val.rows == 0) fail_invalid("prune_tree: empty validation set");
  if (static_cast<int>(y_val.size()) != X_val.rows)
    fail_shape("prune_tree: label count does not match row count");

  DecisionTree t = tree;
  const int n_nodes = t.node_count();
  // validation samples reaching each node; routes never change because a
  // collapse only cuts what happens below a node
  std::vector<std::vector<int>> reach(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < X_val.rows; ++i) {
    int v = 0;
    reach[0].push_back(i);
    while (!t.nodes[static_cast<std::size_t>(v)].is_leaf()) {
      const TreeNode& nd = t.nodes[static_cast<std::size_t>(v)];
      v = X_val.at(i, nd.feature) <= nd.threshold ? nd.left : nd.right;
      reach[static_cast<std::size_t>(v)].push_back(i);
    }
  }

  auto matches = [&](int v) {
    int c = 0;
    for (int i : reach[static_cast<std::size_t>(v)])
      c += y_val[i] == t.nodes[static_cast<std::size_t>(v)].label;
    return c;
  };

  // postorder node list (children before parents)
  std::vector<int> postorder;
  {
    std::vector<std::pair<int, bool>> stack{{0, false}};
    while (!stack.empty()) {
      auto [v, expanded] = stack.back();
      stack.pop_back();
      const TreeNode& nd = t.nodes[static_cast<std::size_t>(v)];
      if (expanded || nd.is_leaf()) {
        postorder.push_back(v);
      } else {
        stack.push_back({v, true});
        stack.push_back({nd.right, false});
        stack.push_back({nd.left, false});
      }
    }
  }

  std::vector<int> correct(static_cast<std::size_t>(n_nodes), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int v : postorder) {
      TreeNode& nd = t.nodes[static_cast<std::size_t>(v)];
      if (nd.is_leaf()) {
        correct[static_cast<std::size_t>(v)] = matches(v);
        continue;
      }
      int sub = correct[static_cast<std::size_t>(nd.left)] +
                correct[static_cast<std::size_t>(nd.right)];
      int as_leaf = matches(v);
      if (as_leaf >= sub) {
        nd.feature = -1;
        nd.left = nd.right = -1;
        correct[static_cast<std::size_t>(v)] = as_leaf;
        changed = true;
      } else {
        correct[static_cast<std::size_t>(v)] = sub;
      }
    }
  }
  return compact(t);
}

int get_depth(const DecisionTree& tree, std::span<const double> x) {
  int v = 0, depth = 0;
  while (!tree.nodes[static_cast<std::size_t>(v)].is_leaf()) {
    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(v)];
    if (nd.feature >= static_cast<int>(x.size()))
      fail_shape("get_depth: input has too few features");
    v = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left
                                                                : nd.right;
    ++depth;
  }
  return depth;
}

double tree_accuracy(const DecisionTree& tree, const Matrix& X,
                     std::span<const int> y) {
  if (X.rows == 0) fail_invalid("tree_accuracy: empty dataset");
  int c = 0;
  for (int i = 0; i < X.rows; ++i) c += tree.predict(X.row_span(i)) == y[i];
  return static_cast<double>(c) / X.rows;
}

DecisionTree fit_pruned_tree(const Matrix& X, std::span<const int> labels,
                             const TreeConfig& cfg, std::uint64_t seed) {
  const int n = X.rows;
  if (n < 2) fail_invalid("fit_pruned_tree: need at least 2 examples");
  std::vector<int> order = canonical_order(X, labels);
  Rng rng(derive_seed(seed, "apl-split"));
  rng.shuffle(order);
  int n_val = std::clamp(static_cast<int>(std::lround(cfg.val_fraction * n)), 1,
                         n - 1);
  std::vector<int> val_idx(order.begin(), order.begin() + n_val);
  std::vector<int> fit_idx(order.begin() + n_val, order.end());

  auto take_labels = [&](const std::vector<int>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(labels[i]);
    return out;
  };
  Matrix X_fit = X.take_rows(fit_idx);
  std::vector<int> y_fit = take_labels(fit_idx);
  Matrix X_val = X.take_rows(val_idx);
  std::vector<int> y_val = take_labels(val_idx);

  TreeConfig fit_cfg = cfg;
  fit_cfg.seed = seed;
  DecisionTree t = train_tree(X_fit, y_fit, fit_cfg);
  return prune_tree(t, X_val, y_val);
}

double apl(const Matrix& X, const PredictFn& predict, const TreeConfig& cfg) {
  if (X.rows < 2) fail_invalid("apl: need at least 2 examples");
  std::vector<int> labels(static_cast<std::size_t>(X.rows));
  for (int i = 0; i < X.rows; ++i) {
    int v = predict(X.row_span(i));
    if (v != 0 && v != 1) fail_invalid("apl: predict function must return 0/1");
    labels[static_cast<std::size_t>(i)] = v;
  }
  double total = 0.0;
  const std::vector<std::uint64_t> seeds = cfg.effective_seeds();
  for (std::uint64_t s : seeds) {
    DecisionTree t = fit_pruned_tree(X, labels, cfg, s);
    double sum = 0.0;
    for (int i = 0; i < X.rows; ++i) sum += get_depth(t, X.row_span(i));
    total += sum / X.rows;
  }
  return total / static_cast<double>(seeds.size());
}

bool same_structure(const DecisionTree& a, const DecisionTree& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const TreeNode& x = a.nodes[i];
    const TreeNode& y = b.nodes[i];
    if (x.feature != y.feature || x.left != y.left || x.right != y.right ||
        x.label != y.label || x.threshold != y.threshold)
      return false;
  }
  return true;
}

std::string tree_to_json(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& nd : tree.nodes) {
    nlohmann::json j;
    if (nd.is_leaf()) {
      j["leaf"] = true;
      j["label"] = nd.label;
    } else {
      j["feature"] = nd.feature;
      j["threshold"] = nd.threshold;
      j["left"] = nd.left;
      j["right"] = nd.right;
      j["label"] = nd.label;
    }
    j["n_samples"] = nd.n_samples;
    j["n_pos"] = nd.n_pos;
    nodes.push_back(std::move(j));
  }
  nlohmann::json j;
  j["format"] = "treereg-tree";
  j["root"] = 0;
  j["nodes"] = std::move(nodes);
  return j.dump();
}

DecisionTree tree_from_json(const std::string& text) {
  DecisionTree t;
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    for (const auto& nj : j.at("nodes")) {
      TreeNode nd;
      nd.label = nj.at("label").get<int>();
      nd.n_samples = nj.value("n_samples", 0);
      nd.n_pos = nj.value("n_pos", 0);
      if (!nj.value("leaf", false)) {
        nd.feature = nj.at("feature").get<int>();
        nd.threshold = nj.at("threshold").get<double>();
        nd.left = nj.at("left").get<int>();
        nd.right = nj.at("right").get<int>();
      }
      t.nodes.push_back(nd);
    }
  } catch (const nlohmann::json::exception& e) {
    fail_io(std::string("tree_from_json: ") + e.what());
  }
  if (t.nodes.empty()) fail_io("tree_from_json: no nodes");
  return t;
}

}  // namespace treereg::tree
