#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "treereg/common.hpp"

namespace treereg::tree {

/// Binary axis-aligned tree stored as an arena; node 0 is the root.
/// Routing rule: x[feature] <= threshold goes left.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;      // majority of training labels routed here (ties -> 0)
  int n_samples = 0;  // training samples routed here
  int n_pos = 0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int leaf_for(std::span<const double> x) const;
  int predict(std::span<const double> x) const;
  /// Fraction of positive training samples in the reached leaf.
  double predict_proba(std::span<const double> x) const;
  int max_depth() const;
};

struct TreeConfig {
  std::uint64_t seed = 0;
  double max_features = 1.0;  // fraction of features tried per node, (0, 1]
  int min_samples_leaf = 5;
  int max_depth = 0;  // 0 = unlimited
  std::vector<std::uint64_t> seeds_for_averaging;  // empty -> {seed}
  double val_fraction = 0.25;  // pruning holdout inside apl()

  std::vector<std::uint64_t> effective_seeds() const {
    return seeds_for_averaging.empty() ? std::vector<std::uint64_t>{seed}
                                       : seeds_for_averaging;
  }
};

using PredictFn = std::function<int(std::span<const double>)>;

DecisionTree train_tree(const Matrix& X, std::span<const int> y,
                        const TreeConfig& cfg);

/// Reduced-error pruning: bottom-up, replaces a subtree by its majority leaf
/// whenever validation accuracy does not decrease.
DecisionTree prune_tree(const DecisionTree& tree, const Matrix& X_val,
                        std::span<const int> y_val);

/// Number of internal decisions on the path from root to x's leaf.
int get_depth(const DecisionTree& tree, std::span<const double> x);

double tree_accuracy(const DecisionTree& tree, const Matrix& X,
                     std::span<const int> y);

/// Labels X with predict, fits a tree on a seeded fit/validation split,
/// prunes, and returns the mean decision path length over all rows.
/// Averaged over cfg.seeds_for_averaging when more than one seed is given.
double apl(const Matrix& X, const PredictFn& predict, const TreeConfig& cfg);

/// The fitted+pruned distillation tree behind apl(), for one seed.
DecisionTree fit_pruned_tree(const Matrix& X, std::span<const int> labels,
                             const TreeConfig& cfg, std::uint64_t seed);

bool same_structure(const DecisionTree& a, const DecisionTree& b);

std::string tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const std::string& text);

}  // namespace treereg::tree
