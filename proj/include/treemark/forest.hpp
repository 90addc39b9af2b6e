#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "treemark/dataset.hpp"

namespace treemark {

enum class Criterion { gini, entropy };

std::string criterion_name(Criterion c);
Criterion criterion_from_name(const std::string& name);

// Sentinels for "no bound"; large enough that depth/leaf arithmetic never
// overflows.
inline constexpr int kUnboundedDepth = std::numeric_limits<int>::max() / 4;
inline constexpr int kUnboundedLeaves = std::numeric_limits<int>::max() / 4;

struct HyperParams {
  int m = 100;
  int max_depth = kUnboundedDepth;
  int max_leaves = kUnboundedLeaves;
  int min_samples_leaf = 1;
  int features_per_tree = 0;  // 0 resolves to ceil(sqrt(d)) at training time
  Criterion criterion = Criterion::gini;
  uint64_t seed = 0;
};

// Flat binary decision tree; node 0 is the root. Internal nodes route
// x[feature] <= threshold to the left child, otherwise right.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;  // -1 or +1 at leaves
  bool is_leaf() const { return feature < 0; }

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  static Tree leaf(int label);
  static Tree internal(int feature, double threshold, Tree left, Tree right);

  bool operator==(const Tree&) const = default;
};

struct TreeStats {
  int depth = 0;   // a lone leaf has depth 0
  int leaves = 1;
};

TreeStats tree_stats(const Tree& t);

// Ordered tree sequence; position i binds to signature bit i.
struct Ensemble {
  std::vector<Tree> trees;
  std::vector<std::vector<int>> feature_subsets;
  int d = 0;

  size_t m() const { return trees.size(); }
};

// Positive integer weight per training row.
using WeightMap = std::vector<int64_t>;

WeightMap unit_weights(size_t n);

// Greedy top-down induction with weighted impurity, midpoint thresholds and
// best-first leaf expansion under the max_leaves budget. Fully deterministic:
// impurity ties break toward the lowest feature index then lowest threshold,
// leaf-label ties toward +1.
Tree train_tree_weighted(const Dataset& data, const WeightMap& weights,
                         const std::vector<int>& feature_subset, const HyperParams& hp);

// Random forest without bootstrap: every tree trains on all rows; tree i uses
// a feature subset drawn from a seed derived from (hp.seed, i).
Ensemble train_forest(const Dataset& data, const WeightMap& weights, const HyperParams& hp);

int predict_tree(const Tree& t, std::span<const double> x);
std::vector<int> predict_all(const Ensemble& ensemble, std::span<const double> x);

// Sign of the label sum; even-split ties go to +1.
int predict_majority(const Ensemble& ensemble, std::span<const double> x);

double accuracy(const Ensemble& ensemble, const Dataset& data);

struct HyperGrid {
  std::vector<int> max_depths{4, 6, 8, 12, 16, 20, kUnboundedDepth};
  std::vector<int> min_samples_leaves{1, 2, 5, 10};
  std::vector<Criterion> criteria{Criterion::gini};
};

// Stratified k-fold cross validation over the grid; picks the point with the
// highest mean validation accuracy, first point in grid order on ties.
// Grid order: criterion, then max_depth, then min_samples_leaf.
HyperParams grid_search(const Dataset& data, int m, const HyperGrid& grid, int folds,
                        uint64_t seed);

}  // namespace treemark
