#include "treemark/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "treemark/errors.hpp"
#include "treemark/rng.hpp"

namespace treemark {

std::string criterion_name(Criterion c) {
  return c == Criterion::gini ? "gini" : "entropy";
}

Criterion criterion_from_name(const std::string& name) {
  if (name == "gini") return Criterion::gini;
  if (name == "entropy") return Criterion::entropy;
  throw std::invalid_argument("unknown criterion: " + name);
}

Tree Tree::leaf(int label) {
  Tree t;
  t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, label});
  return t;
}

Tree Tree::internal(int feature, double threshold, Tree left, Tree right) {
  Tree t;
  t.nodes.push_back(TreeNode{feature, threshold, 1, 1 + static_cast<int>(left.nodes.size()), 0});
  int offset = 1;
  for (TreeNode n : left.nodes) {
    if (!n.is_leaf()) {
      n.left += offset;
      n.right += offset;
    }
    t.nodes.push_back(n);
  }
  offset = 1 + static_cast<int>(left.nodes.size());
  for (TreeNode n : right.nodes) {
    if (!n.is_leaf()) {
      n.left += offset;
      n.right += offset;
    }
    t.nodes.push_back(n);
  }
  return t;
}

TreeStats tree_stats(const Tree& t) {
  TreeStats stats{0, 0};
  std::vector<std::pair<int, int>> stack{{0, 0}};  // (node, depth)
  while (!stack.empty()) {
    auto [idx, depth] = stack.back();
    stack.pop_back();
    const TreeNode& node = t.nodes[idx];
    if (node.is_leaf()) {
      stats.leaves += 1;
      stats.depth = std::max(stats.depth, depth);
    } else {
      stack.push_back({node.left, depth + 1});
      stack.push_back({node.right, depth + 1});
    }
  }
  return stats;
}

WeightMap unit_weights(size_t n) { return WeightMap(n, 1); }

namespace {

// Weighted impurity mass: (wp + wn) * impurity(p). Split gain is the mass
// decrease, which makes gains comparable across nodes for best-first growth.
double impurity_mass(int64_t wp, int64_t wn, Criterion criterion) {
  double w = static_cast<double>(wp + wn);
  if (w <= 0.0) return 0.0;
  double pp = static_cast<double>(wp) / w;
  double pn = static_cast<double>(wn) / w;
  if (criterion == Criterion::gini) return w * (1.0 - pp * pp - pn * pn);
  double e = 0.0;
  if (pp > 0.0) e -= pp * std::log2(pp);
  if (pn > 0.0) e -= pn * std::log2(pn);
  return w * e;
}

constexpr double kMinGain = 1e-12;

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

struct BuildNode {
  std::vector<int> rows;
  int depth = 0;
  int64_t wpos = 0;
  int64_t wneg = 0;
  SplitChoice split;

  bool pure() const { return wpos == 0 || wneg == 0; }
  int majority() const { return wpos >= wneg ? 1 : -1; }  // ties -> +1
};

// Renumbers nodes into pre-order so structurally equal trees compare equal
// and serialize identically regardless of the order splits were made in.
std::vector<TreeNode> to_preorder(const std::vector<TreeNode>& nodes) {
  std::vector<TreeNode> out;
  out.reserve(nodes.size());
  struct Rec {
    const std::vector<TreeNode>& in;
    std::vector<TreeNode>& out;
    int visit(int idx) {
      int self = static_cast<int>(out.size());
      out.push_back(in[idx]);
      if (!in[idx].is_leaf()) {
        out[self].left = visit(in[idx].left);
        out[self].right = visit(in[idx].right);
      }
      return self;
    }
  };
  Rec rec{nodes, out};
  rec.visit(0);
  return out;
}

void tally(const Dataset& data, const WeightMap& weights, BuildNode& node) {
  node.wpos = node.wneg = 0;
  for (int r : node.rows) {
    (data.y[r] > 0 ? node.wpos : node.wneg) += weights[r];
  }
}

SplitChoice find_best_split(const Dataset& data, const WeightMap& weights, const BuildNode& node,
                            const std::vector<int>& feature_subset, const HyperParams& hp) {
  SplitChoice best;
  best.gain = kMinGain;
  const double parent_mass = impurity_mass(node.wpos, node.wneg, hp.criterion);
  const int64_t total = node.wpos + node.wneg;
  const int64_t msl = hp.min_samples_leaf;
  if (total < 2 * msl) return best;

  std::vector<std::pair<double, int>> order(node.rows.size());
  for (int f : feature_subset) {
    for (size_t i = 0; i < node.rows.size(); ++i) {
      order[i] = {data.x[static_cast<size_t>(node.rows[i]) * data.d + f], node.rows[i]};
    }
    std::sort(order.begin(), order.end());

    int64_t lp = 0, ln = 0, lw = 0;
    for (size_t i = 0; i + 1 < order.size(); ++i) {
      int r = order[i].second;
      (data.y[r] > 0 ? lp : ln) += weights[r];
      lw += weights[r];
      if (order[i].first == order[i + 1].first) continue;  // split only between distinct values
      if (lw < msl || total - lw < msl) continue;
      double gain = parent_mass - impurity_mass(lp, ln, hp.criterion) -
                    impurity_mass(node.wpos - lp, node.wneg - ln, hp.criterion);
      if (gain > best.gain) {
        best.found = true;
        best.feature = f;
        // Midpoint of adjacent doubles can round up to the right value; keep
        // the threshold strictly below it so the realized partition matches
        // the counted one.
        double thr = std::midpoint(order[i].first, order[i + 1].first);
        if (thr == order[i + 1].first) thr = order[i].first;
        best.threshold = thr;
        best.gain = gain;
      }
    }
  }
  return best;
}

}  // namespace

Tree train_tree_weighted(const Dataset& data, const WeightMap& weights,
                         const std::vector<int>& feature_subset, const HyperParams& hp) {
  if (data.n() == 0) throw DatasetError("train_tree_weighted: empty data");
  if (weights.size() != data.n()) {
    throw std::invalid_argument("train_tree_weighted: weights must cover all rows");
  }
  for (int64_t w : weights) {
    if (w < 1) throw std::invalid_argument("train_tree_weighted: weights must be >= 1");
  }
  if (feature_subset.empty()) {
    throw std::invalid_argument("train_tree_weighted: empty feature subset");
  }
  for (int f : feature_subset) {
    if (f < 0 || f >= data.d) throw std::invalid_argument("train_tree_weighted: bad feature index");
  }

  std::vector<TreeNode> nodes;
  std::vector<BuildNode> build;

  auto new_node = [&](std::vector<int> rows, int depth) {
    BuildNode bn;
    bn.rows = std::move(rows);
    bn.depth = depth;
    tally(data, weights, bn);
    nodes.push_back(TreeNode{-1, 0.0, -1, -1, bn.majority()});
    build.push_back(std::move(bn));
    return static_cast<int>(nodes.size()) - 1;
  };

  std::vector<int> all(data.n());
  std::iota(all.begin(), all.end(), 0);
  new_node(std::move(all), 0);

  // Best-first frontier ordered by weighted impurity decrease, ties to the
  // earliest-created node.
  std::priority_queue<std::pair<double, int>> frontier;
  auto consider = [&](int idx) {
    BuildNode& bn = build[idx];
    if (bn.depth >= hp.max_depth || bn.pure()) return;
    bn.split = find_best_split(data, weights, bn, feature_subset, hp);
    if (bn.split.found) frontier.push({bn.split.gain, -idx});
  };
  consider(0);

  int leaves = 1;
  while (!frontier.empty() && leaves < hp.max_leaves) {
    auto [gain, neg_idx] = frontier.top();
    frontier.pop();
    int idx = -neg_idx;
    const SplitChoice split = build[idx].split;

    std::vector<int> left_rows, right_rows;
    for (int r : build[idx].rows) {
      double v = data.x[static_cast<size_t>(r) * data.d + split.feature];
      (v <= split.threshold ? left_rows : right_rows).push_back(r);
    }
    int child_depth = build[idx].depth + 1;
    build[idx].rows.clear();
    build[idx].rows.shrink_to_fit();

    int left = new_node(std::move(left_rows), child_depth);
    int right = new_node(std::move(right_rows), child_depth);
    nodes[idx].feature = split.feature;
    nodes[idx].threshold = split.threshold;
    nodes[idx].left = left;
    nodes[idx].right = right;
    nodes[idx].label = 0;
    leaves += 1;

    consider(left);
    consider(right);
  }

  Tree t;
  t.nodes = to_preorder(nodes);
  return t;
}

Ensemble train_forest(const Dataset& data, const WeightMap& weights, const HyperParams& hp) {
  data.validate();
  if (hp.m < 1) throw std::invalid_argument("train_forest: m must be >= 1");
  int fpt = hp.features_per_tree > 0
                ? hp.features_per_tree
                : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(data.d))));
  if (fpt > data.d) throw std::invalid_argument("train_forest: features_per_tree exceeds d");

  Ensemble ensemble;
  ensemble.d = data.d;
  ensemble.trees.reserve(hp.m);
  ensemble.feature_subsets.reserve(hp.m);
  for (int i = 0; i < hp.m; ++i) {
    DetRng rng(derive_seed(hp.seed, "tree-features", static_cast<uint64_t>(i)));
    auto picks = rng.sample_indices(static_cast<size_t>(data.d), static_cast<size_t>(fpt));
    std::vector<int> subset(picks.begin(), picks.end());
    ensemble.trees.push_back(train_tree_weighted(data, weights, subset, hp));
    ensemble.feature_subsets.push_back(std::move(subset));
  }
  return ensemble;
}

int predict_tree(const Tree& t, std::span<const double> x) {
  int idx = 0;
  while (!t.nodes[idx].is_leaf()) {
    const TreeNode& node = t.nodes[idx];
    idx = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return t.nodes[idx].label;
}

std::vector<int> predict_all(const Ensemble& ensemble, std::span<const double> x) {
  std::vector<int> out(ensemble.m());
  for (size_t i = 0; i < ensemble.m(); ++i) out[i] = predict_tree(ensemble.trees[i], x);
  return out;
}

int predict_majority(const Ensemble& ensemble, std::span<const double> x) {
  int sum = 0;
  for (const Tree& t : ensemble.trees) sum += predict_tree(t, x);
  return sum >= 0 ? 1 : -1;
}

double accuracy(const Ensemble& ensemble, const Dataset& data) {
  if (data.n() == 0) throw DatasetError("accuracy: empty dataset");
  size_t correct = 0;
  for (size_t i = 0; i < data.n(); ++i) {
    if (predict_majority(ensemble, data.row(i)) == data.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.n());
}

namespace {

// Stratified fold assignment: per class, shuffle then deal round-robin.
std::vector<int> fold_assignment(const Dataset& data, int folds, uint64_t seed) {
  std::vector<int> fold(data.n(), 0);
  std::vector<size_t> pos, neg;
  for (size_t i = 0; i < data.n(); ++i) (data.y[i] > 0 ? pos : neg).push_back(i);
  int class_idx = 0;
  for (auto* rows : {&pos, &neg}) {
    DetRng rng(derive_seed(seed, "fold-class", class_idx++));
    rng.shuffle(*rows);
    for (size_t i = 0; i < rows->size(); ++i) {
      fold[(*rows)[i]] = static_cast<int>(i % folds);
    }
  }
  return fold;
}

}  // namespace

HyperParams grid_search(const Dataset& data, int m, const HyperGrid& grid, int folds,
                        uint64_t seed) {
  data.validate();
  if (folds < 2) throw std::invalid_argument("grid_search: folds must be >= 2");
  if (grid.max_depths.empty() || grid.min_samples_leaves.empty() || grid.criteria.empty()) {
    throw std::invalid_argument("grid_search: empty grid");
  }

  auto fold = fold_assignment(data, folds, seed);
  std::vector<std::pair<Dataset, Dataset>> splits;  // (train, validation) per fold
  for (int f = 0; f < folds; ++f) {
    std::vector<size_t> tr, va;
    for (size_t i = 0; i < data.n(); ++i) (fold[i] == f ? va : tr).push_back(i);
    if (tr.empty() || va.empty()) throw std::invalid_argument("grid_search: fold too small");
    splits.emplace_back(subset_rows(data, tr), subset_rows(data, va));
  }

  HyperParams best;
  double best_score = -1.0;
  for (Criterion criterion : grid.criteria) {
    for (int max_depth : grid.max_depths) {
      for (int msl : grid.min_samples_leaves) {
        HyperParams hp;
        hp.m = m;
        hp.max_depth = max_depth;
        hp.min_samples_leaf = msl;
        hp.criterion = criterion;
        double score = 0.0;
        for (int f = 0; f < folds; ++f) {
          hp.seed = derive_seed(seed, "cv-forest", static_cast<uint64_t>(f));
          auto forest = train_forest(splits[f].first, unit_weights(splits[f].first.n()), hp);
          score += accuracy(forest, splits[f].second);
        }
        score /= folds;
        if (score > best_score) {
          best_score = score;
          best = hp;
        }
      }
    }
  }
  best.seed = seed;
  return best;
}

}  // namespace treemark
