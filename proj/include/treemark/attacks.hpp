#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treemark/forest.hpp"
#include "treemark/watermark.hpp"

namespace treemark {

// Axis-aligned region with exclusive lower and inclusive upper bounds per
// dimension; dimensions a path never tests stay (-inf, +inf].
struct Box {
  std::vector<double> lo;  // exclusive
  std::vector<double> hi;  // inclusive

  static Box full(int d);
  int dims() const { return static_cast<int>(lo.size()); }
  bool empty() const;                          // some dimension has lo >= hi
  bool contains(std::span<const double> x) const;  // lo < x_j <= hi for all j
};

Box intersect(const Box& a, const Box& b);

// One box per leaf carrying the target label, accumulated along the
// root-to-leaf path: left branches tighten the upper bound, right branches
// the (exclusive) lower bound.
std::vector<Box> leaf_boxes(const Tree& t, int target, int d);

enum class TreeStatistic { depth, leaves };
std::string statistic_name(TreeStatistic s);

enum class AssignedBit : uint8_t { zero, one, uncertain };

struct DetectionReport {
  TreeStatistic statistic = TreeStatistic::depth;
  std::string strategy;  // "band" or "mean"
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::vector<AssignedBit> assigned;
  // Scores against the ground-truth signature; correct/wrong are -1 when no
  // ground truth was supplied. correct + wrong + uncertain == m when scored.
  int correct = -1;
  int wrong = -1;
  int uncertain = 0;

  bool scored() const { return correct >= 0; }
  // True when every tree got a definite bit equal to the ground truth.
  bool exact_reconstruction(const Signature& truth) const;
  double bit_accuracy() const;  // correct / m, requires scored()
};

// Band strategy: statistic < mean - sd -> bit 0, statistic > mean + sd ->
// bit 1, anything in the closed band (boundaries included) -> uncertain.
DetectionReport detect_band(const Ensemble& ensemble, TreeStatistic statistic,
                            const Signature* truth = nullptr);

// Sharp-threshold strategy: statistic < mean -> bit 0, otherwise bit 1.
// Never produces uncertain assignments.
DetectionReport detect_mean(const Ensemble& ensemble, TreeStatistic statistic,
                            const Signature* truth = nullptr);

struct SolverDomain {
  double lo = 0.0;
  double hi = 1.0;
};

enum class ForgeStatus { found, infeasible, timeout };

struct ForgeOutcome {
  ForgeStatus status = ForgeStatus::infeasible;
  std::vector<double> witness;  // valid when status == found
  uint64_t expansions = 0;
};

inline constexpr uint64_t kDefaultNodeBudget = 10'000'000;

// Exact search for an instance x with predict_tree(t_i, x) == y iff
// sigma_i == 0, within L-inf distance epsilon of z (clipped to the domain).
// epsilon >= 1 disables the distance constraint and searches the whole
// domain. Complete up to the node-expansion budget: backtracks over one leaf
// box per tree, trees ordered by ascending surviving-box count. Exhaustion
// reports infeasible; hitting the budget reports timeout (distinct outcome).
// Returned witnesses always satisfy the pattern exactly and, for epsilon < 1,
// the L-inf bound under exact double comparison.
ForgeOutcome forge_instance(const Ensemble& ensemble, const Signature& sigma_fake, int y,
                            std::span<const double> z, double epsilon,
                            uint64_t budget = kDefaultNodeBudget, SolverDomain domain = {});

enum class RowStatus { forged, infeasible, timeout };
std::string row_status_name(RowStatus s);

struct ForgeRowOutcome {
  int64_t seed_row_id = 0;
  RowStatus status = RowStatus::infeasible;
  int target = 0;
  double linf = 0.0;
  std::vector<double> x;  // forged instance when status == forged
};

struct ForgeryResult {
  double epsilon = 0.0;
  size_t k_original = 0;
  std::vector<ForgeRowOutcome> rows;  // processed rows, in test order
  size_t attempted = 0;
  size_t forged = 0;
  size_t infeasible = 0;
  size_t timeout = 0;
  bool wall_clock_exhausted = false;

  double ratio() const;  // min(1, forged / k_original)
};

// Runs forge_instance for every test row (target label = the row's own label,
// or its flip when target_flipped). Rows are independent and processed in
// parallel; the wall-clock budget is checked before each row and partial
// progress is reported, never an error.
ForgeryResult forge_trigger_set(const Ensemble& ensemble, const Signature& sigma_fake,
                                const Dataset& test, double epsilon, size_t k_original,
                                uint64_t per_instance_budget, double wall_clock_secs,
                                bool target_flipped = false, int n_threads = 0);

// Report CSVs. Detection: statistic,mean,std,correct,wrong,uncertain,strategy.
// Forgery rows: seed_row_id,status,linf_distance,x1..xd.
void write_detection_csv(const std::string& path, const std::vector<DetectionReport>& reports);
void write_forgery_rows_csv(const std::string& path, const ForgeryResult& result, int d);
void write_forgery_summary_csv(const std::string& path, const std::vector<ForgeryResult>& sweeps);

}  // namespace treemark
