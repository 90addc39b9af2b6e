#include "treemark/attacks.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "treemark/errors.hpp"
#include "treemark/num_format.hpp"

namespace treemark {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Box Box::full(int d) {
  Box b;
  b.lo.assign(d, -kInf);
  b.hi.assign(d, kInf);
  return b;
}

bool Box::empty() const {
  for (size_t j = 0; j < lo.size(); ++j) {
    if (!(lo[j] < hi[j])) return true;
  }
  return false;
}

bool Box::contains(std::span<const double> x) const {
  for (size_t j = 0; j < lo.size(); ++j) {
    if (!(lo[j] < x[j] && x[j] <= hi[j])) return false;
  }
  return true;
}

Box intersect(const Box& a, const Box& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("intersect: dimension mismatch");
  Box out = a;
  for (int j = 0; j < a.dims(); ++j) {
    out.lo[j] = std::max(a.lo[j], b.lo[j]);
    out.hi[j] = std::min(a.hi[j], b.hi[j]);
  }
  return out;
}

std::vector<Box> leaf_boxes(const Tree& t, int target, int d) {
  std::vector<Box> out;
  Box running = Box::full(d);
  // DFS accumulating path constraints: left branches tighten hi, right
  // branches tighten lo; each bound is restored on the way back up.
  struct Rec {
    const Tree& t;
    int target;
    Box& running;
    std::vector<Box>& out;
    void visit(int idx) {
      const TreeNode& node = t.nodes[idx];
      if (node.is_leaf()) {
        if (node.label == target) out.push_back(running);
        return;
      }
      int f = node.feature;
      double old_lo = running.lo[f], old_hi = running.hi[f];
      running.hi[f] = std::min(old_hi, node.threshold);
      visit(node.left);
      running.hi[f] = old_hi;
      running.lo[f] = std::max(old_lo, node.threshold);
      visit(node.right);
      running.lo[f] = old_lo;
    }
  };
  Rec rec{t, target, running, out};
  rec.visit(0);
  return out;
}

std::string statistic_name(TreeStatistic s) {
  return s == TreeStatistic::depth ? "depth" : "leaves";
}

namespace {

std::vector<double> statistic_values(const Ensemble& ensemble, TreeStatistic statistic) {
  std::vector<double> values;
  values.reserve(ensemble.m());
  for (const Tree& t : ensemble.trees) {
    TreeStats stats = tree_stats(t);
    values.push_back(statistic == TreeStatistic::depth ? stats.depth : stats.leaves);
  }
  return values;
}

void score_report(DetectionReport& report, const Signature* truth) {
  report.uncertain = static_cast<int>(
      std::count(report.assigned.begin(), report.assigned.end(), AssignedBit::uncertain));
  if (!truth) return;
  if (truth->m() != report.assigned.size()) {
    throw std::invalid_argument("detection: signature length does not match ensemble");
  }
  report.correct = report.wrong = 0;
  for (size_t i = 0; i < report.assigned.size(); ++i) {
    if (report.assigned[i] == AssignedBit::uncertain) continue;
    bool bit = report.assigned[i] == AssignedBit::one;
    (bit == (truth->bits[i] == 1) ? report.correct : report.wrong) += 1;
  }
}

DetectionReport detect_common(const Ensemble& ensemble, TreeStatistic statistic) {
  if (ensemble.m() < 2) throw std::invalid_argument("detection: need at least 2 trees");
  DetectionReport report;
  report.statistic = statistic;
  auto values = statistic_values(ensemble, statistic);
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  report.mean = mean;
  report.stddev = std::sqrt(var / values.size());
  report.assigned.resize(values.size());
  return report;
}

}  // namespace

bool DetectionReport::exact_reconstruction(const Signature& truth) const {
  if (truth.m() != assigned.size()) return false;
  for (size_t i = 0; i < assigned.size(); ++i) {
    if (assigned[i] == AssignedBit::uncertain) return false;
    if ((assigned[i] == AssignedBit::one) != (truth.bits[i] == 1)) return false;
  }
  return true;
}

double DetectionReport::bit_accuracy() const {
  if (!scored()) throw std::logic_error("bit_accuracy: report was not scored");
  return static_cast<double>(correct) / static_cast<double>(assigned.size());
}

DetectionReport detect_band(const Ensemble& ensemble, TreeStatistic statistic,
                            const Signature* truth) {
  DetectionReport report = detect_common(ensemble, statistic);
  report.strategy = "band";
  auto values = statistic_values(ensemble, statistic);
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] < report.mean - report.stddev) {
      report.assigned[i] = AssignedBit::zero;
    } else if (values[i] > report.mean + report.stddev) {
      report.assigned[i] = AssignedBit::one;
    } else {
      report.assigned[i] = AssignedBit::uncertain;
    }
  }
  score_report(report, truth);
  return report;
}

DetectionReport detect_mean(const Ensemble& ensemble, TreeStatistic statistic,
                            const Signature* truth) {
  DetectionReport report = detect_common(ensemble, statistic);
  report.strategy = "mean";
  auto values = statistic_values(ensemble, statistic);
  for (size_t i = 0; i < values.size(); ++i) {
    report.assigned[i] = values[i] < report.mean ? AssignedBit::zero : AssignedBit::one;
  }
  score_report(report, truth);
  return report;
}

namespace {

// One bound pair a leaf path imposes on a dimension, already clipped to the
// search box.
struct DimBound {
  int dim;
  double lo;  // exclusive
  double hi;  // inclusive
};
using SparseBox = std::vector<DimBound>;

struct Budget {
  uint64_t used = 0;
  uint64_t cap = 0;
  bool spend() { return ++used <= cap; }
};

// Enumerates the target-label leaf boxes of one tree clipped to the search
// box, pruning subtrees whose running box is already empty. Returns false on
// budget exhaustion.
bool collect_sparse_boxes(const Tree& t, int target, std::vector<double>& cur_lo,
                          std::vector<double>& cur_hi, Budget& budget,
                          std::vector<SparseBox>& out) {
  struct Rec {
    const Tree& t;
    int target;
    std::vector<double>& lo;
    std::vector<double>& hi;
    Budget& budget;
    std::vector<SparseBox>& out;
    std::vector<int> touched;  // path dims, with repeats
    bool ok = true;

    void visit(int idx) {
      if (!ok) return;
      if (!budget.spend()) {
        ok = false;
        return;
      }
      const TreeNode& node = t.nodes[idx];
      if (node.is_leaf()) {
        if (node.label != target) return;
        SparseBox box;
        for (int dim : touched) {
          bool seen = false;
          for (const DimBound& b : box) {
            if (b.dim == dim) {
              seen = true;
              break;
            }
          }
          if (!seen) box.push_back({dim, lo[dim], hi[dim]});
        }
        out.push_back(std::move(box));
        return;
      }
      int f = node.feature;
      double old_lo = lo[f], old_hi = hi[f];
      touched.push_back(f);
      hi[f] = std::min(old_hi, node.threshold);
      if (lo[f] < hi[f]) visit(node.left);
      hi[f] = old_hi;
      lo[f] = std::max(old_lo, node.threshold);
      if (lo[f] < hi[f]) visit(node.right);
      lo[f] = old_lo;
      touched.pop_back();
    }
  };
  Rec rec{t, target, cur_lo, cur_hi, budget, out, {}, true};
  rec.visit(0);
  return rec.ok;
}

struct Backtracker {
  const std::vector<std::vector<SparseBox>>& lists;
  std::vector<double>& lo;
  std::vector<double>& hi;
  Budget& budget;

  enum class Result { found, exhausted, budget_out };

  Result run(size_t level) {
    if (level == lists.size()) return Result::found;
    std::vector<std::pair<int, std::pair<double, double>>> undo;
    for (const SparseBox& box : lists[level]) {
      if (!budget.spend()) return Result::budget_out;
      undo.clear();
      bool feasible = true;
      for (const DimBound& b : box) {
        undo.push_back({b.dim, {lo[b.dim], hi[b.dim]}});
        lo[b.dim] = std::max(lo[b.dim], b.lo);
        hi[b.dim] = std::min(hi[b.dim], b.hi);
        if (!(lo[b.dim] < hi[b.dim])) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        Result r = run(level + 1);
        if (r != Result::exhausted) return r;
      }
      for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
        lo[it->first] = it->second.first;
        hi[it->first] = it->second.second;
      }
    }
    return Result::exhausted;
  }
};

// Distortion-minimizing point of a nonempty interval (lo, hi]: the center z_j
// when it lies inside, otherwise the inclusive upper bound; fallbacks only
// matter for unbounded intervals that the library itself never produces.
double pick_coordinate(double lo, double hi, double z) {
  if (lo < z && z <= hi) return z;
  if (std::isfinite(hi)) return hi;
  if (std::isfinite(lo)) return lo + 1.0;
  return 0.0;
}

// L-inf distance from z to the closure of a sparse box. Boxes containing z
// score 0, so combinations near the seed instance are explored first.
double box_distance(const SparseBox& box, std::span<const double> z) {
  double dist = 0.0;
  for (const DimBound& b : box) {
    double v = z[b.dim];
    if (v > b.hi) dist = std::max(dist, v - b.hi);
    if (v <= b.lo) dist = std::max(dist, b.lo - v);
  }
  return dist;
}

}  // namespace

ForgeOutcome forge_instance(const Ensemble& ensemble, const Signature& sigma_fake, int y,
                            std::span<const double> z, double epsilon, uint64_t budget,
                            SolverDomain domain) {
  const int d = ensemble.d;
  if (sigma_fake.m() != ensemble.m()) {
    throw std::invalid_argument("forge_instance: |sigma| must equal m");
  }
  if (static_cast<int>(z.size()) != d) {
    throw std::invalid_argument("forge_instance: z has wrong dimension");
  }
  if (y != 1 && y != -1) throw std::invalid_argument("forge_instance: label outside {-1,+1}");
  if (!(epsilon > 0.0)) throw std::invalid_argument("forge_instance: epsilon must be positive");
  if (!(domain.lo <= domain.hi)) throw std::invalid_argument("forge_instance: bad domain");

  ForgeOutcome outcome;
  Budget budget_state{0, budget};

  // Search box: the closed epsilon-box around z clipped to the domain, with
  // the closed lower bound turned into the exclusive-lower representation.
  // Bounds are nudged inward until the L-inf check passes under exact double
  // arithmetic, so every returned witness re-verifies with no tolerance.
  std::vector<double> search_lo(d), search_hi(d);
  for (int j = 0; j < d; ++j) {
    double a, b;
    if (epsilon >= 1.0) {
      a = domain.lo;
      b = domain.hi;
    } else {
      a = std::max(domain.lo, z[j] - epsilon);
      b = std::min(domain.hi, z[j] + epsilon);
      while (a <= b && z[j] - a > epsilon) a = std::nextafter(a, kInf);
      while (b >= a && b - z[j] > epsilon) b = std::nextafter(b, -kInf);
    }
    if (a > b) {
      outcome.status = ForgeStatus::infeasible;
      outcome.expansions = budget_state.used;
      return outcome;
    }
    search_lo[j] = std::nextafter(a, -kInf);
    search_hi[j] = b;
  }

  // Per tree: surviving leaf boxes for the required label, as sparse bounds.
  std::vector<std::vector<SparseBox>> lists(ensemble.m());
  bool any_empty = false;
  for (size_t i = 0; i < ensemble.m(); ++i) {
    int required = sigma_fake.bits[i] == 0 ? y : -y;
    std::vector<double> cur_lo = search_lo, cur_hi = search_hi;
    if (!collect_sparse_boxes(ensemble.trees[i], required, cur_lo, cur_hi, budget_state,
                              lists[i])) {
      outcome.status = ForgeStatus::timeout;
      outcome.expansions = budget_state.used;
      return outcome;
    }
    if (lists[i].empty()) any_empty = true;
  }
  if (any_empty) {
    outcome.status = ForgeStatus::infeasible;
    outcome.expansions = budget_state.used;
    return outcome;
  }

  // Most-constrained trees first; within a tree, boxes closest to z first.
  std::vector<size_t> order(ensemble.m());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return lists[a].size() < lists[b].size(); });
  std::vector<std::vector<SparseBox>> ordered;
  ordered.reserve(order.size());
  for (size_t i : order) {
    std::stable_sort(lists[i].begin(), lists[i].end(),
                     [&](const SparseBox& a, const SparseBox& b) {
                       return box_distance(a, z) < box_distance(b, z);
                     });
    ordered.push_back(std::move(lists[i]));
  }

  std::vector<double> cur_lo = search_lo, cur_hi = search_hi;
  Backtracker bt{ordered, cur_lo, cur_hi, budget_state};
  auto result = bt.run(0);
  outcome.expansions = budget_state.used;
  if (result == Backtracker::Result::budget_out) {
    outcome.status = ForgeStatus::timeout;
    return outcome;
  }
  if (result == Backtracker::Result::exhausted) {
    outcome.status = ForgeStatus::infeasible;
    return outcome;
  }

  outcome.status = ForgeStatus::found;
  outcome.witness.resize(d);
  for (int j = 0; j < d; ++j) {
    outcome.witness[j] = pick_coordinate(cur_lo[j], cur_hi[j], z[j]);
  }

  // Soundness: the witness must reproduce the required pattern exactly and,
  // when the distance constraint is active, sit within epsilon of z.
  for (size_t i = 0; i < ensemble.m(); ++i) {
    int required = sigma_fake.bits[i] == 0 ? y : -y;
    if (predict_tree(ensemble.trees[i], outcome.witness) != required) {
      throw std::logic_error("forge_instance: witness fails pattern check");
    }
  }
  if (epsilon < 1.0) {
    for (int j = 0; j < d; ++j) {
      if (std::abs(outcome.witness[j] - z[j]) > epsilon) {
        throw std::logic_error("forge_instance: witness violates L-inf bound");
      }
    }
  }
  return outcome;
}

double ForgeryResult::ratio() const {
  if (k_original == 0) return 0.0;
  return std::min(1.0, static_cast<double>(forged) / static_cast<double>(k_original));
}

std::string row_status_name(RowStatus s) {
  switch (s) {
    case RowStatus::forged:
      return "forged";
    case RowStatus::infeasible:
      return "infeasible";
    default:
      return "timeout";
  }
}

ForgeryResult forge_trigger_set(const Ensemble& ensemble, const Signature& sigma_fake,
                                const Dataset& test, double epsilon, size_t k_original,
                                uint64_t per_instance_budget, double wall_clock_secs,
                                bool target_flipped, int n_threads) {
  test.validate();
  if (k_original == 0) throw std::invalid_argument("forge_trigger_set: k_original must be >= 1");

  ForgeryResult result;
  result.epsilon = epsilon;
  result.k_original = k_original;

  const size_t n = test.n();
  std::vector<ForgeRowOutcome> slots(n);
  std::vector<char> done(n, 0);
  std::atomic<size_t> next{0};
  std::atomic<bool> exhausted{false};
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(wall_clock_secs);

  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      if (std::chrono::steady_clock::now() > deadline) {
        exhausted.store(true);
        return;
      }
      auto z = test.row(i);
      int target = target_flipped ? -test.y[i] : test.y[i];
      ForgeOutcome out = forge_instance(ensemble, sigma_fake, target, z, epsilon,
                                        per_instance_budget);
      ForgeRowOutcome& slot = slots[i];
      slot.seed_row_id = test.ids[i];
      slot.target = target;
      if (out.status == ForgeStatus::found) {
        slot.status = RowStatus::forged;
        slot.x = std::move(out.witness);
        double linf = 0.0;
        for (int j = 0; j < test.d; ++j) linf = std::max(linf, std::abs(slot.x[j] - z[j]));
        slot.linf = linf;
      } else {
        slot.status =
            out.status == ForgeStatus::infeasible ? RowStatus::infeasible : RowStatus::timeout;
      }
      done[i] = 1;
    }
  };

  int threads = n_threads > 0 ? n_threads
                              : std::max(1u, std::thread::hardware_concurrency());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  result.wall_clock_exhausted = exhausted.load();
  for (size_t i = 0; i < n; ++i) {
    if (!done[i]) continue;
    result.attempted += 1;
    switch (slots[i].status) {
      case RowStatus::forged:
        result.forged += 1;
        break;
      case RowStatus::infeasible:
        result.infeasible += 1;
        break;
      case RowStatus::timeout:
        result.timeout += 1;
        break;
    }
    result.rows.push_back(std::move(slots[i]));
  }
  return result;
}

void write_detection_csv(const std::string& path, const std::vector<DetectionReport>& reports) {
  std::ofstream f(path);
  if (!f) throw DatasetError("write_detection_csv: cannot open " + path);
  f << "statistic,mean,std,correct,wrong,uncertain,strategy\n";
  for (const auto& r : reports) {
    f << statistic_name(r.statistic) << ',' << format_double(r.mean) << ','
      << format_double(r.stddev) << ',';
    if (r.scored()) {
      f << r.correct << ',' << r.wrong;
    } else {
      f << ',';
    }
    f << ',' << r.uncertain << ',' << r.strategy << '\n';
  }
}

void write_forgery_rows_csv(const std::string& path, const ForgeryResult& result, int d) {
  std::ofstream f(path);
  if (!f) throw DatasetError("write_forgery_rows_csv: cannot open " + path);
  f << "seed_row_id,status,linf_distance";
  for (int j = 1; j <= d; ++j) f << ",x" << j;
  f << '\n';
  for (const auto& row : result.rows) {
    f << row.seed_row_id << ',' << row_status_name(row.status) << ',';
    if (row.status == RowStatus::forged) {
      f << format_double(row.linf);
      for (double v : row.x) f << ',' << format_double(v);
    } else {
      for (int j = 0; j < d; ++j) f << ',';
    }
    f << '\n';
  }
}

void write_forgery_summary_csv(const std::string& path, const std::vector<ForgeryResult>& sweeps) {
  std::ofstream f(path);
  if (!f) throw DatasetError("write_forgery_summary_csv: cannot open " + path);
  f << "epsilon,ratio,forged,infeasible,timeout,attempted,k_original,wall_clock_exhausted\n";
  for (const auto& r : sweeps) {
    f << format_double(r.epsilon) << ',' << format_double(r.ratio()) << ',' << r.forged << ','
      << r.infeasible << ',' << r.timeout << ',' << r.attempted << ',' << r.k_original << ','
      << (r.wall_clock_exhausted ? 1 : 0) << '\n';
  }
}

}  // namespace treemark
