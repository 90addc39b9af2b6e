#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "treemark/dataset.hpp"
#include "treemark/forest.hpp"

namespace treemark {

// Owner signature: bit i prescribes tree i's trigger-set behavior.
// 0 forces correct classification of every trigger row, 1 forces
// misclassification of every trigger row.
struct Signature {
  std::vector<uint8_t> bits;  // 0/1

  size_t m() const { return bits.size(); }
  size_t zeros() const;

  bool operator==(const Signature&) const = default;
};

// Random signature with round(ones_fraction * m) one-bits placed uniformly.
Signature random_signature(size_t m, double ones_fraction, uint64_t seed);

// Signature file: a single line of 0/1 characters.
void save_signature(const Signature& sigma, const std::string& path);
Signature load_signature(const std::string& path);

inline constexpr int kDefaultMaxRounds = 200;

// Trains a standard forest with hp, then lowers the depth and leaf bounds to
// floor(mean - stddev) of the observed per-tree statistics (clamped to
// max_depth >= 1, max_leaves >= 2). Other fields are unchanged.
HyperParams adjust_hyperparams(const Dataset& data, const HyperParams& hp);

// The bound arithmetic behind adjust_hyperparams, exposed for direct checks.
HyperParams adjusted_from_stats(const HyperParams& hp, double mean_depth, double sd_depth,
                                double mean_leaves, double sd_leaves);

struct TrainWithTriggerResult {
  Ensemble ensemble;
  int rounds = 0;  // weight-escalation passes; 0 means the first forest fit
};

// Iterated weighted retraining until every tree classifies every trigger row
// as labeled. Round r trains with seed derived from (hp.seed, r) and trigger
// weights 1 + r; all other weights stay 1. Throws NonConvergenceError after
// max_rounds retraining passes.
TrainWithTriggerResult train_with_trigger(const Dataset& train, const TriggerSet& trigger, int m,
                                          const HyperParams& hp, int max_rounds);

struct WatermarkArtifacts {
  Ensemble ensemble;
  TriggerSet trigger;
  Signature signature;
  HyperParams grid_hp;      // grid-search result, before adjustment
  HyperParams adjusted_hp;  // bounds used for both sub-ensembles
  int rounds_T0 = 0;
  int rounds_T1 = 0;
};

// Watermark creation: grid search, trigger sampling, hyper-parameter
// adjustment, then two trigger-constrained forests -- T0 (m' trees, original
// labels) and T1 (m - m' trees, flipped labels substituted into the train
// set) -- interleaved by signature bit. Postcondition, checked before
// returning: for every trigger row (x, y) and tree i,
// predict_tree(t_i, x) == y iff sigma_i == 0.
WatermarkArtifacts embed_watermark(const Dataset& train, int m, const Signature& sigma, size_t k,
                                   uint64_t seed, int max_rounds = kDefaultMaxRounds);

struct PerTreeCheck {
  bool expected_correct = false;  // sigma bit == 0
  bool observed_correct = false;  // tree classified every trigger row correctly
};

struct VerificationReport {
  bool matched = false;
  std::vector<PerTreeCheck> per_tree;
  size_t disguise_size = 0;

  std::vector<size_t> mismatched_trees() const;
};

// Black-box model: maps an instance to the per-tree label sequence.
using ModelOracle = std::function<std::vector<int>(std::span<const double>)>;

ModelOracle oracle_from(const Ensemble& ensemble);

// Trigger rows followed by the test split, under fresh ids.
Dataset make_disguise(const TriggerSet& trigger, const Dataset& test);

// Feeds every disguise row exactly once in a shuffled order fixed by an
// internal verification seed, then checks the per-tree trigger pattern
// against sigma. Trigger rows must be contained in the disguise set; they are
// never queried separately. Throws IncompatibleModelError if the model
// answers with a sequence whose length differs from |sigma|.
VerificationReport verify_watermark(const ModelOracle& model, const Signature& sigma,
                                    const TriggerSet& trigger, const Dataset& disguise);

}  // namespace treemark
