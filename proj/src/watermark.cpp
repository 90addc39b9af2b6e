#include "treemark/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "treemark/errors.hpp"
#include "treemark/rng.hpp"

namespace treemark {

namespace {

constexpr uint64_t kVerificationSeed = 0x76657269667921ull;

// Population standard deviation.
std::pair<double, double> mean_sd(const std::vector<double>& v) {
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var)};
}

}  // namespace

size_t Signature::zeros() const {
  return static_cast<size_t>(std::count(bits.begin(), bits.end(), uint8_t{0}));
}

Signature random_signature(size_t m, double ones_fraction, uint64_t seed) {
  if (ones_fraction < 0.0 || ones_fraction > 1.0) {
    throw std::invalid_argument("random_signature: ones_fraction outside [0,1]");
  }
  size_t ones = static_cast<size_t>(std::llround(ones_fraction * static_cast<double>(m)));
  Signature sigma;
  sigma.bits.assign(m, 0);
  DetRng rng(seed);
  for (size_t i : rng.sample_indices(m, ones)) sigma.bits[i] = 1;
  return sigma;
}

void save_signature(const Signature& sigma, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DatasetError("save_signature: cannot open " + path);
  for (uint8_t b : sigma.bits) f << (b ? '1' : '0');
  f << '\n';
}

Signature load_signature(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DatasetError("load_signature: cannot open " + path);
  std::string line;
  std::getline(f, line);
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line.empty()) throw DatasetError("load_signature: empty signature file");
  Signature sigma;
  for (char c : line) {
    if (c != '0' && c != '1') throw DatasetError("load_signature: character outside {0,1}");
    sigma.bits.push_back(c == '1' ? 1 : 0);
  }
  return sigma;
}

HyperParams adjusted_from_stats(const HyperParams& hp, double mean_depth, double sd_depth,
                                double mean_leaves, double sd_leaves) {
  HyperParams out = hp;
  out.max_depth = std::max(1, static_cast<int>(std::floor(mean_depth - sd_depth)));
  out.max_leaves = std::max(2, static_cast<int>(std::floor(mean_leaves - sd_leaves)));
  return out;
}

HyperParams adjust_hyperparams(const Dataset& data, const HyperParams& hp) {
  Ensemble probe = train_forest(data, unit_weights(data.n()), hp);
  std::vector<double> depths, leaves;
  for (const Tree& t : probe.trees) {
    TreeStats stats = tree_stats(t);
    depths.push_back(static_cast<double>(stats.depth));
    leaves.push_back(static_cast<double>(stats.leaves));
  }
  auto [mean_depth, sd_depth] = mean_sd(depths);
  auto [mean_leaves, sd_leaves] = mean_sd(leaves);
  return adjusted_from_stats(hp, mean_depth, sd_depth, mean_leaves, sd_leaves);
}

namespace {

// Positions of the trigger rows inside a train set, matched by id.
std::vector<size_t> trigger_positions(const Dataset& train, const TriggerSet& trigger,
                                      bool check_labels) {
  std::vector<size_t> pos;
  pos.reserve(trigger.k());
  for (size_t t = 0; t < trigger.k(); ++t) {
    auto it = std::find(train.ids.begin(), train.ids.end(), trigger.origin_ids[t]);
    if (it == train.ids.end()) {
      throw std::invalid_argument("trigger row id not present in train set");
    }
    size_t i = static_cast<size_t>(it - train.ids.begin());
    if (check_labels && train.y[i] != trigger.rows.y[t]) {
      throw std::invalid_argument("trigger label does not match train set label");
    }
    pos.push_back(i);
  }
  return pos;
}

bool all_trees_match_trigger(const Ensemble& ensemble, const TriggerSet& trigger) {
  for (size_t t = 0; t < trigger.k(); ++t) {
    auto x = trigger.rows.row(t);
    for (const Tree& tree : ensemble.trees) {
      if (predict_tree(tree, x) != trigger.rows.y[t]) return false;
    }
  }
  return true;
}

}  // namespace

TrainWithTriggerResult train_with_trigger(const Dataset& train, const TriggerSet& trigger, int m,
                                          const HyperParams& hp, int max_rounds) {
  if (m < 1) throw std::invalid_argument("train_with_trigger: m must be >= 1");
  if (max_rounds < 0) throw std::invalid_argument("train_with_trigger: negative max_rounds");
  auto positions = trigger_positions(train, trigger, /*check_labels=*/true);

  HyperParams round_hp = hp;
  round_hp.m = m;
  WeightMap weights = unit_weights(train.n());
  for (int round = 0; round <= max_rounds; ++round) {
    round_hp.seed = derive_seed(hp.seed, "round", static_cast<uint64_t>(round));
    Ensemble ensemble = train_forest(train, weights, round_hp);
    if (all_trees_match_trigger(ensemble, trigger)) {
      return {std::move(ensemble), round};
    }
    for (size_t p : positions) weights[p] += 1;
  }
  throw NonConvergenceError("train_with_trigger: trigger behavior not learned within " +
                                std::to_string(max_rounds) + " rounds",
                            max_rounds);
}

WatermarkArtifacts embed_watermark(const Dataset& train, int m, const Signature& sigma, size_t k,
                                   uint64_t seed, int max_rounds) {
  train.validate();
  if (m < 1) throw std::invalid_argument("embed_watermark: m must be >= 1");
  if (sigma.m() != static_cast<size_t>(m)) {
    throw std::invalid_argument("embed_watermark: |sigma| must equal m");
  }

  WatermarkArtifacts art;
  art.signature = sigma;
  art.grid_hp = grid_search(train, m, HyperGrid{}, 5, derive_seed(seed, "grid"));
  art.trigger = sample_trigger(train, k, derive_seed(seed, "trigger"));

  const int m0 = static_cast<int>(sigma.zeros());
  const int m1 = m - m0;

  HyperParams probe_hp = art.grid_hp;
  probe_hp.seed = derive_seed(seed, "adjust");
  art.adjusted_hp = adjust_hyperparams(train, probe_hp);

  Ensemble t0, t1;
  if (m0 > 0) {
    HyperParams hp0 = art.adjusted_hp;
    hp0.seed = derive_seed(seed, "t0");
    auto res = train_with_trigger(train, art.trigger, m0, hp0, max_rounds);
    t0 = std::move(res.ensemble);
    art.rounds_T0 = res.rounds;
  }
  if (m1 > 0) {
    TriggerSet flipped = flip_labels(art.trigger);
    Dataset train_flipped = train;
    for (size_t p : trigger_positions(train, art.trigger, /*check_labels=*/true)) {
      train_flipped.y[p] = -train_flipped.y[p];
    }
    HyperParams hp1 = art.adjusted_hp;
    hp1.seed = derive_seed(seed, "t1");
    auto res = train_with_trigger(train_flipped, flipped, m1, hp1, max_rounds);
    t1 = std::move(res.ensemble);
    art.rounds_T1 = res.rounds;
  }

  art.ensemble.d = train.d;
  size_t next0 = 0, next1 = 0;
  for (int i = 0; i < m; ++i) {
    Ensemble& source = sigma.bits[i] == 0 ? t0 : t1;
    size_t& next = sigma.bits[i] == 0 ? next0 : next1;
    art.ensemble.trees.push_back(std::move(source.trees[next]));
    art.ensemble.feature_subsets.push_back(std::move(source.feature_subsets[next]));
    ++next;
  }

  // The central invariant: predict_tree(t_i, x) == y iff sigma_i == 0,
  // for every trigger row.
  for (size_t t = 0; t < art.trigger.k(); ++t) {
    auto x = art.trigger.rows.row(t);
    for (int i = 0; i < m; ++i) {
      bool correct = predict_tree(art.ensemble.trees[i], x) == art.trigger.rows.y[t];
      if (correct != (sigma.bits[i] == 0)) {
        throw std::logic_error("embed_watermark: postcondition violated");
      }
    }
  }
  return art;
}

std::vector<size_t> VerificationReport::mismatched_trees() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < per_tree.size(); ++i) {
    if (per_tree[i].expected_correct != per_tree[i].observed_correct) out.push_back(i);
  }
  return out;
}

ModelOracle oracle_from(const Ensemble& ensemble) {
  return [&ensemble](std::span<const double> x) { return predict_all(ensemble, x); };
}

Dataset make_disguise(const TriggerSet& trigger, const Dataset& test) {
  if (trigger.rows.d != test.d) throw std::invalid_argument("make_disguise: dimension mismatch");
  Dataset out;
  out.d = test.d;
  out.feature_names = test.feature_names;
  out.label_name = test.label_name;
  out.pos_class = test.pos_class;
  out.neg_class = test.neg_class;
  out.x = trigger.rows.x;
  out.x.insert(out.x.end(), test.x.begin(), test.x.end());
  out.y = trigger.rows.y;
  out.y.insert(out.y.end(), test.y.begin(), test.y.end());
  out.ids.resize(out.y.size());
  std::iota(out.ids.begin(), out.ids.end(), int64_t{0});
  return out;
}

VerificationReport verify_watermark(const ModelOracle& model, const Signature& sigma,
                                    const TriggerSet& trigger, const Dataset& disguise) {
  disguise.validate();
  if (trigger.rows.d != disguise.d) {
    throw std::invalid_argument("verify_watermark: dimension mismatch");
  }

  // Containment precondition: every trigger row appears verbatim in the
  // disguise set. Matching is by feature content, so the disguise may carry
  // fresh ids.
  std::vector<size_t> where(trigger.k());
  for (size_t t = 0; t < trigger.k(); ++t) {
    auto target = trigger.rows.row(t);
    bool found = false;
    for (size_t i = 0; i < disguise.n() && !found; ++i) {
      auto candidate = disguise.row(i);
      if (std::equal(target.begin(), target.end(), candidate.begin())) {
        where[t] = i;
        found = true;
      }
    }
    if (!found) {
      throw std::invalid_argument("verify_watermark: trigger row missing from disguise set");
    }
  }

  // Query every disguise row exactly once, in a shuffled but reproducible
  // order; trigger rows are never queried in isolation.
  std::vector<size_t> order(disguise.n());
  std::iota(order.begin(), order.end(), size_t{0});
  DetRng rng(kVerificationSeed);
  rng.shuffle(order);

  std::vector<std::vector<int>> responses(disguise.n());
  for (size_t i : order) {
    responses[i] = model(disguise.row(i));
    if (responses[i].size() != sigma.m()) {
      throw IncompatibleModelError("verify_watermark: model answered " +
                                   std::to_string(responses[i].size()) +
                                   " labels, expected " + std::to_string(sigma.m()));
    }
  }

  VerificationReport report;
  report.disguise_size = disguise.n();
  report.per_tree.resize(sigma.m());
  for (size_t i = 0; i < sigma.m(); ++i) {
    bool observed = true;
    for (size_t t = 0; t < trigger.k(); ++t) {
      if (responses[where[t]][i] != trigger.rows.y[t]) {
        observed = false;
        break;
      }
    }
    report.per_tree[i] = {sigma.bits[i] == 0, observed};
  }
  report.matched = report.mismatched_trees().empty();
  return report;
}

}  // namespace treemark
