// treemark: train, watermark, verify and attack random-forest classifiers
// with per-tree signature behavior on a trigger set.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unistd.h>

#include "treemark/attacks.hpp"
#include "treemark/dataset.hpp"
#include "treemark/errors.hpp"
#include "treemark/forest.hpp"
#include "treemark/model_io.hpp"
#include "treemark/num_format.hpp"
#include "treemark/reduction.hpp"
#include "treemark/rng.hpp"
#include "treemark/watermark.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace treemark;

namespace {

// ---------------------------------------------------------------------------
// Run manifest: config hash, per-stage seeds, artifacts, wall-clock per stage.
// Timing fields are excluded from the determinism contract.

class RunManifest {
 public:
  RunManifest(std::string command, std::string out_dir)
      : command_(std::move(command)), out_dir_(std::move(out_dir)) {}

  void config(const std::string& key, const std::string& value) {
    config_.emplace_back(key, value);
  }
  void config(const std::string& key, double value) { config(key, format_double(value)); }
  void config(const std::string& key, uint64_t value) { config(key, std::to_string(value)); }
  void seed(const std::string& stage, uint64_t value) { seeds_.emplace_back(stage, value); }
  void artifact(const std::string& path) { artifacts_.push_back(path); }
  void timing(const std::string& stage, double ms) { timings_.emplace_back(stage, ms); }

  uint64_t config_hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
      }
    };
    for (const auto& [k, v] : config_) {
      mix(k);
      mix("=");
      mix(v);
      mix("\n");
    }
    return h;
  }

  void write() const {
    json j;
    j["command"] = command_;
    j["config"] = json::object();
    for (const auto& [k, v] : config_) j["config"][k] = v;
    char hash_hex[19];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(config_hash()));
    j["config_hash"] = hash_hex;
    j["seeds"] = json::object();
    for (const auto& [stage, value] : seeds_) j["seeds"][stage] = value;
    j["artifacts"] = artifacts_;
    j["timings_ms"] = json::object();
    for (const auto& [stage, ms] : timings_) j["timings_ms"][stage] = ms;
    std::ofstream f(fs::path(out_dir_) / "manifest.json");
    f << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::string out_dir_;
  std::vector<std::pair<std::string, std::string>> config_;
  std::vector<std::pair<std::string, uint64_t>> seeds_;
  std::vector<std::string> artifacts_;
  std::vector<std::pair<std::string, double>> timings_;
};

class StageTimer {
 public:
  explicit StageTimer(RunManifest& manifest, std::string stage)
      : manifest_(manifest), stage_(std::move(stage)),
        start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_);
    manifest_.timing(stage_, ms.count());
  }

 private:
  RunManifest& manifest_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

// One writer per output directory at a time.
class DirLock {
 public:
  explicit DirLock(const std::string& out_dir) : path_(fs::path(out_dir) / ".lock") {
    fs::create_directories(out_dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      throw DatasetError("output directory is locked by another run: " + out_dir +
                         " (remove " + path_.string() + " if stale)");
    }
  }
  ~DirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

// ---------------------------------------------------------------------------
// Shared data pipeline: load, stratified 80/20 split, min-max normalization
// fitted on the train split and applied to both with clamping.

struct DataOptions {
  std::string dataset;
  std::string format = "csv";
  std::string label_column = "label";
  double test_frac = 0.2;
};

struct SplitData {
  Dataset train;
  Dataset test;
};

SplitData load_and_split(const DataOptions& opt, uint64_t split_seed) {
  Dataset raw = opt.format == "libsvm" ? load_libsvm(opt.dataset)
                                       : load_csv(opt.dataset, opt.label_column);
  auto [train_raw, test_raw] = train_test_split(raw, opt.test_frac, split_seed);
  MinMaxScaler scaler;
  scaler.fit(train_raw);
  return {scaler.transform(train_raw), scaler.transform(test_raw)};
}

void add_data_options(CLI::App* cmd, DataOptions& opt) {
  cmd->add_option("--dataset", opt.dataset, "input dataset file")->required();
  cmd->add_option("--format", opt.format, "dataset format")
      ->check(CLI::IsMember({"csv", "libsvm"}))
      ->capture_default_str();
  cmd->add_option("--label-column", opt.label_column, "CSV label column name")
      ->capture_default_str();
  cmd->add_option("--test-frac", opt.test_frac, "held-out test fraction")
      ->check(CLI::Range(0.01, 0.9))
      ->capture_default_str();
}

std::string depth_str(int v) { return v >= kUnboundedDepth ? "unbounded" : std::to_string(v); }
std::string leaves_str(int v) { return v >= kUnboundedLeaves ? "unbounded" : std::to_string(v); }

json hp_json(const HyperParams& hp) {
  json j;
  j["m"] = hp.m;
  j["max_depth"] = depth_str(hp.max_depth);
  j["max_leaves"] = leaves_str(hp.max_leaves);
  j["min_samples_leaf"] = hp.min_samples_leaf;
  j["features_per_tree"] = hp.features_per_tree;
  j["criterion"] = criterion_name(hp.criterion);
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  f << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// train: grid search + standard forest, baseline for accuracy comparisons.

struct TrainArgs {
  DataOptions data;
  int m = 100;
  uint64_t seed = 42;
  std::string out = "out";
};

int cmd_train(const TrainArgs& args) {
  DirLock lock(args.out);
  RunManifest manifest("train", args.out);
  manifest.config("dataset", args.data.dataset);
  manifest.config("format", args.data.format);
  manifest.config("m", static_cast<uint64_t>(args.m));
  manifest.config("seed", args.seed);
  manifest.config("test_frac", args.data.test_frac);

  uint64_t split_seed = derive_seed(args.seed, "split");
  uint64_t grid_seed = derive_seed(args.seed, "grid");
  uint64_t forest_seed = derive_seed(args.seed, "forest");
  manifest.seed("split", split_seed);
  manifest.seed("grid", grid_seed);
  manifest.seed("forest", forest_seed);

  SplitData data = load_and_split(args.data, split_seed);

  HyperParams hp;
  {
    StageTimer t(manifest, "grid_search");
    hp = grid_search(data.train, args.m, HyperGrid{}, 5, grid_seed);
  }
  hp.seed = forest_seed;
  Ensemble forest;
  {
    StageTimer t(manifest, "train");
    forest = train_forest(data.train, unit_weights(data.train.n()), hp);
  }

  fs::path out(args.out);
  save_model(forest, (out / "model.json").string());
  save_csv(data.test, (out / "test.csv").string());
  manifest.artifact("model.json");
  manifest.artifact("test.csv");

  json report;
  report["command"] = "train";
  report["n_train"] = data.train.n();
  report["n_test"] = data.test.n();
  report["d"] = data.train.d;
  report["hyperparams"] = hp_json(hp);
  report["train_accuracy"] = accuracy(forest, data.train);
  report["test_accuracy"] = accuracy(forest, data.test);
  write_json(out / "report.json", report);
  manifest.artifact("report.json");
  manifest.write();

  std::cout << "train: test accuracy " << format_double(report["test_accuracy"].get<double>())
            << ", model written to " << (out / "model.json").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// watermark: embed a signature, write model + trigger + signature + report.

struct WatermarkArgs {
  DataOptions data;
  int m = 100;
  double trigger_frac = 0.02;
  double ones_frac = 0.5;
  std::string sigma_file;
  int max_rounds = kDefaultMaxRounds;
  uint64_t seed = 42;
  std::string out = "out";
};

int cmd_watermark(const WatermarkArgs& args) {
  DirLock lock(args.out);
  RunManifest manifest("watermark", args.out);
  manifest.config("dataset", args.data.dataset);
  manifest.config("format", args.data.format);
  manifest.config("m", static_cast<uint64_t>(args.m));
  manifest.config("trigger_frac", args.trigger_frac);
  manifest.config("ones_frac", args.ones_frac);
  manifest.config("sigma_file", args.sigma_file.empty() ? "<random>" : args.sigma_file);
  manifest.config("max_rounds", static_cast<uint64_t>(args.max_rounds));
  manifest.config("seed", args.seed);

  uint64_t split_seed = derive_seed(args.seed, "split");
  uint64_t sigma_seed = derive_seed(args.seed, "sigma");
  uint64_t embed_seed = derive_seed(args.seed, "embed");
  uint64_t baseline_seed = derive_seed(args.seed, "baseline");
  manifest.seed("split", split_seed);
  manifest.seed("sigma", sigma_seed);
  manifest.seed("embed", embed_seed);
  manifest.seed("baseline", baseline_seed);

  SplitData data = load_and_split(args.data, split_seed);
  size_t k = static_cast<size_t>(args.trigger_frac * static_cast<double>(data.train.n()));
  Signature sigma = args.sigma_file.empty()
                        ? random_signature(args.m, args.ones_frac, sigma_seed)
                        : load_signature(args.sigma_file);

  WatermarkArtifacts art;
  {
    StageTimer t(manifest, "embed");
    art = embed_watermark(data.train, args.m, sigma, k, embed_seed, args.max_rounds);
  }

  HyperParams baseline_hp = art.grid_hp;
  baseline_hp.seed = baseline_seed;
  Ensemble baseline;
  {
    StageTimer t(manifest, "baseline");
    baseline = train_forest(data.train, unit_weights(data.train.n()), baseline_hp);
  }

  fs::path out(args.out);
  save_model(art.ensemble, (out / "model.json").string());
  save_trigger(art.trigger, (out / "trigger.csv").string());
  save_signature(art.signature, (out / "sigma.txt").string());
  save_csv(data.test, (out / "test.csv").string());
  for (const char* name : {"model.json", "trigger.csv", "sigma.txt", "test.csv"}) {
    manifest.artifact(name);
  }

  double base_acc = accuracy(baseline, data.test);
  double wm_acc = accuracy(art.ensemble, data.test);
  json report;
  report["command"] = "watermark";
  report["n_train"] = data.train.n();
  report["n_test"] = data.test.n();
  report["k"] = k;
  report["m"] = args.m;
  report["grid_hp"] = hp_json(art.grid_hp);
  report["adjusted_hp"] = hp_json(art.adjusted_hp);
  report["rounds_t0"] = art.rounds_T0;
  report["rounds_t1"] = art.rounds_T1;
  report["baseline_test_accuracy"] = base_acc;
  report["watermarked_test_accuracy"] = wm_acc;
  report["accuracy_drop"] = base_acc - wm_acc;
  write_json(out / "report.json", report);
  manifest.artifact("report.json");
  manifest.write();

  std::cout << "watermark: rounds T0=" << art.rounds_T0 << " T1=" << art.rounds_T1
            << ", test accuracy " << format_double(wm_acc) << " (baseline "
            << format_double(base_acc) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify: black-box check of a model file against signature + trigger.

struct VerifyArgs {
  std::string model;
  std::string sigma;
  std::string trigger;
  std::string test;
  std::string out;
};

int cmd_verify(const VerifyArgs& args) {
  Ensemble model = load_model(args.model);
  Signature sigma = load_signature(args.sigma);
  TriggerSet trigger = load_trigger(args.trigger);
  Dataset test = load_csv(args.test);

  if (model.m() != sigma.m()) {
    std::cerr << "verify: model has " << model.m() << " trees but signature has " << sigma.m()
              << " bits\n";
    return kExitIncompatibleModel;
  }
  if (model.d != test.d || model.d != trigger.rows.d) {
    std::cerr << "verify: dimension mismatch between model (d=" << model.d << "), trigger (d="
              << trigger.rows.d << ") and test (d=" << test.d << ")\n";
    return kExitInputError;
  }

  Dataset disguise = make_disguise(trigger, test);
  VerificationReport report = verify_watermark(oracle_from(model), sigma, trigger, disguise);

  json j;
  j["command"] = "verify";
  j["matched"] = report.matched;
  j["disguise_size"] = report.disguise_size;
  j["trigger_size"] = trigger.k();
  j["mismatched_trees"] = report.mismatched_trees();
  if (!args.out.empty()) {
    DirLock lock(args.out);
    RunManifest manifest("verify", args.out);
    manifest.config("model", args.model);
    manifest.config("sigma_file", args.sigma);
    manifest.config("trigger", args.trigger);
    manifest.config("test", args.test);
    write_json(fs::path(args.out) / "verify_report.json", j);
    manifest.artifact("verify_report.json");
    manifest.write();
  }
  std::cout << j.dump(2) << '\n';
  if (!report.matched) {
    std::cerr << "verify: signature mismatch on " << report.mismatched_trees().size()
              << " trees\n";
    return kExitMismatch;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// attack detect / attack forge.

struct DetectArgs {
  std::string model;
  std::string sigma_file;  // optional ground truth for scoring
  std::string out = "out";
};

int cmd_attack_detect(const DetectArgs& args) {
  Ensemble model = load_model(args.model);
  Signature truth;
  bool scored = !args.sigma_file.empty();
  if (scored) truth = load_signature(args.sigma_file);

  DirLock lock(args.out);
  RunManifest manifest("attack-detect", args.out);
  manifest.config("model", args.model);
  manifest.config("sigma_file", scored ? args.sigma_file : "<none>");

  std::vector<DetectionReport> reports;
  for (TreeStatistic stat : {TreeStatistic::depth, TreeStatistic::leaves}) {
    reports.push_back(detect_band(model, stat, scored ? &truth : nullptr));
    reports.push_back(detect_mean(model, stat, scored ? &truth : nullptr));
  }
  write_detection_csv((fs::path(args.out) / "detection.csv").string(), reports);
  manifest.artifact("detection.csv");
  manifest.write();

  for (const auto& r : reports) {
    std::cout << r.strategy << '/' << statistic_name(r.statistic) << ": mean "
              << format_double(r.mean) << " sd " << format_double(r.stddev);
    if (r.scored()) std::cout << " correct " << r.correct << " wrong " << r.wrong;
    std::cout << " uncertain " << r.uncertain << '\n';
  }
  return kExitOk;
}

struct ForgeArgs {
  std::string model;
  std::string test;
  std::string sigma_file;  // optional explicit fake signature
  std::string trigger_file;
  double ones_frac = 0.5;
  std::vector<double> epsilons;
  size_t k_original = 0;
  uint64_t budget_nodes = kDefaultNodeBudget;
  double budget_secs = 1800.0;
  bool target_flipped = false;
  int threads = 0;
  uint64_t seed = 42;
  std::string out = "out";
};

int cmd_attack_forge(const ForgeArgs& args) {
  Ensemble model = load_model(args.model);
  Dataset test = load_csv(args.test);
  if (model.d != test.d) {
    std::cerr << "forge: model d=" << model.d << " but test d=" << test.d << '\n';
    return kExitInputError;
  }

  size_t k_original = args.k_original;
  if (k_original == 0 && !args.trigger_file.empty()) {
    k_original = load_trigger(args.trigger_file).k();
  }
  if (k_original == 0) {
    std::cerr << "forge: need --k-original or --trigger-file to scale the ratio\n";
    return kExitInputError;
  }

  Signature sigma_fake;
  if (!args.sigma_file.empty()) {
    sigma_fake = load_signature(args.sigma_file);
  } else {
    sigma_fake = random_signature(model.m(), args.ones_frac, derive_seed(args.seed, "fake-sigma"));
  }
  if (sigma_fake.m() != model.m()) {
    std::cerr << "forge: signature has " << sigma_fake.m() << " bits but model has " << model.m()
              << " trees\n";
    return kExitIncompatibleModel;
  }

  std::vector<double> epsilons = args.epsilons;
  if (epsilons.empty()) epsilons = {0.1, 0.3, 0.5, 0.7, 0.9};

  DirLock lock(args.out);
  RunManifest manifest("attack-forge", args.out);
  manifest.config("model", args.model);
  manifest.config("test", args.test);
  manifest.config("k_original", static_cast<uint64_t>(k_original));
  manifest.config("budget_nodes", args.budget_nodes);
  manifest.config("budget_secs", args.budget_secs);
  manifest.config("target_flipped", args.target_flipped ? "1" : "0");
  manifest.config("seed", args.seed);
  manifest.seed("fake-sigma", derive_seed(args.seed, "fake-sigma"));
  save_signature(sigma_fake, (fs::path(args.out) / "fake_sigma.txt").string());
  manifest.artifact("fake_sigma.txt");

  std::vector<ForgeryResult> sweeps;
  for (double eps : epsilons) {
    StageTimer t(manifest, "forge_eps_" + format_double(eps));
    ForgeryResult result = forge_trigger_set(model, sigma_fake, test, eps, k_original,
                                             args.budget_nodes, args.budget_secs,
                                             args.target_flipped, args.threads);
    std::string rows_name = "forge_rows_eps" + format_double(eps) + ".csv";
    write_forgery_rows_csv((fs::path(args.out) / rows_name).string(), result, model.d);
    manifest.artifact(rows_name);
    std::cout << "eps " << format_double(eps) << ": forged " << result.forged << "/"
              << result.attempted << " (ratio " << format_double(result.ratio())
              << ", infeasible " << result.infeasible << ", timeout " << result.timeout << ")\n";
    sweeps.push_back(std::move(result));
  }
  write_forgery_summary_csv((fs::path(args.out) / "forge_summary.csv").string(), sweeps);
  manifest.artifact("forge_summary.csv");
  manifest.write();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// reduce: 3SAT via the forgery solver.

struct ReduceArgs {
  std::string dimacs;
  std::string out_model;
  uint64_t budget_nodes = kDefaultSatBudget;
};

int cmd_reduce(const ReduceArgs& args) {
  Cnf3 phi = parse_dimacs(args.dimacs);
  if (!args.out_model.empty() && !phi.clauses.empty()) {
    save_model(convert_formula(phi), args.out_model);
  }
  SatResult result = sat_via_forgery(phi, args.budget_nodes);
  switch (result.status) {
    case SatStatus::sat: {
      std::cout << "s SATISFIABLE\nv";
      for (int j = 0; j < phi.n_vars; ++j) {
        std::cout << ' ' << (result.assignment[j] ? j + 1 : -(j + 1));
      }
      std::cout << " 0\n";
      return kExitOk;
    }
    case SatStatus::unsat:
      std::cout << "s UNSATISFIABLE\n";
      return kExitOk;
    default:
      std::cout << "s UNKNOWN\n";
      std::cerr << "reduce: node budget exhausted\n";
      return kExitNonConvergence;
  }
}

// ---------------------------------------------------------------------------
// eval: accuracy sweeps over trigger size or signature ones-fraction.

struct EvalArgs {
  DataOptions data;
  int m = 100;
  std::string sweep = "k";
  std::vector<double> values;
  int seeds = 5;
  double trigger_frac = 0.02;
  double ones_frac = 0.5;
  int max_rounds = kDefaultMaxRounds;
  uint64_t seed = 42;
  std::string out = "out";
};

int cmd_eval(const EvalArgs& args) {
  DirLock lock(args.out);
  RunManifest manifest("eval", args.out);
  manifest.config("dataset", args.data.dataset);
  manifest.config("sweep", args.sweep);
  manifest.config("m", static_cast<uint64_t>(args.m));
  manifest.config("seeds", static_cast<uint64_t>(args.seeds));
  manifest.config("seed", args.seed);

  std::vector<double> values = args.values;
  if (values.empty()) {
    values = args.sweep == "k" ? std::vector<double>{0.005, 0.01, 0.02, 0.04, 0.08}
                               : std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5,
                                                     0.6, 0.7, 0.8, 0.9};
  }

  std::ofstream csv(fs::path(args.out) / "sweep.csv");
  csv << "sweep,value,seed,k,ones_frac,baseline_test_acc,watermarked_test_acc,drop,"
         "rounds_t0,rounds_t1,status\n";

  for (size_t vi = 0; vi < values.size(); ++vi) {
    double value = values[vi];
    double trigger_frac = args.sweep == "k" ? value : args.trigger_frac;
    double ones_frac = args.sweep == "ones" ? value : args.ones_frac;
    for (int run = 0; run < args.seeds; ++run) {
      uint64_t root = derive_seed(args.seed, "eval", vi * 1000 + static_cast<uint64_t>(run));
      SplitData data = load_and_split(args.data, derive_seed(root, "split"));
      size_t k = static_cast<size_t>(trigger_frac * static_cast<double>(data.train.n()));
      Signature sigma = random_signature(args.m, ones_frac, derive_seed(root, "sigma"));

      csv << args.sweep << ',' << format_double(value) << ',' << run << ',' << k << ','
          << format_double(ones_frac) << ',';
      try {
        WatermarkArtifacts art = embed_watermark(data.train, args.m, sigma, k,
                                                 derive_seed(root, "embed"), args.max_rounds);
        HyperParams baseline_hp = art.grid_hp;
        baseline_hp.seed = derive_seed(root, "baseline");
        Ensemble baseline = train_forest(data.train, unit_weights(data.train.n()), baseline_hp);
        double base_acc = accuracy(baseline, data.test);
        double wm_acc = accuracy(art.ensemble, data.test);
        csv << format_double(base_acc) << ',' << format_double(wm_acc) << ','
            << format_double(base_acc - wm_acc) << ',' << art.rounds_T0 << ',' << art.rounds_T1
            << ",ok\n";
      } catch (const NonConvergenceError&) {
        csv << ",,,,," << "nonconvergence\n";
      }
      csv.flush();
    }
  }
  manifest.artifact("sweep.csv");
  manifest.write();
  std::cout << "eval: sweep written to " << (fs::path(args.out) / "sweep.csv").string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"watermarking toolkit for random-forest classifiers"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "grid search + standard forest baseline");
  add_data_options(train_cmd, train_args.data);
  train_cmd->add_option("--m", train_args.m, "tree count")->capture_default_str();
  train_cmd->add_option("--seed", train_args.seed, "root seed")->capture_default_str();
  train_cmd->add_option("--out", train_args.out, "output directory")->capture_default_str();

  WatermarkArgs wm_args;
  auto* wm_cmd = app.add_subcommand("watermark", "embed a signature watermark");
  add_data_options(wm_cmd, wm_args.data);
  wm_cmd->add_option("--m", wm_args.m, "tree count")->capture_default_str();
  wm_cmd->add_option("--trigger-frac", wm_args.trigger_frac, "trigger size as train fraction")
      ->check(CLI::Range(0.0001, 0.1))
      ->capture_default_str();
  wm_cmd->add_option("--ones-frac", wm_args.ones_frac, "fraction of signature bits set to 1")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  wm_cmd->add_option("--sigma-file", wm_args.sigma_file, "explicit signature file");
  wm_cmd->add_option("--max-rounds", wm_args.max_rounds, "retraining cap")->capture_default_str();
  wm_cmd->add_option("--seed", wm_args.seed, "root seed")->capture_default_str();
  wm_cmd->add_option("--out", wm_args.out, "output directory")->capture_default_str();

  VerifyArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "black-box watermark verification");
  verify_cmd->add_option("--model", verify_args.model, "model file")->required();
  verify_cmd->add_option("--sigma-file", verify_args.sigma, "signature file")->required();
  verify_cmd->add_option("--trigger", verify_args.trigger, "trigger set file")->required();
  verify_cmd->add_option("--test", verify_args.test, "disguise test CSV")->required();
  verify_cmd->add_option("--out", verify_args.out, "optional report directory");

  auto* attack_cmd = app.add_subcommand("attack", "watermark attacks");
  attack_cmd->require_subcommand(1);

  DetectArgs detect_args;
  auto* detect_cmd = attack_cmd->add_subcommand("detect", "structural signature detection");
  detect_cmd->add_option("--model", detect_args.model, "model file")->required();
  detect_cmd->add_option("--sigma-file", detect_args.sigma_file,
                         "ground-truth signature for scoring");
  detect_cmd->add_option("--out", detect_args.out, "output directory")->capture_default_str();

  ForgeArgs forge_args;
  auto* forge_cmd = attack_cmd->add_subcommand("forge", "trigger-set forgery");
  forge_cmd->add_option("--model", forge_args.model, "model file")->required();
  forge_cmd->add_option("--test", forge_args.test, "test CSV of seed instances")->required();
  forge_cmd->add_option("--sigma-file", forge_args.sigma_file, "explicit fake signature");
  forge_cmd->add_option("--trigger-file", forge_args.trigger_file,
                        "original trigger file (supplies k)");
  forge_cmd->add_option("--ones-frac", forge_args.ones_frac, "ones fraction of the fake signature")
      ->capture_default_str();
  forge_cmd->add_option("--epsilon", forge_args.epsilons, "distortion bounds to sweep");
  forge_cmd->add_option("--k-original", forge_args.k_original, "original trigger size");
  forge_cmd->add_option("--budget-nodes", forge_args.budget_nodes, "per-instance expansion cap")
      ->capture_default_str();
  forge_cmd->add_option("--budget-secs", forge_args.budget_secs, "wall-clock budget per epsilon")
      ->capture_default_str();
  forge_cmd->add_flag("--target-flipped", forge_args.target_flipped,
                      "forge the flipped label instead of the row label");
  forge_cmd->add_option("--threads", forge_args.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  forge_cmd->add_option("--seed", forge_args.seed, "root seed")->capture_default_str();
  forge_cmd->add_option("--out", forge_args.out, "output directory")->capture_default_str();

  ReduceArgs reduce_args;
  auto* reduce_cmd = app.add_subcommand("reduce", "decide 3SAT through the forgery solver");
  reduce_cmd->add_option("dimacs", reduce_args.dimacs, "DIMACS CNF file")->required();
  reduce_cmd->add_option("--out-model", reduce_args.out_model,
                         "write the converted ensemble as a model file");
  reduce_cmd->add_option("--budget-nodes", reduce_args.budget_nodes, "solver expansion cap")
      ->capture_default_str();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "accuracy sweeps over k or ones fraction");
  add_data_options(eval_cmd, eval_args.data);
  eval_cmd->add_option("--m", eval_args.m, "tree count")->capture_default_str();
  eval_cmd->add_option("--sweep", eval_args.sweep, "sweep variable")
      ->check(CLI::IsMember({"k", "ones"}))
      ->capture_default_str();
  eval_cmd->add_option("--values", eval_args.values, "sweep values (fractions)");
  eval_cmd->add_option("--seeds", eval_args.seeds, "runs per value")->capture_default_str();
  eval_cmd->add_option("--trigger-frac", eval_args.trigger_frac, "trigger fraction (ones sweep)")
      ->capture_default_str();
  eval_cmd->add_option("--ones-frac", eval_args.ones_frac, "ones fraction (k sweep)")
      ->capture_default_str();
  eval_cmd->add_option("--max-rounds", eval_args.max_rounds, "retraining cap")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.seed, "root seed")->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*wm_cmd) return cmd_watermark(wm_args);
    if (*verify_cmd) return cmd_verify(verify_args);
    if (*detect_cmd) return cmd_attack_detect(detect_args);
    if (*forge_cmd) return cmd_attack_forge(forge_args);
    if (*reduce_cmd) return cmd_reduce(reduce_args);
    if (*eval_cmd) return cmd_eval(eval_args);
  } catch (const NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const IncompatibleModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIncompatibleModel;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}
