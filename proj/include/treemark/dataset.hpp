#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace treemark {

// Row-major feature matrix with {-1,+1} labels and stable per-row ids.
// Subsetting operations preserve ids, so a trigger row can always be traced
// back to its position in the parent training set.
struct Dataset {
  std::vector<double> x;  // n * d, row-major
  std::vector<int> y;     // each exactly -1 or +1
  std::vector<int64_t> ids;
  int d = 0;
  std::vector<std::string> feature_names;  // size d
  std::string label_name = "label";
  std::string pos_class = "1";   // written for label +1
  std::string neg_class = "-1";  // written for label -1

  size_t n() const { return y.size(); }
  std::span<const double> row(size_t i) const { return {x.data() + i * d, static_cast<size_t>(d)}; }

  // Throws DatasetError if any structural invariant is broken.
  void validate() const;
};

bool same_data(const Dataset& a, const Dataset& b);

// Subset of a dataset preserving row order, labels and ids.
Dataset subset_rows(const Dataset& data, std::span<const size_t> indices);

// Trigger rows keep their original labels; origin_ids point into the parent
// training set.
struct TriggerSet {
  Dataset rows;
  std::vector<int64_t> origin_ids;
  size_t k() const { return origin_ids.size(); }
};

// CSV with a header row; the named label column must hold exactly two
// distinct classes; the lexicographically larger class maps to +1.
Dataset load_csv(const std::string& path, const std::string& label_column = "label");
void save_csv(const Dataset& data, const std::string& path);

// LIBSVM sparse lines `label idx:val ...`, 1-based indices, absent -> 0.
// Labels {-1,+1} kept, 0 maps to -1.
Dataset load_libsvm(const std::string& path);
void save_libsvm(const Dataset& data, const std::string& path);

// Per-feature affine map to [0,1] fitted on one dataset and applied to
// others with clamping; constant features map to 0.
class MinMaxScaler {
 public:
  void fit(const Dataset& data);
  Dataset transform(const Dataset& data) const;
  bool fitted() const { return !min_.empty(); }
  const std::vector<double>& mins() const { return min_; }
  const std::vector<double>& ranges() const { return range_; }

 private:
  std::vector<double> min_;
  std::vector<double> range_;  // 0 marks a constant feature
};

// Fit-and-transform on the same data.
Dataset normalize_minmax(const Dataset& data);

// Uniform subset preserving class proportions within one row per class.
Dataset stratified_sample(const Dataset& data, size_t count, uint64_t seed);
Dataset stratified_sample_fraction(const Dataset& data, double fraction, uint64_t seed);

// Stratified split; test gets round(test_fraction * n) rows.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             uint64_t seed);

inline constexpr double kTriggerCapFraction = 0.1;

// Uniform random subset of training rows with their original labels.
// Requires 1 <= k <= 10% of the training rows.
TriggerSet sample_trigger(const Dataset& train, size_t k, uint64_t seed);

// Negates every label; ids unchanged. Involution.
TriggerSet flip_labels(const TriggerSet& ts);

// Trigger file format: the dataset CSV plus a leading origin_id column.
// Labels are written numerically so single-class trigger sets stay loadable.
void save_trigger(const TriggerSet& ts, const std::string& path);
TriggerSet load_trigger(const std::string& path);

}  // namespace treemark
