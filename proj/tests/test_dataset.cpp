#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "treemark/dataset.hpp"
#include "treemark/errors.hpp"
#include "treemark/rng.hpp"

using namespace treemark;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream f(p);
  f << content;
  return p;
}

Dataset toy_dataset(size_t n, int d, uint64_t seed) {
  Dataset ds;
  ds.d = d;
  DetRng rng(seed);
  for (size_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.x.push_back(rng.uniform01());
    ds.y.push_back(rng.below(2) == 0 ? -1 : 1);
    ds.ids.push_back(static_cast<int64_t>(i));
  }
  // Make sure both classes are present.
  ds.y[0] = 1;
  ds.y[n - 1] = -1;
  for (int j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j + 1));
  return ds;
}

}  // namespace

TEST_CASE("load_csv maps the lexicographically larger class to +1") {
  auto p = write_temp("tm_csv_basic.csv", "label,a,b\nM,0.1,0.2\nB,0.3,0.4\nB,0.5,0.6\n");
  Dataset ds = load_csv(p.string());
  CHECK(ds.n() == 3);
  CHECK(ds.d == 2);
  CHECK(ds.y == std::vector<int>{1, -1, -1});
  CHECK(ds.pos_class == "M");
  CHECK(ds.neg_class == "B");
  CHECK(ds.ids == std::vector<int64_t>{0, 1, 2});
}

TEST_CASE("load_csv on the breast-cancer file") {
  Dataset ds = load_csv(std::string(TREEMARK_DATA_DIR) + "/breast_cancer.csv");
  CHECK(ds.n() == 569);
  CHECK(ds.d == 30);
  int malignant = 0;
  for (int y : ds.y) {
    if (y == 1) ++malignant;  // M > B lexicographically
  }
  CHECK(malignant == 212);
}

TEST_CASE("load_csv error paths") {
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), DatasetError);

  auto text_cell = write_temp("tm_csv_text.csv", "label,a\nM,0.1\nB,oops\n");
  CHECK_THROWS_AS(load_csv(text_cell.string()), DatasetError);

  auto one_row = write_temp("tm_csv_short.csv", "label,a\nM,0.1\n");
  CHECK_THROWS_AS(load_csv(one_row.string()), DatasetError);

  auto single_class = write_temp("tm_csv_single.csv", "label,a\nM,0.1\nM,0.2\n");
  CHECK_THROWS_AS(load_csv(single_class.string()), DatasetError);

  auto no_label = write_temp("tm_csv_nolabel.csv", "klass,a\nM,0.1\nB,0.2\n");
  CHECK_THROWS_AS(load_csv(no_label.string()), DatasetError);

  auto nan_cell = write_temp("tm_csv_nan.csv", "label,a\nM,nan\nB,0.2\n");
  CHECK_THROWS_AS(load_csv(nan_cell.string()), DatasetError);
}

TEST_CASE("load_libsvm densifies sparse rows") {
  auto p = write_temp("tm_libsvm.txt", "+1 1:0.5 3:0.2\n-1 2:1.0 3:0.5\n");
  Dataset ds = load_libsvm(p.string());
  CHECK(ds.d == 3);
  CHECK(ds.n() == 2);
  CHECK(ds.x == std::vector<double>{0.5, 0.0, 0.2, 0.0, 1.0, 0.5});
  CHECK(ds.y == std::vector<int>{1, -1});
}

TEST_CASE("load_libsvm maps label 0 to -1") {
  auto p = write_temp("tm_libsvm0.txt", "0 1:0.5\n1 1:0.7\n");
  Dataset ds = load_libsvm(p.string());
  CHECK(ds.y == std::vector<int>{-1, 1});
}

TEST_CASE("load_libsvm error paths") {
  auto bad_label = write_temp("tm_libsvm_lbl.txt", "2 1:0.1\n");
  CHECK_THROWS_AS(load_libsvm(bad_label.string()), DatasetError);

  auto non_monotone = write_temp("tm_libsvm_mono.txt", "+1 3:0.1 2:0.2\n");
  CHECK_THROWS_AS(load_libsvm(non_monotone.string()), DatasetError);

  auto malformed = write_temp("tm_libsvm_mal.txt", "+1 1-0.5\n");
  CHECK_THROWS_AS(load_libsvm(malformed.string()), DatasetError);
}

TEST_CASE("libsvm round trip keeps all nonzero values exactly") {
  Dataset ds = toy_dataset(20, 5, 7);
  for (size_t i = 0; i < ds.x.size(); i += 3) ds.x[i] = 0.0;  // some sparsity
  auto p = fs::temp_directory_path() / "tm_libsvm_rt.txt";
  save_libsvm(ds, p.string());
  Dataset back = load_libsvm(p.string());
  REQUIRE(back.d == ds.d);
  CHECK(back.x == ds.x);
  CHECK(back.y == ds.y);
}

TEST_CASE("csv round trip is exact") {
  Dataset ds = toy_dataset(25, 4, 11);
  auto p = fs::temp_directory_path() / "tm_csv_rt.csv";
  save_csv(ds, p.string());
  Dataset back = load_csv(p.string());
  CHECK(back.x == ds.x);
  CHECK(back.y == ds.y);
  CHECK(back.d == ds.d);
}

TEST_CASE("normalize_minmax maps each feature onto [0,1]") {
  Dataset ds;
  ds.d = 2;
  ds.x = {2.0, 5.0, 4.0, 5.0, 6.0, 5.0};
  ds.y = {1, -1, 1};
  ds.ids = {0, 1, 2};
  Dataset norm = normalize_minmax(ds);
  CHECK(norm.x[0] == doctest::Approx(0.0));
  CHECK(norm.x[2] == doctest::Approx(0.5));
  CHECK(norm.x[4] == doctest::Approx(1.0));
  // constant column -> 0
  CHECK(norm.x[1] == 0.0);
  CHECK(norm.x[3] == 0.0);
  CHECK(norm.x[5] == 0.0);
}

TEST_CASE("scaler clamps test values outside the training range") {
  Dataset train;
  train.d = 1;
  train.x = {1.0, 3.0};
  train.y = {1, -1};
  train.ids = {0, 1};
  MinMaxScaler scaler;
  scaler.fit(train);

  Dataset test = train;
  test.x = {5.0, 0.0};
  Dataset out = scaler.transform(test);
  CHECK(out.x[0] == 1.0);
  CHECK(out.x[1] == 0.0);
}

TEST_CASE("normalization invariant holds on random data") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    Dataset ds = toy_dataset(40, 6, seed);
    for (double& v : ds.x) v = v * 100.0 - 50.0;
    Dataset norm = normalize_minmax(ds);
    for (int j = 0; j < norm.d; ++j) {
      double lo = 1e9, hi = -1e9;
      for (size_t i = 0; i < norm.n(); ++i) {
        lo = std::min(lo, norm.x[i * norm.d + j]);
        hi = std::max(hi, norm.x[i * norm.d + j]);
      }
      CHECK(lo >= 0.0);
      CHECK(hi <= 1.0);
    }
  }
}

TEST_CASE("stratified_sample preserves class proportions within one row") {
  Dataset ds;
  ds.d = 1;
  for (int i = 0; i < 100; ++i) {
    ds.x.push_back(i);
    ds.y.push_back(i < 90 ? 1 : -1);
    ds.ids.push_back(i);
  }
  Dataset sample = stratified_sample(ds, 10, 5);
  int pos = 0, neg = 0;
  for (int y : sample.y) (y > 0 ? pos : neg)++;
  CHECK(pos == 9);
  CHECK(neg == 1);
}

TEST_CASE("stratified_sample reduces a 20k 10/90 set to 10k preserving the split") {
  Dataset ds;
  ds.d = 1;
  for (int i = 0; i < 20000; ++i) {
    ds.x.push_back(i);
    ds.y.push_back(i < 2000 ? 1 : -1);
    ds.ids.push_back(i);
  }
  Dataset sample = stratified_sample(ds, 10000, 9);
  CHECK(sample.n() == 10000);
  int pos = 0;
  for (int y : sample.y) {
    if (y > 0) ++pos;
  }
  CHECK(pos == 1000);
}

TEST_CASE("stratified_sample is deterministic and validates sizes") {
  Dataset ds = toy_dataset(50, 2, 3);
  Dataset a = stratified_sample(ds, 20, 77);
  Dataset b = stratified_sample(ds, 20, 77);
  CHECK(a.ids == b.ids);
  CHECK_THROWS_AS(stratified_sample(ds, 0, 1), DatasetError);
  CHECK_THROWS_AS(stratified_sample(ds, 51, 1), DatasetError);
}

TEST_CASE("train_test_split on breast-cancer yields the 455/114 split") {
  Dataset ds = load_csv(std::string(TREEMARK_DATA_DIR) + "/breast_cancer.csv");
  auto [train, test] = train_test_split(ds, 0.2, 42);
  CHECK(train.n() == 455);
  CHECK(test.n() == 114);
  // ids partition the original set
  std::set<int64_t> seen(train.ids.begin(), train.ids.end());
  for (int64_t id : test.ids) CHECK(seen.insert(id).second);
  CHECK(seen.size() == 569);
}

TEST_CASE("sample_trigger: 2% of the breast-cancer training split is 9 rows") {
  Dataset ds = load_csv(std::string(TREEMARK_DATA_DIR) + "/breast_cancer.csv");
  auto [train, test] = train_test_split(ds, 0.2, 42);
  size_t k = static_cast<size_t>(0.02 * train.n());
  CHECK(k == 9);
  TriggerSet ts = sample_trigger(train, k, 1);
  CHECK(ts.k() == 9);
  for (int64_t id : ts.origin_ids) {
    CHECK(std::find(train.ids.begin(), train.ids.end(), id) != train.ids.end());
  }
}

TEST_CASE("sample_trigger enforces the 10% cap and is deterministic") {
  Dataset ds = toy_dataset(100, 2, 13);
  CHECK_THROWS_AS(sample_trigger(ds, 50, 1), DatasetError);
  CHECK_THROWS_AS(sample_trigger(ds, 0, 1), DatasetError);
  TriggerSet a = sample_trigger(ds, 10, 21);
  TriggerSet b = sample_trigger(ds, 10, 21);
  CHECK(a.origin_ids == b.origin_ids);
}

TEST_CASE("flip_labels negates labels and is an involution") {
  Dataset ds = toy_dataset(30, 2, 17);
  TriggerSet ts = sample_trigger(ds, 3, 5);
  ts.rows.y = {1, -1, 1};
  TriggerSet flipped = flip_labels(ts);
  CHECK(flipped.rows.y == std::vector<int>{-1, 1, -1});
  CHECK(flipped.origin_ids == ts.origin_ids);
  TriggerSet twice = flip_labels(flipped);
  CHECK(twice.rows.y == ts.rows.y);

  TriggerSet empty;
  empty.rows.d = 2;
  TriggerSet still_empty = flip_labels(empty);
  CHECK(still_empty.k() == 0);
}

TEST_CASE("trigger file round trip") {
  Dataset ds = toy_dataset(40, 3, 23);
  TriggerSet ts = sample_trigger(ds, 4, 9);
  auto p = fs::temp_directory_path() / "tm_trigger.csv";
  save_trigger(ts, p.string());
  TriggerSet back = load_trigger(p.string());
  CHECK(back.origin_ids == ts.origin_ids);
  CHECK(back.rows.x == ts.rows.x);
  CHECK(back.rows.y == ts.rows.y);
}
