#include "treemark/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "treemark/errors.hpp"
#include "treemark/num_format.hpp"
#include "treemark/rng.hpp"

namespace treemark {

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_on(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

double parse_cell(const std::string& raw, const std::string& where) {
  std::string s = strip(raw);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) {
    throw DatasetError("non-numeric cell '" + raw + "' at " + where);
  }
  if (!std::isfinite(v)) throw DatasetError("non-finite value at " + where);
  return v;
}

std::vector<std::string> read_lines(const std::string& path, const char* what) {
  std::ifstream f(path);
  if (!f) throw DatasetError(std::string(what) + ": cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && strip(lines.back()).empty()) lines.pop_back();
  return lines;
}

}  // namespace

void Dataset::validate() const {
  if (n() == 0) throw DatasetError("dataset is empty");
  if (d < 1) throw DatasetError("dataset has no features");
  if (x.size() != n() * static_cast<size_t>(d)) throw DatasetError("feature matrix shape mismatch");
  if (ids.size() != n()) throw DatasetError("id vector length mismatch");
  for (int label : y) {
    if (label != 1 && label != -1) throw DatasetError("label outside {-1,+1}");
  }
  std::vector<int64_t> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw DatasetError("duplicate row ids");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DatasetError("non-finite feature value");
  }
}

bool same_data(const Dataset& a, const Dataset& b) {
  return a.d == b.d && a.x == b.x && a.y == b.y && a.ids == b.ids;
}

Dataset subset_rows(const Dataset& data, std::span<const size_t> indices) {
  Dataset out;
  out.d = data.d;
  out.feature_names = data.feature_names;
  out.label_name = data.label_name;
  out.pos_class = data.pos_class;
  out.neg_class = data.neg_class;
  out.x.reserve(indices.size() * data.d);
  out.y.reserve(indices.size());
  out.ids.reserve(indices.size());
  for (size_t i : indices) {
    auto r = data.row(i);
    out.x.insert(out.x.end(), r.begin(), r.end());
    out.y.push_back(data.y[i]);
    out.ids.push_back(data.ids[i]);
  }
  return out;
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  auto lines = read_lines(path, "load_csv");
  if (lines.size() < 3) throw DatasetError("load_csv: need a header and at least 2 data rows");

  auto header = split_on(lines[0], ',');
  int label_idx = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    if (strip(header[i]) == label_column) {
      label_idx = static_cast<int>(i);
      break;
    }
  }
  if (label_idx < 0) throw DatasetError("load_csv: label column '" + label_column + "' not found");
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw DatasetError("load_csv: no feature columns");

  Dataset out;
  out.d = d;
  out.label_name = label_column;
  for (size_t i = 0; i < header.size(); ++i) {
    if (static_cast<int>(i) != label_idx) out.feature_names.push_back(strip(header[i]));
  }

  std::vector<std::string> raw_labels;
  for (size_t li = 1; li < lines.size(); ++li) {
    if (strip(lines[li]).empty()) continue;
    auto cells = split_on(lines[li], ',');
    if (cells.size() != header.size()) {
      throw DatasetError("load_csv: row " + std::to_string(li) + " has " +
                         std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(header.size()));
    }
    for (size_t ci = 0; ci < cells.size(); ++ci) {
      if (static_cast<int>(ci) == label_idx) {
        raw_labels.push_back(strip(cells[ci]));
      } else {
        out.x.push_back(parse_cell(cells[ci], "row " + std::to_string(li) + " column " +
                                                  std::to_string(ci + 1)));
      }
    }
  }
  if (raw_labels.size() < 2) throw DatasetError("load_csv: fewer than 2 data rows");

  std::set<std::string> classes(raw_labels.begin(), raw_labels.end());
  if (classes.size() != 2) {
    throw DatasetError("load_csv: expected exactly 2 label classes, found " +
                       std::to_string(classes.size()));
  }
  // Deterministic mapping: lexicographically larger class -> +1.
  out.neg_class = *classes.begin();
  out.pos_class = *std::next(classes.begin());
  out.y.reserve(raw_labels.size());
  for (const auto& s : raw_labels) out.y.push_back(s == out.pos_class ? 1 : -1);
  out.ids.resize(out.n());
  for (size_t i = 0; i < out.n(); ++i) out.ids[i] = static_cast<int64_t>(i);
  out.validate();
  return out;
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DatasetError("save_csv: cannot open " + path);
  f << data.label_name;
  for (int j = 0; j < data.d; ++j) {
    f << ',' << (j < static_cast<int>(data.feature_names.size()) ? data.feature_names[j]
                                                                 : "f" + std::to_string(j + 1));
  }
  f << '\n';
  for (size_t i = 0; i < data.n(); ++i) {
    f << (data.y[i] > 0 ? data.pos_class : data.neg_class);
    auto r = data.row(i);
    for (double v : r) f << ',' << format_double(v);
    f << '\n';
  }
}

Dataset load_libsvm(const std::string& path) {
  auto lines = read_lines(path, "load_libsvm");
  Dataset out;
  int max_index = 0;
  std::vector<std::vector<std::pair<int, double>>> sparse_rows;

  for (size_t li = 0; li < lines.size(); ++li) {
    std::string line = strip(lines[li]);
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string tok;
    ss >> tok;
    const std::string where = "line " + std::to_string(li + 1);

    int label;
    if (tok == "+1" || tok == "1") {
      label = 1;
    } else if (tok == "-1") {
      label = -1;
    } else if (tok == "0") {
      label = -1;
    } else {
      throw DatasetError("load_libsvm: label '" + tok + "' outside {-1,0,+1} at " + where);
    }

    std::vector<std::pair<int, double>> row;
    int prev_index = 0;
    while (ss >> tok) {
      size_t colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 >= tok.size()) {
        throw DatasetError("load_libsvm: malformed pair '" + tok + "' at " + where);
      }
      int index = 0;
      auto ires = std::from_chars(tok.data(), tok.data() + colon, index);
      if (ires.ec != std::errc{} || ires.ptr != tok.data() + colon || index < 1) {
        throw DatasetError("load_libsvm: bad index in '" + tok + "' at " + where);
      }
      if (index <= prev_index) {
        throw DatasetError("load_libsvm: non-monotone indices at " + where);
      }
      prev_index = index;
      double value = parse_cell(tok.substr(colon + 1), where);
      row.emplace_back(index, value);
      max_index = std::max(max_index, index);
    }
    sparse_rows.push_back(std::move(row));
    out.y.push_back(label);
  }

  if (sparse_rows.empty()) throw DatasetError("load_libsvm: no data rows in " + path);
  if (max_index == 0) throw DatasetError("load_libsvm: no feature values in " + path);
  out.d = max_index;
  out.x.assign(sparse_rows.size() * static_cast<size_t>(max_index), 0.0);
  for (size_t i = 0; i < sparse_rows.size(); ++i) {
    for (auto [index, value] : sparse_rows[i]) {
      out.x[i * max_index + (index - 1)] = value;
    }
  }
  out.ids.resize(out.n());
  for (size_t i = 0; i < out.n(); ++i) out.ids[i] = static_cast<int64_t>(i);
  for (int j = 0; j < out.d; ++j) out.feature_names.push_back("f" + std::to_string(j + 1));
  out.validate();
  return out;
}

void save_libsvm(const Dataset& data, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DatasetError("save_libsvm: cannot open " + path);
  for (size_t i = 0; i < data.n(); ++i) {
    f << (data.y[i] > 0 ? "+1" : "-1");
    auto r = data.row(i);
    for (int j = 0; j < data.d; ++j) {
      if (r[j] != 0.0) f << ' ' << (j + 1) << ':' << format_double(r[j]);
    }
    f << '\n';
  }
}

void MinMaxScaler::fit(const Dataset& data) {
  data.validate();
  min_.assign(data.d, 0.0);
  range_.assign(data.d, 0.0);
  for (int j = 0; j < data.d; ++j) {
    double lo = data.x[j], hi = data.x[j];
    for (size_t i = 1; i < data.n(); ++i) {
      double v = data.x[i * data.d + j];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    min_[j] = lo;
    range_[j] = hi - lo;
  }
}

Dataset MinMaxScaler::transform(const Dataset& data) const {
  if (!fitted()) throw DatasetError("MinMaxScaler: transform before fit");
  if (data.d != static_cast<int>(min_.size())) {
    throw DatasetError("MinMaxScaler: dimension mismatch");
  }
  Dataset out = data;
  for (size_t i = 0; i < out.n(); ++i) {
    for (int j = 0; j < out.d; ++j) {
      double& v = out.x[i * out.d + j];
      v = range_[j] == 0.0 ? 0.0 : (v - min_[j]) / range_[j];
      v = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

Dataset normalize_minmax(const Dataset& data) {
  MinMaxScaler scaler;
  scaler.fit(data);
  return scaler.transform(data);
}

namespace {

// Per-class allocation by largest remainder; |allocated - ideal| < 1 per class.
std::map<int, size_t> allocate_per_class(const std::map<int, std::vector<size_t>>& by_class,
                                         size_t total, size_t n) {
  std::map<int, size_t> alloc;
  struct Rem {
    double frac;
    size_t class_n;
    int label;
  };
  std::vector<Rem> rems;
  size_t assigned = 0;
  for (const auto& [label, rows] : by_class) {
    double ideal = static_cast<double>(total) * static_cast<double>(rows.size()) /
                   static_cast<double>(n);
    size_t base = static_cast<size_t>(ideal);
    alloc[label] = base;
    assigned += base;
    rems.push_back({ideal - static_cast<double>(base), rows.size(), label});
  }
  std::sort(rems.begin(), rems.end(), [](const Rem& a, const Rem& b) {
    if (a.frac != b.frac) return a.frac > b.frac;
    if (a.class_n != b.class_n) return a.class_n > b.class_n;
    return a.label > b.label;
  });
  for (size_t i = 0; assigned < total; ++i) {
    auto& slot = alloc[rems[i % rems.size()].label];
    size_t cap = by_class.at(rems[i % rems.size()].label).size();
    if (slot < cap) {
      ++slot;
      ++assigned;
    }
  }
  return alloc;
}

std::map<int, std::vector<size_t>> rows_by_class(const Dataset& data) {
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < data.n(); ++i) by_class[data.y[i]].push_back(i);
  return by_class;
}

}  // namespace

Dataset stratified_sample(const Dataset& data, size_t count, uint64_t seed) {
  data.validate();
  if (count == 0) throw DatasetError("stratified_sample: size 0 requested");
  if (count > data.n()) throw DatasetError("stratified_sample: size exceeds dataset");
  auto by_class = rows_by_class(data);
  auto alloc = allocate_per_class(by_class, count, data.n());

  DetRng rng(seed);
  std::vector<size_t> chosen;
  for (const auto& [label, rows] : by_class) {
    auto picks = rng.sample_indices(rows.size(), alloc[label]);
    for (size_t p : picks) chosen.push_back(rows[p]);
  }
  std::sort(chosen.begin(), chosen.end());
  return subset_rows(data, chosen);
}

Dataset stratified_sample_fraction(const Dataset& data, double fraction, uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw DatasetError("stratified_sample_fraction: fraction outside (0,1]");
  }
  size_t count = static_cast<size_t>(std::llround(fraction * static_cast<double>(data.n())));
  return stratified_sample(data, count, seed);
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             uint64_t seed) {
  data.validate();
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
    throw DatasetError("train_test_split: test fraction outside (0,1)");
  }
  size_t test_total =
      static_cast<size_t>(std::llround(test_fraction * static_cast<double>(data.n())));
  test_total = std::min(std::max<size_t>(test_total, 1), data.n() - 1);
  auto by_class = rows_by_class(data);
  auto alloc = allocate_per_class(by_class, test_total, data.n());

  DetRng rng(seed);
  std::vector<size_t> test_rows;
  std::vector<char> in_test(data.n(), 0);
  for (const auto& [label, rows] : by_class) {
    auto picks = rng.sample_indices(rows.size(), alloc[label]);
    for (size_t p : picks) {
      test_rows.push_back(rows[p]);
      in_test[rows[p]] = 1;
    }
  }
  std::sort(test_rows.begin(), test_rows.end());
  std::vector<size_t> train_rows;
  for (size_t i = 0; i < data.n(); ++i) {
    if (!in_test[i]) train_rows.push_back(i);
  }
  return {subset_rows(data, train_rows), subset_rows(data, test_rows)};
}

TriggerSet sample_trigger(const Dataset& train, size_t k, uint64_t seed) {
  train.validate();
  size_t cap = static_cast<size_t>(kTriggerCapFraction * static_cast<double>(train.n()));
  if (k < 1 || k > cap) {
    throw DatasetError("sample_trigger: k=" + std::to_string(k) + " outside [1, " +
                       std::to_string(cap) + "] (10% of training rows)");
  }
  DetRng rng(seed);
  auto rows = rng.sample_indices(train.n(), k);
  TriggerSet ts;
  ts.rows = subset_rows(train, rows);
  ts.origin_ids = ts.rows.ids;
  return ts;
}

TriggerSet flip_labels(const TriggerSet& ts) {
  TriggerSet out = ts;
  for (int& label : out.rows.y) label = -label;
  return out;
}

void save_trigger(const TriggerSet& ts, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DatasetError("save_trigger: cannot open " + path);
  f << "origin_id,label";
  for (int j = 0; j < ts.rows.d; ++j) {
    f << ','
      << (j < static_cast<int>(ts.rows.feature_names.size()) ? ts.rows.feature_names[j]
                                                             : "f" + std::to_string(j + 1));
  }
  f << '\n';
  for (size_t i = 0; i < ts.rows.n(); ++i) {
    f << ts.origin_ids[i] << ',' << ts.rows.y[i];
    for (double v : ts.rows.row(i)) f << ',' << format_double(v);
    f << '\n';
  }
}

TriggerSet load_trigger(const std::string& path) {
  auto lines = read_lines(path, "load_trigger");
  if (lines.size() < 2) throw DatasetError("load_trigger: no data rows");
  auto header = split_on(lines[0], ',');
  if (header.size() < 3 || strip(header[0]) != "origin_id" || strip(header[1]) != "label") {
    throw DatasetError("load_trigger: expected header origin_id,label,features...");
  }
  TriggerSet ts;
  ts.rows.d = static_cast<int>(header.size()) - 2;
  for (size_t j = 2; j < header.size(); ++j) ts.rows.feature_names.push_back(strip(header[j]));
  for (size_t li = 1; li < lines.size(); ++li) {
    if (strip(lines[li]).empty()) continue;
    auto cells = split_on(lines[li], ',');
    if (cells.size() != header.size()) {
      throw DatasetError("load_trigger: ragged row " + std::to_string(li));
    }
    const std::string where = "row " + std::to_string(li);
    int64_t id = static_cast<int64_t>(parse_cell(cells[0], where));
    std::string lbl = strip(cells[1]);
    int label;
    if (lbl == "1" || lbl == "+1") {
      label = 1;
    } else if (lbl == "-1") {
      label = -1;
    } else {
      throw DatasetError("load_trigger: label outside {-1,+1} at " + where);
    }
    ts.origin_ids.push_back(id);
    ts.rows.ids.push_back(id);
    ts.rows.y.push_back(label);
    for (size_t ci = 2; ci < cells.size(); ++ci) {
      ts.rows.x.push_back(parse_cell(cells[ci], where));
    }
  }
  ts.rows.validate();
  return ts;
}

}  // namespace treemark
