#include "treemark/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "treemark/errors.hpp"
#include "treemark/num_format.hpp"

namespace treemark {

namespace {

constexpr int kModelVersion = 1;

void emit_node(const Tree& t, int idx, std::string& out) {
  const TreeNode& node = t.nodes[idx];
  if (node.is_leaf()) {
    out += "{\"leaf\":";
    out += node.label > 0 ? "1" : "-1";
    out += "}";
    return;
  }
  out += "{\"feature\":";
  out += std::to_string(node.feature);
  out += ",\"threshold\":";
  out += format_double_17(node.threshold);
  out += ",\"left\":";
  emit_node(t, node.left, out);
  out += ",\"right\":";
  emit_node(t, node.right, out);
  out += "}";
}

int parse_node(const nlohmann::json& j, Tree& t, int d) {
  if (!j.is_object()) throw ModelFormatError("model: tree node must be an object");
  if (j.contains("leaf")) {
    int label = j.at("leaf").get<int>();
    if (label != 1 && label != -1) throw ModelFormatError("model: leaf label outside {-1,+1}");
    t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, label});
    return static_cast<int>(t.nodes.size()) - 1;
  }
  int feature = j.at("feature").get<int>();
  if (feature < 0 || feature >= d) throw ModelFormatError("model: feature index out of range");
  double threshold = j.at("threshold").get<double>();
  int self = static_cast<int>(t.nodes.size());
  t.nodes.push_back(TreeNode{feature, threshold, -1, -1, 0});
  int left = parse_node(j.at("left"), t, d);
  int right = parse_node(j.at("right"), t, d);
  t.nodes[self].left = left;
  t.nodes[self].right = right;
  return self;
}

}  // namespace

std::string model_to_string(const Ensemble& ensemble) {
  if (ensemble.m() == 0) throw ModelFormatError("model: empty ensemble");
  if (ensemble.feature_subsets.size() != ensemble.m()) {
    throw ModelFormatError("model: feature subset count mismatch");
  }
  std::string out;
  out += "{\"version\":";
  out += std::to_string(kModelVersion);
  out += ",\"d\":" + std::to_string(ensemble.d);
  out += ",\"m\":" + std::to_string(ensemble.m());
  out += ",\"feature_subsets\":[";
  for (size_t i = 0; i < ensemble.feature_subsets.size(); ++i) {
    if (i) out += ",";
    out += "[";
    const auto& subset = ensemble.feature_subsets[i];
    for (size_t j = 0; j < subset.size(); ++j) {
      if (j) out += ",";
      out += std::to_string(subset[j]);
    }
    out += "]";
  }
  out += "],\"trees\":[";
  for (size_t i = 0; i < ensemble.m(); ++i) {
    if (i) out += ",\n";
    emit_node(ensemble.trees[i], 0, out);
  }
  out += "]}\n";
  return out;
}

Ensemble model_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kModelVersion) {
      throw ModelFormatError("model: unsupported version");
    }
    Ensemble ensemble;
    ensemble.d = j.at("d").get<int>();
    if (ensemble.d < 1) throw ModelFormatError("model: d must be >= 1");
    size_t m = j.at("m").get<size_t>();
    const auto& subsets = j.at("feature_subsets");
    const auto& trees = j.at("trees");
    if (trees.size() != m || subsets.size() != m || m == 0) {
      throw ModelFormatError("model: m does not match trees/feature_subsets");
    }
    for (const auto& js : subsets) {
      std::vector<int> subset;
      for (const auto& v : js) {
        int f = v.get<int>();
        if (f < 0 || f >= ensemble.d) throw ModelFormatError("model: subset feature out of range");
        subset.push_back(f);
      }
      if (subset.empty()) throw ModelFormatError("model: empty feature subset");
      ensemble.feature_subsets.push_back(std::move(subset));
    }
    for (size_t i = 0; i < m; ++i) {
      Tree t;
      parse_node(trees[i], t, ensemble.d);
      // Every internal node must use a feature from the tree's subset.
      for (const TreeNode& node : t.nodes) {
        if (!node.is_leaf()) {
          const auto& subset = ensemble.feature_subsets[i];
          if (std::find(subset.begin(), subset.end(), node.feature) == subset.end()) {
            throw ModelFormatError("model: node feature outside tree subset");
          }
        }
      }
      ensemble.trees.push_back(std::move(t));
    }
    return ensemble;
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("model: missing or mistyped field: ") + e.what());
  }
}

void save_model(const Ensemble& ensemble, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ModelFormatError("save_model: cannot open " + path);
  f << model_to_string(ensemble);
}

Ensemble load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ModelFormatError("load_model: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return model_from_string(ss.str());
}

}  // namespace treemark
