#pragma once

#include <string>

#include "treemark/forest.hpp"

namespace treemark {

// Model file: JSON with fields {version, d, m, feature_subsets, trees}; a
// tree is a nested record {feature, threshold, left, right} or {leaf}.
// Thresholds carry 17 significant digits so reloads are bit-exact. The file
// holds nothing but the forest, so watermarked and plain models are
// indistinguishable on disk.
void save_model(const Ensemble& ensemble, const std::string& path);
Ensemble load_model(const std::string& path);

std::string model_to_string(const Ensemble& ensemble);
Ensemble model_from_string(const std::string& text);

}  // namespace treemark
