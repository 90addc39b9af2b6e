#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace treemark {

// Shortest decimal that parses back to the same double. Used for CSV cells
// so file round trips are exact.
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// 17 significant digits; model thresholds use this so reloads are bit-exact.
inline std::string format_double_17(double v) {
  char buf[48];
  int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, buf + len);
}

}  // namespace treemark
