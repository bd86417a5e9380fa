#pragma once

#include <cstdio>
#include <string>

namespace convdiff {

/// Numbers in CSV and reports: 15 significant digits.
inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

}  // namespace convdiff
