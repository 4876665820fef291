#pragma once

#include <cstdio>
#include <string>

namespace sphereflow {

/// 17 significant digits: enough to round-trip any double, so repeated runs
/// can be compared byte for byte.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace sphereflow
