#pragma once

#include <cstdio>
#include <string>

namespace dflm {

// 17 significant digits round-trip IEEE doubles exactly, so emitted CSV/SVG
// files are byte-stable for identical inputs.
inline std::string g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string gshort(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace dflm
