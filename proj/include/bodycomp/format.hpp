#pragma once

#include <cstdio>
#include <optional>
#include <string>

namespace bodycomp {

/// Numbers in CSV output are printed with 6 significant digits ("%.6g").
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

/// Absent values print as an empty field.
inline std::string format_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

}  // namespace bodycomp
