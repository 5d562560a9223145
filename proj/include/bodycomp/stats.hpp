#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace bodycomp {

/// Count, mean and population SD (divide by n). Empty input gives n = 0 and
/// zeros.
struct SummaryStat {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
};

inline SummaryStat summarize(std::span<const double> xs) {
  SummaryStat s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(s.n));
  return s;
}

}  // namespace bodycomp
