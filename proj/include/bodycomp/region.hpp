#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bodycomp/core.hpp"
#include "bodycomp/error.hpp"

namespace bodycomp {

/// A set of axial slices over which a metric is measured.
struct MeasurementRegion {
  enum class Kind { SingleSlice, SliceRange, AllSlices };

  Kind kind = Kind::AllSlices;
  std::size_t z_lo = 0;
  std::size_t z_hi = 0;

  static MeasurementRegion single_slice(std::size_t z) { return {Kind::SingleSlice, z, z}; }
  static MeasurementRegion slice_range(std::size_t lo, std::size_t hi) {
    if (lo > hi) std::swap(lo, hi);
    return {Kind::SliceRange, lo, hi};
  }
  static MeasurementRegion all_slices() { return {Kind::AllSlices, 0, 0}; }

  /// Inclusive slice bounds for a volume with `nz` slices.
  [[nodiscard]] std::pair<std::size_t, std::size_t> bounds(std::size_t nz) const {
    if (kind == Kind::AllSlices) return {0, nz - 1};
    if (z_lo > z_hi || z_hi >= nz) {
      throw Error(ErrorCode::InvalidArgument,
                  "region [" + std::to_string(z_lo) + ", " + std::to_string(z_hi) +
                      "] invalid for " + std::to_string(nz) + " slices");
    }
    return {z_lo, z_hi};
  }

  bool operator==(const MeasurementRegion&) const = default;
};

/// Voxel count of `code` in every slice.
inline std::vector<std::size_t> code_count_per_slice(const LabelVolume& mask, std::uint8_t code) {
  const std::size_t nz = mask.geometry().nz();
  std::vector<std::size_t> counts(nz, 0);
  for (std::size_t k = 0; k < nz; ++k) {
    std::size_t n = 0;
    for (std::uint8_t c : mask.slice(k)) n += (c == code);
    counts[k] = n;
  }
  return counts;
}

/// Per-slice area (cm^2) covered by `label_name`.
inline std::vector<double> label_area_per_slice(const LabelVolume& mask, std::string_view label_name) {
  const auto counts = code_count_per_slice(mask, mask.code_of(label_name));
  const double pixel_area = mask.geometry().pixel_area_cm2();
  std::vector<double> areas(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    areas[k] = static_cast<double>(counts[k]) * pixel_area;
  }
  return areas;
}

namespace detail {
// Lowest index wins ties.
inline std::optional<std::size_t> argmax_nonzero(const std::vector<std::size_t>& counts) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] > 0 && (!best || counts[k] > counts[*best])) best = k;
  }
  return best;
}
}  // namespace detail

/// Slice on which `label_name` covers the largest area; ties go to the lowest
/// slice index. A label missing from the map or from every slice raises
/// VertebraNotFound.
inline std::size_t largest_label_slice(const LabelVolume& mask, std::string_view label_name) {
  const auto code = mask.find_code(label_name);
  if (!code) {
    throw Error(ErrorCode::VertebraNotFound, "label '" + std::string(label_name) + "' not in label_map");
  }
  const auto best = detail::argmax_nonzero(code_count_per_slice(mask, *code));
  if (!best) {
    throw Error(ErrorCode::VertebraNotFound, "label '" + std::string(label_name) + "' absent from volume");
  }
  return *best;
}

struct RangeSelection {
  MeasurementRegion region;
  /// T12 and L4 maxima landed on the same slice.
  bool single_slice = false;
};

/// Inclusive range between the largest T12 slice and the largest L4 slice.
inline RangeSelection region_t12_l4(const LabelVolume& vertebrae) {
  const std::size_t t12 = largest_label_slice(vertebrae, vertebra_label("T12"));
  const std::size_t l4 = largest_label_slice(vertebrae, vertebra_label("L4"));
  return {MeasurementRegion::slice_range(t12, l4), t12 == l4};
}

/// |z_i - z_j| in cm.
inline double slice_distance_cm(std::size_t i, std::size_t j, const Geometry& geometry) {
  if (geometry.has_z_positions()) {
    return std::abs(geometry.z_mm(i) - geometry.z_mm(j)) / 10.0;
  }
  if (i >= geometry.nz() || j >= geometry.nz()) {
    throw Error(ErrorCode::InvalidArgument, "slice index out of range");
  }
  const double steps = i > j ? static_cast<double>(i - j) : static_cast<double>(j - i);
  return steps * geometry.spacing_mm[2] / 10.0;
}

/// Fixed-interval sampling: keep slice 0, then each next slice whose distance
/// from the last kept slice reaches `interval_cm`.
inline std::vector<std::size_t> sample_slices_by_interval(const Geometry& geometry, double interval_cm) {
  if (!(interval_cm > 0.0) || !std::isfinite(interval_cm)) {
    throw Error(ErrorCode::InvalidArgument, "interval must be positive");
  }
  constexpr double slack_cm = 1e-9;
  std::vector<std::size_t> picked{0};
  std::size_t anchor = 0;
  for (std::size_t k = 1; k < geometry.nz(); ++k) {
    if (slice_distance_cm(anchor, k, geometry) + slack_cm >= interval_cm) {
      picked.push_back(k);
      anchor = k;
    }
  }
  return picked;
}

}  // namespace bodycomp
