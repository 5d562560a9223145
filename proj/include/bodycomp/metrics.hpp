#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "bodycomp/core.hpp"
#include "bodycomp/error.hpp"
#include "bodycomp/region.hpp"

namespace bodycomp {

namespace detail {

inline void require_hu(const VoxelVolume& hu) {
  if (hu.unit_state() != UnitState::HU) {
    throw Error(ErrorCode::UnitState, "expected an HU volume; convert with to_hu first");
  }
}

/// Thickness-weighted voxel count (mm of slab per in-plane pixel) of voxels
/// satisfying `pred` within the region. For a single slice the weight is 1.
template <typename Pred>
double weighted_count(const LabelVolume& mask, const MeasurementRegion& region, Pred pred) {
  const Geometry& g = mask.geometry();
  const auto [lo, hi] = region.bounds(g.nz());
  double total = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    std::size_t n = 0;
    for (std::uint8_t c : mask.slice(k)) n += pred(c) ? 1 : 0;
    const double weight = region.kind == MeasurementRegion::Kind::SingleSlice ? 1.0 : g.slice_thickness_mm(k);
    total += static_cast<double>(n) * weight;
  }
  return total;
}

}  // namespace detail

/// Voxel-mean HU of skeletal muscle (after merging) inside the region.
inline double muscle_density(const VoxelVolume& hu, const LabelVolume& mask,
                             const MeasurementRegion& region, MergePolicy policy) {
  detail::require_hu(hu);
  require_same_grid(hu.geometry(), mask.geometry(), "muscle_density");
  const TissueClassifier classify(mask.label_map(), policy);
  const auto [lo, hi] = region.bounds(mask.geometry().nz());

  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = lo; k <= hi; ++k) {
    const auto codes = mask.slice(k);
    const auto values = hu.slice(k);
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (classify(codes[i]) == TissueClass::Muscle) {
        sum += values[i];
        ++n;
      }
    }
  }
  if (n == 0) {
    throw Error(ErrorCode::EmptyRegion, "no skeletal muscle voxels in region");
  }
  return sum / static_cast<double>(n);
}

/// Area (cm^2) of `label_name` on slice `slice_z`.
inline double tissue_area_2d(const LabelVolume& mask, std::string_view label_name, std::size_t slice_z) {
  const std::uint8_t code = mask.code_of(label_name);
  if (slice_z >= mask.geometry().nz()) {
    throw Error(ErrorCode::InvalidArgument, "slice index out of range");
  }
  std::size_t n = 0;
  for (std::uint8_t c : mask.slice(slice_z)) n += (c == code);
  return static_cast<double>(n) * mask.geometry().pixel_area_cm2();
}

/// Volume (cm^3) of `label_name` across the region, each slice weighted by
/// its own thickness.
inline double tissue_volume_3d(const LabelVolume& mask, std::string_view label_name,
                               const MeasurementRegion& region) {
  const std::uint8_t code = mask.code_of(label_name);
  const MeasurementRegion slab =
      region.kind == MeasurementRegion::Kind::SingleSlice
          ? MeasurementRegion::slice_range(region.z_lo, region.z_hi)
          : region;
  const double weighted = detail::weighted_count(mask, slab, [code](std::uint8_t c) { return c == code; });
  return weighted * mask.geometry().pixel_area_cm2() / 10.0;
}

/// VAT measure over SAT measure: areas on a single slice, volumes otherwise.
/// Merged muscular fat counts toward whichever side the policy assigns it.
inline double vat_sat_ratio(const LabelVolume& mask, const MeasurementRegion& region, MergePolicy policy) {
  const TissueClassifier classify(mask.label_map(), policy);
  const double vat = detail::weighted_count(
      mask, region, [&](std::uint8_t c) { return classify(c) == TissueClass::VAT; });
  const double sat = detail::weighted_count(
      mask, region, [&](std::uint8_t c) { return classify(c) == TissueClass::SAT; });
  if (!(sat > 0.0)) {
    throw Error(ErrorCode::UndefinedRatio, "SAT measure is zero in region");
  }
  return vat / sat;
}

/// Skeletal muscle index, cm^2/m^2.
inline double smi(double area_cm2, double height_m) {
  if (!(height_m > 0.0) || !std::isfinite(height_m)) {
    throw Error(ErrorCode::InvalidArgument, "height must be positive");
  }
  return area_cm2 / (height_m * height_m);
}

/// Full 2D (largest-L3 slice) and 3D (T12 to L4) measurement for one subject.
inline BodyCompResult measure_subject(const VoxelVolume& hu, const LabelVolume& tissue_mask,
                                      const LabelVolume& vertebra_mask, const SubjectRecord& subject,
                                      MergePolicy policy) {
  detail::require_hu(hu);
  require_same_grid(hu.geometry(), tissue_mask.geometry(), "tissue mask");
  require_same_grid(hu.geometry(), vertebra_mask.geometry(), "vertebra mask");

  BodyCompResult r;
  r.subject_id = subject.subject_id;
  r.policy = policy;

  r.region_2d = largest_label_slice(vertebra_mask, vertebra_label("L3"));
  const RangeSelection range = region_t12_l4(vertebra_mask);
  r.region_3d_lo = range.region.z_lo;
  r.region_3d_hi = range.region.z_hi;
  r.region_3d_single_slice = range.single_slice;

  const auto l3 = MeasurementRegion::single_slice(r.region_2d);
  const MeasurementRegion& slab = range.region;

  r.muscle_density_2d = muscle_density(hu, tissue_mask, l3, policy);
  r.muscle_density_3d = muscle_density(hu, tissue_mask, slab, policy);
  r.vat_sat_ratio_2d = vat_sat_ratio(tissue_mask, l3, policy);
  r.vat_sat_ratio_3d = vat_sat_ratio(tissue_mask, slab, policy);

  const TissueClassifier classify(tissue_mask.label_map(), policy);
  auto is_muscle = [&](std::uint8_t c) { return classify(c) == TissueClass::Muscle; };
  const double pixel_area = tissue_mask.geometry().pixel_area_cm2();
  r.muscle_area_2d = detail::weighted_count(tissue_mask, l3, is_muscle) * pixel_area;
  r.muscle_volume_3d = detail::weighted_count(tissue_mask, slab, is_muscle) * pixel_area / 10.0;

  if (subject.height_m) {
    r.smi_2d = smi(r.muscle_area_2d, *subject.height_m);
  }
  return r;
}

}  // namespace bodycomp
