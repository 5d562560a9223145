#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bodycomp/error.hpp"

namespace bodycomp {

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/**
 * Grid layout shared by CT and label volumes.
 *
 * Voxels are stored x-fastest, then y, then z; slice index k is the axial
 * plane z = k. Spacing is in millimetres. When `z_positions_mm` is non-empty
 * it holds one strictly monotonic physical z coordinate per slice and takes
 * precedence over `spacing_mm[2]` for distances and slice thickness.
 */
struct Geometry {
  std::array<std::size_t, 3> dims{1, 1, 1};
  std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
  std::vector<double> z_positions_mm;

  [[nodiscard]] std::size_t nx() const noexcept { return dims[0]; }
  [[nodiscard]] std::size_t ny() const noexcept { return dims[1]; }
  [[nodiscard]] std::size_t nz() const noexcept { return dims[2]; }
  [[nodiscard]] std::size_t slice_size() const noexcept { return dims[0] * dims[1]; }
  [[nodiscard]] std::size_t voxel_count() const noexcept { return dims[0] * dims[1] * dims[2]; }
  [[nodiscard]] bool has_z_positions() const noexcept { return !z_positions_mm.empty(); }

  [[nodiscard]] std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return (z * dims[1] + y) * dims[0] + x;
  }

  /// In-plane pixel area in cm^2.
  [[nodiscard]] double pixel_area_cm2() const noexcept {
    return spacing_mm[0] * spacing_mm[1] / 100.0;
  }

  /// Physical z coordinate of slice k in mm.
  [[nodiscard]] double z_mm(std::size_t k) const {
    if (k >= nz()) {
      throw Error(ErrorCode::InvalidArgument,
                  "slice index " + std::to_string(k) + " out of range [0, " +
                      std::to_string(nz()) + ")");
    }
    return has_z_positions() ? z_positions_mm[k] : static_cast<double>(k) * spacing_mm[2];
  }

  /// Thickness attributed to slice k in mm. Uniform grids use sz; with
  /// explicit positions interior slices span midpoint to midpoint and the end
  /// slices take their single adjacent step.
  [[nodiscard]] double slice_thickness_mm(std::size_t k) const {
    if (k >= nz()) {
      throw Error(ErrorCode::InvalidArgument, "slice index out of range");
    }
    if (!has_z_positions() || nz() == 1) {
      return spacing_mm[2];
    }
    const auto& z = z_positions_mm;
    if (k == 0) return std::abs(z[1] - z[0]);
    if (k + 1 == nz()) return std::abs(z[k] - z[k - 1]);
    return std::abs(z[k + 1] - z[k - 1]) / 2.0;
  }

  void validate() const {
    for (std::size_t d : dims) {
      if (d < 1) throw Error(ErrorCode::InvalidVolume, "dims must all be >= 1");
    }
    for (double s : spacing_mm) {
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw Error(ErrorCode::InvalidVolume, "spacing must be positive and finite");
      }
    }
    if (has_z_positions()) {
      if (z_positions_mm.size() != nz()) {
        throw Error(ErrorCode::InvalidVolume, "z_positions_mm length must equal nz");
      }
      if (nz() > 1) {
        const bool increasing = z_positions_mm[1] > z_positions_mm[0];
        for (std::size_t k = 1; k < nz(); ++k) {
          const double step = z_positions_mm[k] - z_positions_mm[k - 1];
          if (!std::isfinite(step) || (increasing ? !(step > 0) : !(step < 0))) {
            throw Error(ErrorCode::InvalidVolume, "z_positions_mm must be strictly monotonic");
          }
        }
      }
    }
  }

  bool operator==(const Geometry&) const = default;
};

namespace detail {
inline bool close_mm(double a, double b) {
  return std::abs(a - b) <= 1e-6 * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace detail

/// Two volumes can be paired when dims agree exactly and spacing (and z
/// positions, when both carry them) agree to 1e-6 relative.
inline bool same_grid(const Geometry& a, const Geometry& b) {
  if (a.dims != b.dims) return false;
  for (int i = 0; i < 3; ++i) {
    if (!detail::close_mm(a.spacing_mm[i], b.spacing_mm[i])) return false;
  }
  if (a.has_z_positions() && b.has_z_positions()) {
    for (std::size_t k = 0; k < a.nz(); ++k) {
      if (!detail::close_mm(a.z_positions_mm[k], b.z_positions_mm[k])) return false;
    }
  }
  return true;
}

inline void require_same_grid(const Geometry& a, const Geometry& b, std::string_view what) {
  if (!same_grid(a, b)) {
    throw Error(ErrorCode::GeometryMismatch, std::string(what) + ": volume geometries differ");
  }
}

// ---------------------------------------------------------------------------
// Volumes
// ---------------------------------------------------------------------------

enum class UnitState { Raw, HU };

/// CT intensities. Raw volumes hold integral values in the signed 16-bit
/// range; after `to_hu` they hold rescaled reals.
class VoxelVolume {
 public:
  VoxelVolume(Geometry geometry, std::vector<float> values, UnitState unit,
              double rescale_slope = 1.0, double rescale_intercept = 0.0)
      : geometry_(std::move(geometry)),
        values_(std::move(values)),
        unit_(unit),
        slope_(rescale_slope),
        intercept_(rescale_intercept) {
    geometry_.validate();
    if (values_.size() != geometry_.voxel_count()) {
      throw Error(ErrorCode::InvalidVolume, "value count does not match dims");
    }
    if (!std::isfinite(slope_) || !std::isfinite(intercept_)) {
      throw Error(ErrorCode::InvalidVolume, "rescale parameters must be finite");
    }
    if (unit_ == UnitState::Raw) {
      constexpr float lo = std::numeric_limits<std::int16_t>::min();
      constexpr float hi = std::numeric_limits<std::int16_t>::max();
      for (float v : values_) {
        if (!(v >= lo && v <= hi) || v != std::nearbyint(v)) {
          throw Error(ErrorCode::InvalidVolume, "raw CT values must be integral int16");
        }
      }
    }
  }

  [[nodiscard]] const Geometry& geometry() const noexcept { return geometry_; }
  [[nodiscard]] std::span<const float> values() const noexcept { return values_; }
  [[nodiscard]] UnitState unit_state() const noexcept { return unit_; }
  [[nodiscard]] double rescale_slope() const noexcept { return slope_; }
  [[nodiscard]] double rescale_intercept() const noexcept { return intercept_; }

  [[nodiscard]] float at(std::size_t x, std::size_t y, std::size_t z) const {
    return values_[geometry_.index(x, y, z)];
  }
  [[nodiscard]] std::span<const float> slice(std::size_t k) const {
    const std::size_t n = geometry_.slice_size();
    return std::span<const float>(values_).subspan(k * n, n);
  }

  [[nodiscard]] const std::optional<std::string>& subject_id() const noexcept { return subject_id_; }
  void set_subject_id(std::optional<std::string> id) { subject_id_ = std::move(id); }

  /// Releases the value buffer; used by the rvalue `to_hu` overload.
  [[nodiscard]] std::vector<float> take_values() && { return std::move(values_); }

 private:
  Geometry geometry_;
  std::vector<float> values_;
  UnitState unit_;
  double slope_;
  double intercept_;
  std::optional<std::string> subject_id_;
};

using LabelMap = std::map<std::uint8_t, std::string>;

enum class LabelKind { Tissue, Vertebra };

class LabelVolume {
 public:
  LabelVolume(Geometry geometry, std::vector<std::uint8_t> codes, LabelMap label_map,
              LabelKind kind = LabelKind::Tissue)
      : geometry_(std::move(geometry)),
        codes_(std::move(codes)),
        label_map_(std::move(label_map)),
        kind_(kind) {
    geometry_.validate();
    if (codes_.size() != geometry_.voxel_count()) {
      throw Error(ErrorCode::InvalidVolume, "label count does not match dims");
    }
    std::array<bool, 256> seen{};
    for (std::uint8_t c : codes_) seen[c] = true;
    for (int c = 1; c < 256; ++c) {
      if (seen[c] && !label_map_.contains(static_cast<std::uint8_t>(c))) {
        throw Error(ErrorCode::InvalidVolume,
                    "code " + std::to_string(c) + " present but missing from label_map");
      }
    }
  }

  [[nodiscard]] const Geometry& geometry() const noexcept { return geometry_; }
  [[nodiscard]] std::span<const std::uint8_t> codes() const noexcept { return codes_; }
  [[nodiscard]] const LabelMap& label_map() const noexcept { return label_map_; }
  [[nodiscard]] LabelKind kind() const noexcept { return kind_; }

  [[nodiscard]] std::uint8_t at(std::size_t x, std::size_t y, std::size_t z) const {
    return codes_[geometry_.index(x, y, z)];
  }
  [[nodiscard]] std::span<const std::uint8_t> slice(std::size_t k) const {
    const std::size_t n = geometry_.slice_size();
    return std::span<const std::uint8_t>(codes_).subspan(k * n, n);
  }

  [[nodiscard]] std::optional<std::uint8_t> find_code(std::string_view name) const {
    for (const auto& [code, label] : label_map_) {
      if (label == name) return code;
    }
    return std::nullopt;
  }
  [[nodiscard]] std::uint8_t code_of(std::string_view name) const {
    if (auto c = find_code(name)) return *c;
    throw Error(ErrorCode::UnknownLabel, "label '" + std::string(name) + "' not in label_map");
  }

  [[nodiscard]] const std::optional<std::string>& subject_id() const noexcept { return subject_id_; }
  void set_subject_id(std::optional<std::string> id) { subject_id_ = std::move(id); }

 private:
  Geometry geometry_;
  std::vector<std::uint8_t> codes_;
  LabelMap label_map_;
  LabelKind kind_;
  std::optional<std::string> subject_id_;
};

// ---------------------------------------------------------------------------
// Label vocabulary
// ---------------------------------------------------------------------------

namespace tissue {
inline constexpr std::string_view background = "background";
inline constexpr std::string_view muscle = "skeletal_muscle";
inline constexpr std::string_view sat = "sat";
inline constexpr std::string_view vat = "vat";
inline constexpr std::string_view muscular_fat = "muscular_fat";

inline constexpr std::uint8_t muscle_code = 1;
inline constexpr std::uint8_t sat_code = 2;
inline constexpr std::uint8_t vat_code = 3;
inline constexpr std::uint8_t muscular_fat_code = 4;

inline LabelMap default_label_map() {
  return {{0, std::string(background)},
          {muscle_code, std::string(muscle)},
          {sat_code, std::string(sat)},
          {vat_code, std::string(vat)},
          {muscular_fat_code, std::string(muscular_fat)}};
}
}  // namespace tissue

/// "L3" -> "vertebrae_L3".
inline std::string vertebra_label(std::string_view level) {
  return "vertebrae_" + std::string(level);
}

// ---------------------------------------------------------------------------
// Merge policy
// ---------------------------------------------------------------------------

enum class MergePolicy { MuscularFatAsMuscle, MuscularFatAsSAT, MuscularFatAsVAT, Separate };

inline std::string_view to_string(MergePolicy p) {
  switch (p) {
    case MergePolicy::MuscularFatAsMuscle: return "muscle";
    case MergePolicy::MuscularFatAsSAT: return "sat";
    case MergePolicy::MuscularFatAsVAT: return "vat";
    case MergePolicy::Separate: return "separate";
  }
  return "muscle";
}

inline MergePolicy parse_merge_policy(std::string_view s) {
  if (s == "muscle") return MergePolicy::MuscularFatAsMuscle;
  if (s == "sat") return MergePolicy::MuscularFatAsSAT;
  if (s == "vat") return MergePolicy::MuscularFatAsVAT;
  if (s == "separate") return MergePolicy::Separate;
  throw Error(ErrorCode::InvalidArgument,
              "unknown merge policy '" + std::string(s) + "' (muscle|sat|vat|separate)");
}

inline constexpr std::array<MergePolicy, 4> all_merge_policies{
    MergePolicy::MuscularFatAsMuscle, MergePolicy::MuscularFatAsSAT,
    MergePolicy::MuscularFatAsVAT, MergePolicy::Separate};

enum class TissueClass : std::uint8_t { None, Muscle, SAT, VAT, MuscularFat };

/// Per-code tissue class after applying a merge policy. Shared by every
/// measurement so that merging never needs to materialise a relabelled copy.
class TissueClassifier {
 public:
  TissueClassifier(const LabelMap& label_map, MergePolicy policy) {
    auto lookup = [&](std::string_view name) -> std::uint8_t {
      for (const auto& [code, label] : label_map) {
        if (label == name) return code;
      }
      throw Error(ErrorCode::MissingVocabulary,
                  "tissue label '" + std::string(name) + "' missing from label_map");
    };
    codes_ = {lookup(tissue::muscle), lookup(tissue::sat), lookup(tissue::vat),
              lookup(tissue::muscular_fat)};
    table_.fill(TissueClass::None);
    table_[codes_[0]] = TissueClass::Muscle;
    table_[codes_[1]] = TissueClass::SAT;
    table_[codes_[2]] = TissueClass::VAT;
    switch (policy) {
      case MergePolicy::MuscularFatAsMuscle: table_[codes_[3]] = TissueClass::Muscle; break;
      case MergePolicy::MuscularFatAsSAT: table_[codes_[3]] = TissueClass::SAT; break;
      case MergePolicy::MuscularFatAsVAT: table_[codes_[3]] = TissueClass::VAT; break;
      case MergePolicy::Separate: table_[codes_[3]] = TissueClass::MuscularFat; break;
    }
  }

  [[nodiscard]] TissueClass operator()(std::uint8_t code) const noexcept { return table_[code]; }

  [[nodiscard]] std::uint8_t code_for(TissueClass c) const noexcept {
    switch (c) {
      case TissueClass::Muscle: return codes_[0];
      case TissueClass::SAT: return codes_[1];
      case TissueClass::VAT: return codes_[2];
      case TissueClass::MuscularFat: return codes_[3];
      case TissueClass::None: break;
    }
    return 0;
  }

 private:
  std::array<TissueClass, 256> table_{};
  std::array<std::uint8_t, 4> codes_{};
};

/// Relabels muscular-fat voxels per `policy`; every other voxel is copied
/// unchanged. The label map is kept as-is.
inline LabelVolume apply_merge_policy(const LabelVolume& mask, MergePolicy policy) {
  const TissueClassifier classify(mask.label_map(), policy);
  const std::uint8_t mf = classify.code_for(TissueClass::MuscularFat);
  const std::uint8_t target = classify.code_for(classify(mf));

  std::vector<std::uint8_t> out(mask.codes().begin(), mask.codes().end());
  if (target != mf) {
    std::replace(out.begin(), out.end(), mf, target);
  }
  LabelVolume merged(mask.geometry(), std::move(out), mask.label_map(), mask.kind());
  merged.set_subject_id(mask.subject_id());
  return merged;
}

// ---------------------------------------------------------------------------
// HU conversion
// ---------------------------------------------------------------------------

/// v' = slope * v + intercept for every voxel, evaluated in double and
/// stored as float.
inline VoxelVolume to_hu(VoxelVolume&& vol) {
  if (vol.unit_state() != UnitState::Raw) {
    throw Error(ErrorCode::UnitState, "volume is already in HU");
  }
  const double slope = vol.rescale_slope();
  const double intercept = vol.rescale_intercept();
  Geometry geometry = vol.geometry();
  auto id = vol.subject_id();
  std::vector<float> values = std::move(vol).take_values();
  for (float& v : values) {
    v = static_cast<float>(slope * static_cast<double>(v) + intercept);
  }
  VoxelVolume hu(std::move(geometry), std::move(values), UnitState::HU, slope, intercept);
  hu.set_subject_id(std::move(id));
  return hu;
}

inline VoxelVolume to_hu(const VoxelVolume& vol) {
  VoxelVolume copy = vol;
  return to_hu(std::move(copy));
}

// ---------------------------------------------------------------------------
// Subjects and results
// ---------------------------------------------------------------------------

enum class Sex { Female, Male, Unknown };

inline std::string_view to_string(Sex s) {
  switch (s) {
    case Sex::Female: return "Female";
    case Sex::Male: return "Male";
    case Sex::Unknown: return "Unknown";
  }
  return "Unknown";
}

inline Sex parse_sex(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "female" || lower == "f") return Sex::Female;
  if (lower == "male" || lower == "m") return Sex::Male;
  return Sex::Unknown;
}

struct SubjectRecord {
  std::string subject_id;
  double age_years = 0.0;
  Sex sex = Sex::Unknown;
  std::string race;
  std::optional<double> height_m;
};

struct BodyCompResult {
  std::string subject_id;
  MergePolicy policy = MergePolicy::MuscularFatAsMuscle;
  std::size_t region_2d = 0;  // L3 slice
  std::size_t region_3d_lo = 0;
  std::size_t region_3d_hi = 0;
  bool region_3d_single_slice = false;  // T12 and L4 maxima coincide
  double muscle_density_2d = 0.0;       // HU
  double muscle_density_3d = 0.0;       // HU
  double vat_sat_ratio_2d = 0.0;
  double vat_sat_ratio_3d = 0.0;
  double muscle_area_2d = 0.0;    // cm^2
  double muscle_volume_3d = 0.0;  // cm^3
  std::optional<double> smi_2d;   // cm^2/m^2
};

}  // namespace bodycomp
