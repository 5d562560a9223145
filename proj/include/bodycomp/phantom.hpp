#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "bodycomp/core.hpp"
#include "bodycomp/error.hpp"

namespace bodycomp {

/**
 * Parameters of a synthetic abdomen.
 *
 * In-plane, from the outside in: air, a thin unlabelled skin rim, a SAT ring,
 * a skeletal-muscle annulus crossed by six radial muscular-fat streaks, and
 * an organ core holding an elliptical VAT blob. Ring radii and blob size vary
 * with z. Each vertebra is a square marker whose half-width peaks at its
 * nominated slice and shrinks by one pixel per slice away from it.
 */
struct PhantomSpec {
  std::size_t nx = 96;
  std::size_t ny = 96;
  std::size_t nz = 40;
  std::array<double, 3> spacing_mm{0.8, 0.8, 2.5};
  std::vector<double> z_positions_mm;

  std::size_t t12_slice = 31;
  std::size_t l3_slice = 19;
  std::size_t l4_slice = 9;
  std::size_t vertebra_half_extent = 3;  // slices labelled either side of the peak
  bool include_t12 = true;
  bool include_l3 = true;
  bool include_l4 = true;
  bool include_sat = true;

  double rescale_slope = 1.0;
  double rescale_intercept = -1024.0;
  std::string subject_id = "phantom";
};

struct Phantom {
  VoxelVolume ct;  // raw units
  LabelVolume tissue;
  LabelVolume vertebrae;
};

namespace phantom_hu {
inline constexpr int air = -1000;
inline constexpr int skin = 10;
inline constexpr int organ = 45;
}  // namespace phantom_hu

inline Phantom make_phantom(const PhantomSpec& spec) {
  Geometry g;
  g.dims = {spec.nx, spec.ny, spec.nz};
  g.spacing_mm = spec.spacing_mm;
  g.z_positions_mm = spec.z_positions_mm;
  g.validate();
  if (spec.rescale_slope != 1.0 && spec.rescale_slope != -1.0) {
    throw Error(ErrorCode::InvalidArgument, "phantom rescale slope must be +/-1 to keep raw values integral");
  }

  const std::size_t nx = spec.nx, ny = spec.ny, nz = spec.nz, plane = g.slice_size();

  // Polar coordinates of every in-plane pixel, shared by all slices.
  std::vector<float> rho(plane), streak(plane);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      const double u = (static_cast<double>(x) + 0.5 - static_cast<double>(nx) / 2.0) / (static_cast<double>(nx) / 2.0);
      const double v = (static_cast<double>(y) + 0.5 - static_cast<double>(ny) / 2.0) / (static_cast<double>(ny) / 2.0);
      rho[y * nx + x] = static_cast<float>(std::sqrt(u * u + v * v));
      streak[y * nx + x] = static_cast<float>(std::abs(std::sin(6.0 * std::atan2(v, u))));
    }
  }

  std::vector<float> raw(g.voxel_count());
  std::vector<std::uint8_t> tissue(g.voxel_count(), 0);
  auto to_raw = [&](int hu) {
    return static_cast<float>(std::lround((static_cast<double>(hu) - spec.rescale_intercept) / spec.rescale_slope));
  };

  for (std::size_t z = 0; z < nz; ++z) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(z) / static_cast<double>(nz);
    const float skin_outer = 0.95f;
    const float sat_outer = 0.92f;
    const auto sat_inner = static_cast<float>(0.78 - 0.04 * std::sin(phase));
    const auto muscle_inner = static_cast<float>(0.58 + 0.03 * std::cos(phase));
    const double blob = 0.8 + 0.2 * std::sin(phase + 1.0);
    const double ax = 0.30 * blob, ay = 0.24 * blob;

    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x = 0; x < nx; ++x) {
        const std::size_t p = y * nx + x;
        const std::size_t i = z * plane + p;
        const float r = rho[p];
        const int jitter = static_cast<int>((x * 7 + y * 3 + z * 5) % 31) - 15;
        int hu = phantom_hu::organ;
        std::uint8_t label = 0;
        if (r > skin_outer) {
          hu = phantom_hu::air;
        } else if (r > sat_outer) {
          hu = phantom_hu::skin;
        } else if (r > sat_inner) {
          if (spec.include_sat) {
            label = tissue::sat_code;
            hu = -100 + jitter / 2;
          } else {
            hu = phantom_hu::skin;
          }
        } else if (r > muscle_inner) {
          if (streak[p] < 0.08f) {
            label = tissue::muscular_fat_code;
            hu = -120 + jitter;
          } else {
            label = tissue::muscle_code;
            hu = 35 + jitter;
          }
        } else {
          const double u = (static_cast<double>(x) + 0.5) / (static_cast<double>(nx) / 2.0) - 1.0 - 0.1;
          const double v = (static_cast<double>(y) + 0.5) / (static_cast<double>(ny) / 2.0) - 1.0 + 0.15;
          if ((u / ax) * (u / ax) + (v / ay) * (v / ay) < 1.0) {
            label = tissue::vat_code;
            hu = -90 + jitter / 3;
          }
        }
        tissue[i] = label;
        raw[i] = to_raw(hu);
      }
    }
  }

  // Vertebra markers centred behind the organ core.
  struct Level {
    const char* name;
    std::size_t slice;
    bool present;
    std::uint8_t code;
  };
  const std::array<Level, 3> levels{{{"T12", spec.t12_slice, spec.include_t12, 1},
                                     {"L3", spec.l3_slice, spec.include_l3, 2},
                                     {"L4", spec.l4_slice, spec.include_l4, 3}}};
  LabelMap vertebra_map{{0, std::string(tissue::background)}};
  std::vector<std::uint8_t> vertebrae(g.voxel_count(), 0);
  const auto peak_half_width = static_cast<std::ptrdiff_t>(std::max<std::size_t>(spec.vertebra_half_extent + 1, nx / 24));
  const auto cx = static_cast<std::ptrdiff_t>(nx / 2);
  const auto cy = static_cast<std::ptrdiff_t>(ny / 2 + ny / 5);
  for (const Level& level : levels) {
    if (!level.present) continue;
    if (level.slice >= nz) throw Error(ErrorCode::InvalidArgument, std::string(level.name) + " slice outside volume");
    vertebra_map[level.code] = vertebra_label(level.name);
    const auto extent = static_cast<std::ptrdiff_t>(spec.vertebra_half_extent);
    for (std::ptrdiff_t dz = -extent; dz <= extent; ++dz) {
      const std::ptrdiff_t z = static_cast<std::ptrdiff_t>(level.slice) + dz;
      if (z < 0 || z >= static_cast<std::ptrdiff_t>(nz)) continue;
      const std::ptrdiff_t w = peak_half_width - std::abs(dz);
      for (std::ptrdiff_t y = cy - w; y <= cy + w; ++y) {
        for (std::ptrdiff_t x = cx - w; x <= cx + w; ++x) {
          if (x < 0 || y < 0 || x >= static_cast<std::ptrdiff_t>(nx) || y >= static_cast<std::ptrdiff_t>(ny)) continue;
          vertebrae[g.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z))] =
              level.code;
        }
      }
    }
  }

  VoxelVolume ct(g, std::move(raw), UnitState::Raw, spec.rescale_slope, spec.rescale_intercept);
  LabelVolume tissue_volume(g, std::move(tissue), tissue::default_label_map(), LabelKind::Tissue);
  LabelVolume vertebra_volume(g, std::move(vertebrae), std::move(vertebra_map), LabelKind::Vertebra);
  ct.set_subject_id(spec.subject_id);
  tissue_volume.set_subject_id(spec.subject_id);
  vertebra_volume.set_subject_id(spec.subject_id);
  return {std::move(ct), std::move(tissue_volume), std::move(vertebra_volume)};
}

}  // namespace bodycomp
