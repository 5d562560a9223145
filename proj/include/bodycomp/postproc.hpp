#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bodycomp/core.hpp"
#include "bodycomp/error.hpp"

namespace bodycomp {

// Skin threshold for SAT growth and the fat attenuation window for
// muscular-fat candidates, in HU.
inline constexpr float kSkinThresholdHU = -800.0f;
inline constexpr float kFatLowerHU = -220.0f;
inline constexpr float kFatUpperHU = -50.0f;
inline constexpr int kSatDilationRadius = 2;          // 5x5 square element
inline constexpr std::size_t kMinMuscularFatPixels = 7;  // components of 6 or fewer are dropped

namespace detail {

/// Binary dilation of one slice with a (2r+1)x(2r+1) square, done as a row
/// pass followed by a column pass.
inline std::vector<std::uint8_t> dilate_square(const std::vector<std::uint8_t>& in, std::size_t nx,
                                               std::size_t ny, int radius) {
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const auto w = static_cast<std::ptrdiff_t>(nx);
  const auto h = static_cast<std::ptrdiff_t>(ny);
  std::vector<std::uint8_t> rows(in.size(), 0), out(in.size(), 0);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    const std::uint8_t* src = in.data() + y * w;
    std::uint8_t* dst = rows.data() + y * w;
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      if (!src[x]) continue;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, x - r);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(w - 1, x + r);
      std::fill(dst + lo, dst + hi + 1, std::uint8_t{1});
    }
  }
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    const std::uint8_t* src = rows.data() + y * w;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, y - r);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(h - 1, y + r);
    for (std::ptrdiff_t yy = lo; yy <= hi; ++yy) {
      std::uint8_t* dst = out.data() + yy * w;
      for (std::ptrdiff_t x = 0; x < w; ++x) dst[x] |= src[x];
    }
  }
  return out;
}

inline void require_hu_grid(const VoxelVolume& hu, const LabelVolume& mask, std::string_view what) {
  if (hu.unit_state() != UnitState::HU) {
    throw Error(ErrorCode::UnitState, std::string(what) + ": CT volume must be in HU");
  }
  require_same_grid(hu.geometry(), mask.geometry(), what);
}

}  // namespace detail

/**
 * Grows SAT outward toward the skin on every axial slice.
 *
 * The SAT label is dilated with a 5x5 square. A pixel inside the dilated
 * footprint becomes SAT only if it is background (code 0) and its HU is
 * above -800; every labelled pixel is left as it was. One pass, no iteration.
 */
inline LabelVolume dilate_sat_to_skin(const LabelVolume& mask, const VoxelVolume& hu) {
  detail::require_hu_grid(hu, mask, "dilate_sat_to_skin");
  const std::uint8_t sat = mask.code_of(tissue::sat);
  const Geometry& g = mask.geometry();
  const std::size_t n = g.slice_size();

  std::vector<std::uint8_t> out(mask.codes().begin(), mask.codes().end());
  std::vector<std::uint8_t> seed(n);
  for (std::size_t k = 0; k < g.nz(); ++k) {
    const auto codes = mask.slice(k);
    const auto values = hu.slice(k);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      seed[i] = codes[i] == sat;
      any |= seed[i] != 0;
    }
    if (!any) continue;
    const auto grown = detail::dilate_square(seed, g.nx(), g.ny(), kSatDilationRadius);
    std::uint8_t* dst = out.data() + k * n;
    for (std::size_t i = 0; i < n; ++i) {
      if (grown[i] && codes[i] == 0 && values[i] > kSkinThresholdHU) dst[i] = sat;
    }
  }
  LabelVolume result(g, std::move(out), mask.label_map(), mask.kind());
  result.set_subject_id(mask.subject_id());
  return result;
}

/// Code and name written for muscular-fat candidates.
inline constexpr std::uint8_t kCandidateCode = 1;

/**
 * Muscular-fat candidates inside a region of interest.
 *
 * Per axial slice: pixels inside the ROI with HU in [-220, -50] are grouped
 * into 8-connected components and components of at least 7 pixels are kept.
 * The ROI is every voxel of `roi_mask` whose code is in `roi_codes`, or every
 * nonzero voxel when `roi_codes` is empty. Output is binary (code 1,
 * "muscular_fat").
 */
inline LabelVolume muscular_fat_candidates(const VoxelVolume& hu, const LabelVolume& roi_mask,
                                           const std::vector<std::uint8_t>& roi_codes = {}) {
  detail::require_hu_grid(hu, roi_mask, "muscular_fat_candidates");
  const Geometry& g = roi_mask.geometry();
  const std::size_t nx = g.nx(), ny = g.ny(), n = g.slice_size();

  std::array<bool, 256> in_roi{};
  if (roi_codes.empty()) {
    in_roi.fill(true);
    in_roi[0] = false;
  } else {
    for (std::uint8_t c : roi_codes) in_roi[c] = true;
  }

  std::vector<std::uint8_t> out(g.voxel_count(), 0);
  std::vector<std::uint8_t> fat(n);
  std::vector<std::int32_t> component(n);
  std::vector<std::size_t> stack, members;
  for (std::size_t k = 0; k < g.nz(); ++k) {
    const auto codes = roi_mask.slice(k);
    const auto values = hu.slice(k);
    for (std::size_t i = 0; i < n; ++i) {
      fat[i] = in_roi[codes[i]] && values[i] >= kFatLowerHU && values[i] <= kFatUpperHU;
    }
    std::fill(component.begin(), component.end(), 0);
    std::int32_t next = 0;
    std::uint8_t* dst = out.data() + k * n;
    for (std::size_t seed = 0; seed < n; ++seed) {
      if (!fat[seed] || component[seed] != 0) continue;
      component[seed] = ++next;
      members.clear();
      stack.assign(1, seed);
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        members.push_back(p);
        const std::size_t px = p % nx, py = p / nx;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if ((dx < 0 && px == 0) || (dx > 0 && px + 1 == nx)) continue;
            if ((dy < 0 && py == 0) || (dy > 0 && py + 1 == ny)) continue;
            const std::size_t q = (py + dy) * nx + (px + dx);
            if (fat[q] && component[q] == 0) {
              component[q] = next;
              stack.push_back(q);
            }
          }
        }
      }
      if (members.size() >= kMinMuscularFatPixels) {
        for (std::size_t p : members) dst[p] = kCandidateCode;
      }
    }
  }
  LabelVolume result(g, std::move(out), {{0, std::string(tissue::background)}, {kCandidateCode, std::string(tissue::muscular_fat)}},
                     LabelKind::Tissue);
  result.set_subject_id(roi_mask.subject_id());
  return result;
}

}  // namespace bodycomp
