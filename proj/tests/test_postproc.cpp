#include <gtest/gtest.h>

#include "bodycomp/bodycomp.hpp"
#include "oracles.hpp"

using namespace bodycomp;

namespace {

Geometry plane(std::size_t nx, std::size_t ny, std::size_t nz = 1) {
  Geometry g;
  g.dims = {nx, ny, nz};
  return g;
}

}  // namespace

TEST(SatSkin, GrowsOnlyIntoSoftBackground) {
  const Geometry g = plane(7, 7);
  std::vector<std::uint8_t> codes(49, 0);
  codes[g.index(3, 3, 0)] = tissue::sat_code;
  codes[g.index(4, 3, 0)] = tissue::muscle_code;
  std::vector<float> hu(49, 0.0f);
  hu[g.index(1, 1, 0)] = -900.0f;  // air inside the window
  hu[g.index(5, 5, 0)] = -800.0f;  // threshold is strict
  const LabelVolume mask(g, codes, tissue::default_label_map());
  const LabelVolume out = dilate_sat_to_skin(mask, VoxelVolume(g, hu, UnitState::HU));

  EXPECT_EQ(out.at(1, 1, 0), 0);
  EXPECT_EQ(out.at(5, 5, 0), 0);
  EXPECT_EQ(out.at(4, 3, 0), tissue::muscle_code);
  EXPECT_EQ(out.at(1, 5, 0), tissue::sat_code);
  EXPECT_EQ(out.at(0, 3, 0), 0);  // outside the 5x5 window
  std::size_t sat = 0;
  for (auto c : out.codes()) sat += c == tissue::sat_code;
  EXPECT_EQ(sat, 25u - 3u);
}

TEST(SatSkin, SinglePassNoIteration) {
  const Geometry g = plane(12, 1);
  std::vector<std::uint8_t> codes(12, 0);
  codes[0] = tissue::sat_code;
  const LabelVolume mask(g, codes, tissue::default_label_map());
  const LabelVolume out = dilate_sat_to_skin(mask, VoxelVolume(g, std::vector<float>(12, 0), UnitState::HU));
  EXPECT_EQ(out.at(2, 0, 0), tissue::sat_code);
  EXPECT_EQ(out.at(3, 0, 0), 0);
}

TEST(SatSkin, SlicesAreIndependent) {
  const Geometry g = plane(3, 3, 2);
  std::vector<std::uint8_t> codes(18, 0);
  codes[4] = tissue::sat_code;
  const LabelVolume mask(g, codes, tissue::default_label_map());
  const LabelVolume out = dilate_sat_to_skin(mask, VoxelVolume(g, std::vector<float>(18, 0), UnitState::HU));
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(out.codes()[i], tissue::sat_code);
  for (std::size_t i = 9; i < 18; ++i) EXPECT_EQ(out.codes()[i], 0);
}

TEST(SatSkin, MatchesOracleOnRandomSlices) {
  oracle::Rng rng(11);
  for (int it = 0; it < 30; ++it) {
    const Geometry g = plane(1 + rng() % 40, 1 + rng() % 40, 1 + rng() % 3);
    const LabelVolume mask = oracle::random_tissue(rng, g, 0.2);
    const VoxelVolume hu = oracle::random_hu(rng, g, -1000, 100);
    const LabelVolume out = dilate_sat_to_skin(mask, hu);
    const auto want = oracle::sat_skin_expected(mask, hu);
    EXPECT_TRUE(std::equal(want.begin(), want.end(), out.codes().begin()));
  }
}

TEST(SatSkin, Preconditions) {
  const Geometry g = plane(2, 2);
  const LabelVolume mask(g, std::vector<std::uint8_t>(4, 0), tissue::default_label_map());
  EXPECT_THROW((void)dilate_sat_to_skin(mask, VoxelVolume(g, std::vector<float>(4, 0), UnitState::Raw)), Error);
  EXPECT_THROW((void)dilate_sat_to_skin(mask, VoxelVolume(plane(2, 3), std::vector<float>(6, 0), UnitState::HU)), Error);
  const LabelVolume nosat(g, std::vector<std::uint8_t>(4, 0), {{1, "skeletal_muscle"}});
  EXPECT_THROW((void)dilate_sat_to_skin(nosat, VoxelVolume(g, std::vector<float>(4, 0), UnitState::HU)), Error);
}

TEST(MuscularFat, SizeThresholdAndDiagonalConnectivity) {
  const Geometry g = plane(10, 4);
  std::vector<float> hu(40, 30.0f);
  // Seven pixels linked only through corners.
  for (std::size_t k = 0; k < 7; ++k) hu[g.index(k, k % 2, 0)] = -120.0f;
  // Six pixels in a row.
  for (std::size_t k = 0; k < 6; ++k) hu[g.index(k, 3, 0)] = -60.0f;
  const LabelVolume roi(g, std::vector<std::uint8_t>(40, tissue::muscle_code), tissue::default_label_map());
  const LabelVolume out = muscular_fat_candidates(VoxelVolume(g, hu, UnitState::HU), roi);
  for (std::size_t k = 0; k < 7; ++k) EXPECT_EQ(out.at(k, k % 2, 0), kCandidateCode);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(out.at(k, 3, 0), 0);
  EXPECT_EQ(out.label_map().at(kCandidateCode), "muscular_fat");
}

TEST(MuscularFat, WindowBoundsAreInclusive) {
  const Geometry g = plane(7, 3);
  std::vector<float> hu(21, 0.0f);
  for (std::size_t x = 0; x < 7; ++x) hu[g.index(x, 1, 0)] = x % 2 ? -220.0f : -50.0f;
  const LabelVolume roi(g, std::vector<std::uint8_t>(21, 1), {{1, "skeletal_muscle"}});
  const LabelVolume out = muscular_fat_candidates(VoxelVolume(g, hu, UnitState::HU), roi);
  for (std::size_t x = 0; x < 7; ++x) EXPECT_EQ(out.at(x, 1, 0), 1);

  hu[g.index(3, 1, 0)] = -220.5f;
  const LabelVolume split = muscular_fat_candidates(VoxelVolume(g, hu, UnitState::HU), roi);
  for (std::size_t x = 0; x < 7; ++x) EXPECT_EQ(split.at(x, 1, 0), 0);
}

TEST(MuscularFat, RoiRestrictsCandidates) {
  const Geometry g = plane(8, 1);
  std::vector<float> hu(8, -100.0f);
  std::vector<std::uint8_t> codes{1, 1, 1, 1, 1, 1, 1, 2};
  const LabelVolume roi(g, codes, tissue::default_label_map());
  const VoxelVolume v(g, hu, UnitState::HU);
  std::size_t all = 0, muscle_only = 0;
  const LabelVolume a = muscular_fat_candidates(v, roi);
  const LabelVolume m = muscular_fat_candidates(v, roi, {tissue::muscle_code});
  for (auto c : a.codes()) all += c;
  for (auto c : m.codes()) muscle_only += c;
  EXPECT_EQ(all, 8u);
  EXPECT_EQ(muscle_only, 7u);
}

TEST(MuscularFat, MatchesUnionFindOracle) {
  oracle::Rng rng(13);
  for (int it = 0; it < 40; ++it) {
    const Geometry g = plane(1 + rng() % 50, 1 + rng() % 50, 1 + rng() % 3);
    const LabelVolume roi = oracle::random_tissue(rng, g, 0.9);
    const VoxelVolume hu = oracle::random_hu(rng, g, -260, 0);
    const LabelVolume out = muscular_fat_candidates(hu, roi);
    const auto want = oracle::muscular_fat_expected(hu, roi, {});
    EXPECT_TRUE(std::equal(want.begin(), want.end(), out.codes().begin()));
  }
}
