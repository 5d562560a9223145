#include <gtest/gtest.h>

#include <cmath>

#include "bodycomp/bodycomp.hpp"
#include "oracles.hpp"

using namespace bodycomp;

namespace {

// One row of voxels per slice; values given slice by slice.
struct Case {
  Geometry g;
  LabelVolume tissue;
  VoxelVolume hu;
};

Case make_case(const std::vector<std::vector<std::uint8_t>>& codes, const std::vector<std::vector<float>>& hu,
               std::array<double, 3> spacing = {10, 10, 2}) {
  Geometry g;
  g.dims = {codes.at(0).size(), 1, codes.size()};
  g.spacing_mm = spacing;
  std::vector<std::uint8_t> c;
  std::vector<float> v;
  for (std::size_t k = 0; k < codes.size(); ++k) {
    c.insert(c.end(), codes[k].begin(), codes[k].end());
    v.insert(v.end(), hu[k].begin(), hu[k].end());
  }
  return {g, LabelVolume(g, c, tissue::default_label_map()), VoxelVolume(g, v, UnitState::HU)};
}

}  // namespace

TEST(MuscleDensity, VoxelMeanAfterMerging) {
  // muscle=1, sat=2, vat=3, mf=4
  const Case c = make_case({{1, 1, 4, 2}}, {{40, 50, -100, -90}});
  const auto z0 = MeasurementRegion::single_slice(0);
  EXPECT_DOUBLE_EQ(muscle_density(c.hu, c.tissue, z0, MergePolicy::MuscularFatAsMuscle), (40.0 + 50 - 100) / 3);
  EXPECT_DOUBLE_EQ(muscle_density(c.hu, c.tissue, z0, MergePolicy::Separate), 45.0);
  EXPECT_DOUBLE_EQ(muscle_density(c.hu, c.tissue, z0, MergePolicy::MuscularFatAsSAT), 45.0);
}

TEST(MuscleDensity, RangeIsVoxelWeightedNotSliceWeighted) {
  const Case c = make_case({{1, 0, 0}, {1, 1, 1}}, {{10, 0, 0}, {40, 40, 40}});
  EXPECT_DOUBLE_EQ(muscle_density(c.hu, c.tissue, MeasurementRegion::slice_range(0, 1), MergePolicy::Separate),
                   (10.0 + 120) / 4);
}

TEST(MuscleDensity, EmptyRegionAndRawInputFail) {
  const Case c = make_case({{2, 3}}, {{0, 0}});
  try {
    (void)muscle_density(c.hu, c.tissue, MeasurementRegion::all_slices(), MergePolicy::Separate);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyRegion);
  }
  const VoxelVolume raw(c.g, {0, 0}, UnitState::Raw);
  try {
    (void)muscle_density(raw, c.tissue, MeasurementRegion::all_slices(), MergePolicy::Separate);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnitState);
  }
}

TEST(TissueArea, CountTimesPixelArea) {
  // 10 mm x 10 mm pixels are 1 cm^2.
  const Case c = make_case({{1, 1, 2}, {1, 0, 0}}, {{0, 0, 0}, {0, 0, 0}});
  EXPECT_DOUBLE_EQ(tissue_area_2d(c.tissue, "skeletal_muscle", 0), 2.0);
  EXPECT_DOUBLE_EQ(tissue_area_2d(c.tissue, "sat", 1), 0.0);
  EXPECT_THROW((void)tissue_area_2d(c.tissue, "skeletal_muscle", 2), Error);
  EXPECT_THROW((void)tissue_area_2d(c.tissue, "bone", 0), Error);
}

TEST(TissueVolume, ThicknessWeighted) {
  Case c = make_case({{1, 1}, {1, 0}, {1, 1}}, {{0, 0}, {0, 0}, {0, 0}});
  // 5 voxels x 1 cm^2 x 0.2 cm
  EXPECT_DOUBLE_EQ(tissue_volume_3d(c.tissue, "skeletal_muscle", MeasurementRegion::all_slices()), 1.0);

  Geometry g = c.g;
  g.z_positions_mm = {0, 2, 8};  // thickness 2, 4, 6 mm
  const LabelVolume irregular(g, {1, 1, 1, 0, 1, 1}, tissue::default_label_map());
  EXPECT_DOUBLE_EQ(tissue_volume_3d(irregular, "skeletal_muscle", MeasurementRegion::all_slices()),
                   (2 * 2 + 1 * 4 + 2 * 6) / 10.0);
}

TEST(VatSatRatio, AreaOnSliceVolumeOverRange) {
  const Case c = make_case({{2, 2, 3, 0}, {2, 3, 3, 3}}, {{0, 0, 0, 0}, {0, 0, 0, 0}});
  EXPECT_DOUBLE_EQ(vat_sat_ratio(c.tissue, MeasurementRegion::single_slice(0), MergePolicy::Separate), 0.5);
  EXPECT_DOUBLE_EQ(vat_sat_ratio(c.tissue, MeasurementRegion::slice_range(0, 1), MergePolicy::Separate), 4.0 / 3.0);
}

TEST(VatSatRatio, MergePolicyMovesMuscularFat) {
  const Case c = make_case({{2, 3, 4, 4}}, {{0, 0, 0, 0}});
  const auto z = MeasurementRegion::single_slice(0);
  EXPECT_DOUBLE_EQ(vat_sat_ratio(c.tissue, z, MergePolicy::MuscularFatAsSAT), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(vat_sat_ratio(c.tissue, z, MergePolicy::MuscularFatAsVAT), 3.0);
  EXPECT_DOUBLE_EQ(vat_sat_ratio(c.tissue, z, MergePolicy::MuscularFatAsMuscle), 1.0);
}

TEST(VatSatRatio, ZeroSatIsUndefined) {
  const Case c = make_case({{3, 1}}, {{0, 0}});
  try {
    (void)vat_sat_ratio(c.tissue, MeasurementRegion::all_slices(), MergePolicy::Separate);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UndefinedRatio);
  }
}

TEST(Smi, AreaOverHeightSquared) {
  EXPECT_DOUBLE_EQ(smi(160.0, 2.0), 40.0);
  EXPECT_THROW((void)smi(100.0, 0.0), Error);
  EXPECT_THROW((void)smi(100.0, -1.7), Error);
}

TEST(MeasureSubject, PhantomAgreesWithVoxelCounts) {
  PhantomSpec spec;
  spec.nx = 64;
  spec.ny = 64;
  spec.nz = 30;
  spec.t12_slice = 25;
  spec.l3_slice = 14;
  spec.l4_slice = 5;
  const Phantom p = make_phantom(spec);
  const VoxelVolume hu = to_hu(p.ct);
  SubjectRecord s;
  s.subject_id = "x";
  s.height_m = 1.6;
  const BodyCompResult r = measure_subject(hu, p.tissue, p.vertebrae, s, MergePolicy::MuscularFatAsMuscle);
  EXPECT_EQ(r.region_2d, 14u);
  EXPECT_EQ(r.region_3d_lo, 5u);
  EXPECT_EQ(r.region_3d_hi, 25u);
  EXPECT_FALSE(r.region_3d_single_slice);

  std::size_t n = 0;
  for (std::size_t i = 0; i < 64 * 64; ++i) {
    const auto c = p.tissue.slice(14)[i];
    n += c == tissue::muscle_code || c == tissue::muscular_fat_code;
  }
  EXPECT_DOUBLE_EQ(r.muscle_area_2d, static_cast<double>(n) * p.tissue.geometry().pixel_area_cm2());
  ASSERT_TRUE(r.smi_2d);
  EXPECT_NEAR(*r.smi_2d, r.muscle_area_2d / 2.56, 1e-12);
}

TEST(MeasureSubject, NoHeightMeansNoSmi) {
  const Phantom p = make_phantom({});
  SubjectRecord s;
  s.subject_id = "y";
  const BodyCompResult r = measure_subject(to_hu(p.ct), p.tissue, p.vertebrae, s, MergePolicy::Separate);
  EXPECT_FALSE(r.smi_2d);
}

TEST(MeasureSubject, MissingVertebraOrSatPropagates) {
  PhantomSpec spec;
  spec.include_l3 = false;
  const Phantom no_l3 = make_phantom(spec);
  try {
    (void)measure_subject(to_hu(no_l3.ct), no_l3.tissue, no_l3.vertebrae, {}, MergePolicy::Separate);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::VertebraNotFound);
  }
  PhantomSpec bare;
  bare.include_sat = false;
  const Phantom no_sat = make_phantom(bare);
  try {
    (void)measure_subject(to_hu(no_sat.ct), no_sat.tissue, no_sat.vertebrae, {}, MergePolicy::Separate);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UndefinedRatio);
  }
}

TEST(MeasureSubject, GridMismatchIsRejected) {
  const Phantom a = make_phantom({});
  PhantomSpec other;
  other.nx = 80;
  const Phantom b = make_phantom(other);
  try {
    (void)measure_subject(to_hu(a.ct), b.tissue, a.vertebrae, {}, MergePolicy::Separate);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GeometryMismatch);
  }
}

TEST(Summary, PopulationStandardDeviation) {
  const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  const SummaryStat s = summarize(xs);
  EXPECT_EQ(s.n, 8u);
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_DOUBLE_EQ(s.sd, 2.0);
  EXPECT_EQ(summarize(std::vector<double>{}).n, 0u);
}
