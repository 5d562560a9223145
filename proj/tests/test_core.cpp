#include <gtest/gtest.h>

#include "bodycomp/bodycomp.hpp"
#include "oracles.hpp"

using namespace bodycomp;

namespace {

Geometry grid(std::size_t nx, std::size_t ny, std::size_t nz) {
  Geometry g;
  g.dims = {nx, ny, nz};
  return g;
}

template <typename F>
ErrorCode code_of_throw(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no bodycomp::Error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Geometry, IndexIsXFastest) {
  const Geometry g = grid(3, 4, 5);
  EXPECT_EQ(g.index(0, 0, 0), 0u);
  EXPECT_EQ(g.index(1, 0, 0), 1u);
  EXPECT_EQ(g.index(0, 1, 0), 3u);
  EXPECT_EQ(g.index(0, 0, 1), 12u);
  EXPECT_EQ(g.voxel_count(), 60u);
}

TEST(Geometry, PixelAreaInSquareCentimetres) {
  Geometry g = grid(1, 1, 1);
  g.spacing_mm = {0.8, 0.5, 3};
  EXPECT_DOUBLE_EQ(g.pixel_area_cm2(), 0.004);
}

TEST(Geometry, SliceThicknessUniformAndIrregular) {
  Geometry g = grid(1, 1, 4);
  g.spacing_mm = {1, 1, 2.5};
  for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(g.slice_thickness_mm(k), 2.5);

  g.z_positions_mm = {0, 1, 4, 10};
  EXPECT_DOUBLE_EQ(g.slice_thickness_mm(0), 1.0);
  EXPECT_DOUBLE_EQ(g.slice_thickness_mm(1), 2.0);
  EXPECT_DOUBLE_EQ(g.slice_thickness_mm(2), 4.5);
  EXPECT_DOUBLE_EQ(g.slice_thickness_mm(3), 6.0);
  EXPECT_EQ(code_of_throw([&] { (void)g.slice_thickness_mm(4); }), ErrorCode::InvalidArgument);
}

TEST(Geometry, DecreasingZPositionsAreValid) {
  Geometry g = grid(1, 1, 3);
  g.z_positions_mm = {10, 5, 0};
  EXPECT_NO_THROW(g.validate());
  EXPECT_DOUBLE_EQ(g.slice_thickness_mm(1), 5.0);
}

TEST(Geometry, ValidateRejectsBadGrids) {
  Geometry g = grid(2, 2, 3);
  g.spacing_mm = {1, 0, 1};
  EXPECT_EQ(code_of_throw([&] { g.validate(); }), ErrorCode::InvalidVolume);
  g.spacing_mm = {1, 1, 1};
  g.z_positions_mm = {0, 1};
  EXPECT_EQ(code_of_throw([&] { g.validate(); }), ErrorCode::InvalidVolume);
  g.z_positions_mm = {0, 1, 1};
  EXPECT_EQ(code_of_throw([&] { g.validate(); }), ErrorCode::InvalidVolume);
  g.z_positions_mm = {0, 2, 1};
  EXPECT_EQ(code_of_throw([&] { g.validate(); }), ErrorCode::InvalidVolume);
}

TEST(Geometry, SameGridToleratesRoundoffOnly) {
  Geometry a = grid(2, 2, 2), b = grid(2, 2, 2);
  b.spacing_mm[0] = 1.0 + 1e-9;
  EXPECT_TRUE(same_grid(a, b));
  b.spacing_mm[0] = 1.01;
  EXPECT_FALSE(same_grid(a, b));
  EXPECT_EQ(code_of_throw([&] { require_same_grid(a, b, "mask"); }), ErrorCode::GeometryMismatch);
  EXPECT_FALSE(same_grid(a, grid(2, 2, 3)));
}

TEST(VoxelVolume, RawValuesMustBeIntegralInt16) {
  const Geometry g = grid(2, 1, 1);
  EXPECT_NO_THROW(VoxelVolume(g, {-32768, 32767}, UnitState::Raw));
  EXPECT_EQ(code_of_throw([&] { VoxelVolume(g, {0.5f, 1}, UnitState::Raw); }), ErrorCode::InvalidVolume);
  EXPECT_EQ(code_of_throw([&] { VoxelVolume(g, {40000, 1}, UnitState::Raw); }), ErrorCode::InvalidVolume);
  EXPECT_EQ(code_of_throw([&] { VoxelVolume(g, {1}, UnitState::Raw); }), ErrorCode::InvalidVolume);
  EXPECT_NO_THROW(VoxelVolume(g, {0.5f, -2000.25f}, UnitState::HU));
}

TEST(HuConversion, AppliesSlopeAndIntercept) {
  const Geometry g = grid(3, 1, 1);
  VoxelVolume raw(g, {0, 1024, 2000}, UnitState::Raw, 1.0, -1024.0);
  raw.set_subject_id("s1");
  const VoxelVolume hu = to_hu(raw);
  EXPECT_EQ(hu.unit_state(), UnitState::HU);
  EXPECT_FLOAT_EQ(hu.values()[0], -1024.0f);
  EXPECT_FLOAT_EQ(hu.values()[1], 0.0f);
  EXPECT_FLOAT_EQ(hu.values()[2], 976.0f);
  EXPECT_EQ(hu.subject_id(), "s1");
  // Source untouched by the const overload.
  EXPECT_EQ(raw.unit_state(), UnitState::Raw);

  const VoxelVolume scaled = to_hu(VoxelVolume(g, {2, 4, 6}, UnitState::Raw, 0.5, 10.0));
  EXPECT_FLOAT_EQ(scaled.values()[2], 13.0f);
}

TEST(HuConversion, DoubleConversionIsAnError) {
  const VoxelVolume hu = to_hu(VoxelVolume(grid(1, 1, 1), {5}, UnitState::Raw));
  EXPECT_EQ(code_of_throw([&] { (void)to_hu(hu); }), ErrorCode::UnitState);
}

TEST(LabelVolume, EveryNonzeroCodeNeedsAName) {
  const Geometry g = grid(3, 1, 1);
  EXPECT_NO_THROW(LabelVolume(g, {0, 1, 0}, {{1, "a"}}));
  EXPECT_EQ(code_of_throw([&] { LabelVolume(g, {0, 1, 2}, {{1, "a"}}); }), ErrorCode::InvalidVolume);
  const LabelVolume v(g, {0, 1, 0}, {{1, "a"}, {7, "b"}});
  EXPECT_EQ(v.code_of("b"), 7);
  EXPECT_FALSE(v.find_code("c"));
  EXPECT_EQ(code_of_throw([&] { (void)v.code_of("c"); }), ErrorCode::UnknownLabel);
}

TEST(MergePolicy, ParsesAndPrints) {
  for (MergePolicy p : all_merge_policies) EXPECT_EQ(parse_merge_policy(to_string(p)), p);
  EXPECT_EQ(parse_merge_policy("muscle"), MergePolicy::MuscularFatAsMuscle);
  EXPECT_EQ(code_of_throw([] { (void)parse_merge_policy("bone"); }), ErrorCode::InvalidArgument);
}

TEST(MergePolicy, ClassifierFollowsPolicy) {
  const LabelMap map = tissue::default_label_map();
  EXPECT_EQ(TissueClassifier(map, MergePolicy::MuscularFatAsMuscle)(4), TissueClass::Muscle);
  EXPECT_EQ(TissueClassifier(map, MergePolicy::MuscularFatAsSAT)(4), TissueClass::SAT);
  EXPECT_EQ(TissueClassifier(map, MergePolicy::MuscularFatAsVAT)(4), TissueClass::VAT);
  EXPECT_EQ(TissueClassifier(map, MergePolicy::Separate)(4), TissueClass::MuscularFat);
  EXPECT_EQ(TissueClassifier(map, MergePolicy::Separate)(0), TissueClass::None);
  EXPECT_EQ(TissueClassifier(map, MergePolicy::Separate)(99), TissueClass::None);
}

TEST(MergePolicy, NonDefaultCodesResolveByName) {
  const LabelMap map{{10, "vat"}, {20, "skeletal_muscle"}, {30, "muscular_fat"}, {40, "sat"}};
  const TissueClassifier c(map, MergePolicy::MuscularFatAsVAT);
  EXPECT_EQ(c(20), TissueClass::Muscle);
  EXPECT_EQ(c(30), TissueClass::VAT);
  const LabelVolume v(grid(4, 1, 1), {10, 20, 30, 40}, map);
  const LabelVolume merged = apply_merge_policy(v, MergePolicy::MuscularFatAsVAT);
  EXPECT_EQ(std::vector<std::uint8_t>(merged.codes().begin(), merged.codes().end()),
            (std::vector<std::uint8_t>{10, 20, 10, 40}));
  EXPECT_EQ(merged.label_map(), map);
}

TEST(MergePolicy, MissingVocabularyIsReported) {
  LabelMap map = tissue::default_label_map();
  map.erase(tissue::muscular_fat_code);
  EXPECT_EQ(code_of_throw([&] { TissueClassifier(map, MergePolicy::Separate); }), ErrorCode::MissingVocabulary);
}

TEST(MergePolicy, SeparateLeavesMaskUnchanged) {
  oracle::Rng rng(1);
  const LabelVolume v = oracle::random_tissue(rng, grid(5, 5, 5));
  const LabelVolume same = apply_merge_policy(v, MergePolicy::Separate);
  EXPECT_TRUE(std::equal(v.codes().begin(), v.codes().end(), same.codes().begin()));
}

TEST(Sex, ParsesCaseInsensitively) {
  EXPECT_EQ(parse_sex("F"), Sex::Female);
  EXPECT_EQ(parse_sex("female"), Sex::Female);
  EXPECT_EQ(parse_sex("MALE"), Sex::Male);
  EXPECT_EQ(parse_sex(""), Sex::Unknown);
  EXPECT_EQ(parse_sex("x"), Sex::Unknown);
}

TEST(Error, CarriesCodeAndPrefixedMessage) {
  const Error e(ErrorCode::VertebraNotFound, "no L3");
  EXPECT_EQ(e.code(), ErrorCode::VertebraNotFound);
  EXPECT_EQ(e.message(), "no L3");
  EXPECT_STREQ(e.what(), "vertebra-not-found: no L3");
}
