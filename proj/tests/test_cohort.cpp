#include <gtest/gtest.h>

#include <sstream>

#include "bodycomp/bodycomp.hpp"
#include "oracles.hpp"

using namespace bodycomp;

namespace {

BodyCompResult result(const std::string& id, double d2) {
  BodyCompResult r;
  r.subject_id = id;
  r.muscle_density_2d = d2;
  r.muscle_density_3d = 2 * d2 + 1;
  r.vat_sat_ratio_2d = d2 / 100;
  r.vat_sat_ratio_3d = d2 / 50;
  r.muscle_area_2d = 100 + d2;
  r.muscle_volume_3d = 1000 + d2;
  return r;
}

SubjectRecord record(const std::string& id, double age, Sex sex, const std::string& race) {
  SubjectRecord s;
  s.subject_id = id;
  s.age_years = age;
  s.sex = sex;
  s.race = race;
  return s;
}

}  // namespace

TEST(AgeBins, ExactSplitWhenAgesAreDistinct) {
  std::vector<double> ages;
  for (int i = 0; i < 120; ++i) ages.push_back(20 + i);
  const AgeBinning b = age_bins(ages, 6, 20);
  ASSERT_EQ(b.bins.size(), 6u);
  EXPECT_FALSE(b.reduced);
  for (const auto& bin : b.bins) EXPECT_EQ(bin.count, 20u);
  EXPECT_EQ(b.bin_of(20), 0u);
  EXPECT_EQ(b.bin_of(39), 0u);
  EXPECT_EQ(b.bin_of(40), 1u);
  EXPECT_EQ(b.bin_of(139), 5u);
  EXPECT_EQ(b.label(0), "20-39");
}

TEST(AgeBins, TiedAgesStayTogether) {
  std::vector<double> ages(30, 50.0);
  for (int i = 0; i < 30; ++i) ages.push_back(60 + i);
  const AgeBinning b = age_bins(ages, 3, 10);
  std::size_t total = 0;
  for (const auto& bin : b.bins) {
    EXPECT_GE(bin.count, 10u);
    total += bin.count;
  }
  EXPECT_EQ(total, 60u);
  EXPECT_EQ(b.bins[0].lo, 50.0);
  EXPECT_EQ(b.bins[0].hi, 50.0);
}

TEST(AgeBins, ReducesWhenInfeasible) {
  std::vector<double> ages;
  for (int i = 0; i < 50; ++i) ages.push_back(30 + i);
  const AgeBinning b = age_bins(ages, 6, 20);
  EXPECT_EQ(b.bins.size(), 2u);
  EXPECT_TRUE(b.reduced);
  EXPECT_FALSE(b.warning.empty());

  const AgeBinning tiny = age_bins(std::vector<double>{40, 41, 42}, 6, 20);
  EXPECT_EQ(tiny.bins.size(), 1u);
  EXPECT_TRUE(tiny.reduced);
  EXPECT_EQ(tiny.bins[0].count, 3u);
}

TEST(AgeBins, RandomCohortsSatisfyConstraints) {
  oracle::Rng rng(21);
  for (int it = 0; it < 200; ++it) {
    std::vector<double> ages(1 + rng() % 400);
    for (auto& a : ages) a = static_cast<double>(18 + rng() % 70);
    const std::size_t want = 1 + rng() % 8, min = 1 + rng() % 30;
    const AgeBinning b = age_bins(ages, want, min);
    std::size_t total = 0;
    for (std::size_t j = 0; j < b.bins.size(); ++j) {
      total += b.bins[j].count;
      if (ages.size() >= min) EXPECT_GE(b.bins[j].count, min);
      if (j > 0) EXPECT_GT(b.bins[j].lo, b.bins[j - 1].hi);
    }
    EXPECT_EQ(total, ages.size());
    EXPECT_LE(b.bins.size(), want);
    EXPECT_EQ(b.reduced, b.bins.size() < want || ages.size() < min);
    for (double a : ages) {
      const auto& bin = b.bins[b.bin_of(a)];
      EXPECT_TRUE(a >= bin.lo && a <= bin.hi);
    }
  }
}

TEST(AgeBins, InvalidInput) {
  EXPECT_THROW((void)age_bins(std::vector<double>{}, 6, 20), Error);
  EXPECT_THROW((void)age_bins(std::vector<double>{1}, 0, 20), Error);
  EXPECT_THROW((void)age_bins(std::vector<double>{-1}, 2, 1), Error);
}

TEST(GroupStats, BySexInFixedOrder) {
  const std::vector<BodyCompResult> results{result("b", 10), result("a", 20), result("c", 30)};
  const std::vector<SubjectRecord> records{record("a", 50, Sex::Male, "X"), record("b", 51, Sex::Female, "X"),
                                           record("c", 52, Sex::Male, "")};
  GroupStatsOptions options;
  options.min_group_size = 2;
  const GroupStats s = group_stats(results, records, GroupBy::Sex, options);
  ASSERT_EQ(s.rows.size(), 2 * all_metrics.size());
  EXPECT_EQ(s.rows[0].group, "Female");
  EXPECT_EQ(s.rows[0].stat.n, 1u);
  EXPECT_TRUE(s.rows[0].below_min);
  const GroupStatRow& male = s.rows[all_metrics.size()];
  EXPECT_EQ(male.group, "Male");
  EXPECT_DOUBLE_EQ(male.stat.mean, 25.0);
  EXPECT_DOUBLE_EQ(male.stat.sd, 5.0);
  EXPECT_FALSE(male.below_min);
  // SMI is absent everywhere.
  EXPECT_EQ(s.rows[all_metrics.size() - 1].metric, Metric::Smi2D);
  EXPECT_EQ(s.rows[all_metrics.size() - 1].stat.n, 0u);
  EXPECT_EQ(sufficient_groups(s).size(), all_metrics.size());
}

TEST(GroupStats, RaceBlankBecomesUnknown) {
  const std::vector<BodyCompResult> results{result("a", 1), result("b", 2)};
  const std::vector<SubjectRecord> records{record("a", 1, Sex::Male, ""), record("b", 2, Sex::Male, "Asian")};
  const GroupStats s = group_stats(results, records, GroupBy::Race);
  EXPECT_EQ(s.rows[0].group, "Asian");
  EXPECT_EQ(s.rows[all_metrics.size()].group, "Unknown");
}

TEST(GroupStats, Errors) {
  const std::vector<BodyCompResult> dup{result("a", 1), result("a", 2)};
  const std::vector<SubjectRecord> records{record("a", 1, Sex::Male, "")};
  EXPECT_THROW((void)group_stats(dup, records, GroupBy::Sex), Error);
  const std::vector<BodyCompResult> stranger{result("z", 1)};
  try {
    (void)group_stats(stranger, records, GroupBy::Sex);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnresolvedSubject);
  }
}

TEST(GroupStats, InputOrderDoesNotMatter) {
  std::vector<BodyCompResult> results;
  std::vector<SubjectRecord> records;
  for (int i = 0; i < 60; ++i) {
    results.push_back(result("s" + std::to_string(i), 0.1 * i * i));
    records.push_back(record("s" + std::to_string(i), 20 + i, i % 3 ? Sex::Male : Sex::Female, ""));
  }
  const GroupStats a = group_stats(results, records, GroupBy::AgeBin, {5, 3, 10});
  std::reverse(results.begin(), results.end());
  const GroupStats b = group_stats(results, records, GroupBy::AgeBin, {5, 3, 10});
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].group, b.rows[i].group);
    EXPECT_EQ(a.rows[i].stat.mean, b.rows[i].stat.mean);
    EXPECT_EQ(a.rows[i].stat.sd, b.rows[i].stat.sd);
  }
}

TEST(Correlation, LinearFamiliesAndMissingValues) {
  std::vector<BodyCompResult> results;
  for (int i = 0; i < 10; ++i) {
    results.push_back(result("s" + std::to_string(i), i * 1.5));
    if (i < 4) results.back().smi_2d = i;
  }
  const auto entries = correlation_matrix(results, default_metric_pairs());
  ASSERT_EQ(entries.size(), 9u);
  EXPECT_NEAR(*entries[0].r, 1.0, 1e-12);
  EXPECT_EQ(entries[0].n, 10u);
  for (const auto& e : entries) {
    if (e.b == Metric::Smi2D) EXPECT_EQ(e.n, 4u);
  }
  std::vector<BodyCompResult> flat{result("a", 1), result("b", 1)};
  EXPECT_FALSE(correlation_matrix(flat, default_metric_pairs())[0].r);
}

TEST(Metric, NamesRoundTrip) {
  for (Metric m : all_metrics) EXPECT_EQ(parse_metric(to_string(m)), m);
  EXPECT_THROW((void)parse_metric("bmi"), Error);
  EXPECT_EQ(parse_group_by("age_bin"), GroupBy::AgeBin);
  EXPECT_THROW((void)parse_group_by("zip"), Error);
}

TEST(Tables, CsvRendering) {
  const std::vector<BodyCompResult> results{result("a", 1), result("b", 3)};
  const std::vector<SubjectRecord> records{record("a", 1, Sex::Male, "Race, Other"), record("b", 2, Sex::Male, "")};
  const std::vector<GroupStats> tables{group_stats(results, records, GroupBy::Race)};
  std::ostringstream out;
  write_group_stats_csv(tables, out);
  std::istringstream lines(out.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  EXPECT_EQ(header, "group_by,group,metric,count,mean,sd,group_size,below_min");
  EXPECT_EQ(first, "race,\"Race, Other\",muscle_density_2d,1,1,0,1,1");

  std::ostringstream corr;
  write_correlations_csv(correlation_matrix(results, default_metric_pairs()), corr);
  EXPECT_EQ(corr.str().substr(0, corr.str().find('\n')), "metric_a,metric_b,r,n");
  EXPECT_NE(corr.str().find("muscle_density_2d,muscle_density_3d,1,2"), std::string::npos);
  EXPECT_NE(corr.str().find("muscle_area_2d,smi_2d,,0"), std::string::npos);
}
