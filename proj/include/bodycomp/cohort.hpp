#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bodycomp/core.hpp"
#include "bodycomp/error.hpp"
#include "bodycomp/eval.hpp"
#include "bodycomp/format.hpp"
#include "bodycomp/stats.hpp"

namespace bodycomp {

enum class Metric {
  MuscleDensity2D,
  MuscleDensity3D,
  VatSatRatio2D,
  VatSatRatio3D,
  MuscleArea2D,
  MuscleVolume3D,
  Smi2D,
};

inline constexpr std::array<Metric, 7> all_metrics{
    Metric::MuscleDensity2D, Metric::MuscleDensity3D, Metric::VatSatRatio2D, Metric::VatSatRatio3D,
    Metric::MuscleArea2D,    Metric::MuscleVolume3D,  Metric::Smi2D};

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::MuscleDensity2D: return "muscle_density_2d";
    case Metric::MuscleDensity3D: return "muscle_density_3d";
    case Metric::VatSatRatio2D: return "vat_sat_ratio_2d";
    case Metric::VatSatRatio3D: return "vat_sat_ratio_3d";
    case Metric::MuscleArea2D: return "muscle_area_2d";
    case Metric::MuscleVolume3D: return "muscle_volume_3d";
    case Metric::Smi2D: return "smi_2d";
  }
  return "";
}

inline Metric parse_metric(std::string_view s) {
  for (Metric m : all_metrics) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(s) + "'");
}

inline std::optional<double> metric_value(const BodyCompResult& r, Metric m) {
  switch (m) {
    case Metric::MuscleDensity2D: return r.muscle_density_2d;
    case Metric::MuscleDensity3D: return r.muscle_density_3d;
    case Metric::VatSatRatio2D: return r.vat_sat_ratio_2d;
    case Metric::VatSatRatio3D: return r.vat_sat_ratio_3d;
    case Metric::MuscleArea2D: return r.muscle_area_2d;
    case Metric::MuscleVolume3D: return r.muscle_volume_3d;
    case Metric::Smi2D: return r.smi_2d;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Age binning
// ---------------------------------------------------------------------------

struct AgeBin {
  double lo = 0.0;  // youngest member
  double hi = 0.0;  // oldest member
  std::size_t count = 0;
};

/// Contiguous age bins. Bin j covers [edges[j], edges[j+1]); the last bin is
/// closed on the right.
struct AgeBinning {
  std::vector<double> edges;
  std::vector<AgeBin> bins;
  /// Fewer bins than requested, or a bin under the minimum count.
  bool reduced = false;
  std::string warning;

  [[nodiscard]] std::size_t bin_of(double age) const {
    const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, age);
    return static_cast<std::size_t>(it - (edges.begin() + 1));
  }

  [[nodiscard]] std::string label(std::size_t j) const {
    return format_number(bins[j].lo) + "-" + format_number(bins[j].hi);
  }
};

/**
 * Splits ages into `n_bins` contiguous groups of at least `min_count` members.
 *
 * Subjects sharing an age always land in the same bin. Cuts are seeded at the
 * j/n quantiles and moved to the nearest position that keeps the current bin
 * at `min_count` while leaving enough subjects for the bins still to come.
 * When n_bins groups cannot all reach `min_count`, the largest feasible
 * number of bins is returned and `reduced` is set; with fewer than
 * `min_count` subjects a single bin holds everyone.
 */
inline AgeBinning age_bins(std::span<const double> ages, std::size_t n_bins = 6, std::size_t min_count = 20) {
  if (ages.empty()) throw Error(ErrorCode::EmptyInput, "age_bins: no ages");
  if (n_bins == 0) throw Error(ErrorCode::InvalidArgument, "age_bins: n_bins must be >= 1");
  for (double a : ages) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "age_bins: invalid age");
  }
  std::vector<double> sorted(ages.begin(), ages.end());
  std::sort(sorted.begin(), sorted.end());

  // Distinct ages and cumulative counts.
  std::vector<double> values;
  std::vector<std::size_t> prefix{0};
  for (double a : sorted) {
    if (values.empty() || a != values.back()) {
      values.push_back(a);
      prefix.push_back(prefix.back());
    }
    ++prefix.back();
  }
  const std::size_t groups = values.size();
  const std::size_t total = sorted.size();
  const std::size_t need = std::max<std::size_t>(min_count, 1);

  // capacity[g]: most bins the groups g.. can form, each with >= need members.
  std::vector<std::size_t> capacity(groups + 1, 0);
  std::size_t closed = 0, open = 0;
  for (std::size_t g = groups; g-- > 0;) {
    open += prefix[g + 1] - prefix[g];
    if (open >= need) {
      ++closed;
      open = 0;
    }
    capacity[g] = closed;
  }

  const std::size_t feasible = capacity[0];
  const std::size_t k = std::max<std::size_t>(1, std::min(n_bins, feasible));

  std::vector<std::size_t> cuts{0};
  for (std::size_t j = 1; j < k; ++j) {
    const double target = static_cast<double>(j) * static_cast<double>(total) / static_cast<double>(k);
    std::optional<std::size_t> best;
    double best_gap = 0.0;
    for (std::size_t c = cuts.back() + 1; c < groups; ++c) {
      if (prefix[c] - prefix[cuts.back()] < need) continue;
      if (capacity[c] < k - j) break;
      const double gap = std::abs(static_cast<double>(prefix[c]) - target);
      if (!best || gap < best_gap) {
        best = c;
        best_gap = gap;
      }
    }
    cuts.push_back(*best);
  }
  cuts.push_back(groups);

  AgeBinning out;
  out.edges.push_back(values.front());
  for (std::size_t j = 0; j < k; ++j) {
    AgeBin bin;
    bin.lo = values[cuts[j]];
    bin.hi = values[cuts[j + 1] - 1];
    bin.count = prefix[cuts[j + 1]] - prefix[cuts[j]];
    out.bins.push_back(bin);
    if (j + 1 < k) out.edges.push_back(values[cuts[j + 1]]);
  }
  out.edges.push_back(values.back());

  if (k < n_bins || feasible == 0) {
    out.reduced = true;
    out.warning = "requested " + std::to_string(n_bins) + " bins of >= " + std::to_string(min_count) +
                  " subjects; produced " + std::to_string(k) +
                  (feasible == 0 ? " (under the minimum count)" : "");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Group statistics
// ---------------------------------------------------------------------------

enum class GroupBy { AgeBin, Sex, Race };

inline std::string_view to_string(GroupBy g) {
  switch (g) {
    case GroupBy::AgeBin: return "age_bin";
    case GroupBy::Sex: return "sex";
    case GroupBy::Race: return "race";
  }
  return "";
}

inline GroupBy parse_group_by(std::string_view s) {
  if (s == "age_bin" || s == "age") return GroupBy::AgeBin;
  if (s == "sex") return GroupBy::Sex;
  if (s == "race") return GroupBy::Race;
  throw Error(ErrorCode::InvalidArgument, "unknown grouping '" + std::string(s) + "' (age_bin|sex|race)");
}

struct GroupStatsOptions {
  /// Groups with fewer subjects are flagged.
  std::size_t min_group_size = 20;
  std::size_t age_bin_count = 6;
  std::size_t age_bin_min_count = 20;
};

struct GroupStatRow {
  std::string group;
  Metric metric = Metric::MuscleDensity2D;
  SummaryStat stat;  // subjects lacking the metric are not counted
  std::size_t group_size = 0;
  bool below_min = false;
};

struct GroupStats {
  GroupBy by = GroupBy::Sex;
  std::vector<GroupStatRow> rows;
  std::optional<AgeBinning> binning;
};

namespace detail {

/// Results sorted by subject id; duplicate ids are rejected.
inline std::vector<const BodyCompResult*> sorted_by_subject(std::span<const BodyCompResult> results) {
  std::vector<const BodyCompResult*> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(&r);
  std::sort(out.begin(), out.end(),
            [](const BodyCompResult* a, const BodyCompResult* b) { return a->subject_id < b->subject_id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i]->subject_id == out[i - 1]->subject_id) {
      throw Error(ErrorCode::DuplicateSubject, "duplicate result for subject '" + out[i]->subject_id + "'");
    }
  }
  return out;
}

}  // namespace detail

/// Per-group count, mean and population SD of every metric.
inline GroupStats group_stats(std::span<const BodyCompResult> results, std::span<const SubjectRecord> records,
                              GroupBy by, const GroupStatsOptions& options = {}) {
  std::unordered_map<std::string, const SubjectRecord*> by_id;
  for (const auto& rec : records) by_id.emplace(rec.subject_id, &rec);

  const auto ordered = detail::sorted_by_subject(results);
  std::vector<const SubjectRecord*> matched;
  matched.reserve(ordered.size());
  for (const BodyCompResult* r : ordered) {
    const auto it = by_id.find(r->subject_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::UnresolvedSubject, "no demographics for subject '" + r->subject_id + "'");
    }
    matched.push_back(it->second);
  }

  GroupStats out;
  out.by = by;

  // Group key -> member indices, in presentation order.
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> members;
  auto add = [&](std::size_t group, std::size_t member) {
    if (members.size() <= group) members.resize(group + 1);
    members[group].push_back(member);
  };

  switch (by) {
    case GroupBy::AgeBin: {
      std::vector<double> ages;
      for (const SubjectRecord* rec : matched) ages.push_back(rec->age_years);
      if (ages.empty()) break;
      AgeBinning binning = age_bins(ages, options.age_bin_count, options.age_bin_min_count);
      for (std::size_t j = 0; j < binning.bins.size(); ++j) names.push_back(binning.label(j));
      members.resize(names.size());
      for (std::size_t i = 0; i < matched.size(); ++i) add(binning.bin_of(matched[i]->age_years), i);
      out.binning = std::move(binning);
      break;
    }
    case GroupBy::Sex: {
      const std::array<Sex, 3> order{Sex::Female, Sex::Male, Sex::Unknown};
      std::array<std::vector<std::size_t>, 3> split;
      for (std::size_t i = 0; i < matched.size(); ++i) split[static_cast<std::size_t>(matched[i]->sex)].push_back(i);
      for (Sex s : order) {
        auto& m = split[static_cast<std::size_t>(s)];
        if (m.empty()) continue;
        names.emplace_back(to_string(s));
        members.push_back(std::move(m));
      }
      break;
    }
    case GroupBy::Race: {
      std::map<std::string, std::vector<std::size_t>> split;
      for (std::size_t i = 0; i < matched.size(); ++i) {
        split[matched[i]->race.empty() ? std::string("Unknown") : matched[i]->race].push_back(i);
      }
      for (auto& [race, m] : split) {
        names.push_back(race);
        members.push_back(std::move(m));
      }
      break;
    }
  }

  for (std::size_t gidx = 0; gidx < names.size(); ++gidx) {
    for (Metric metric : all_metrics) {
      std::vector<double> values;
      for (std::size_t i : members[gidx]) {
        if (auto v = metric_value(*ordered[i], metric)) values.push_back(*v);
      }
      GroupStatRow row;
      row.group = names[gidx];
      row.metric = metric;
      row.stat = summarize(values);
      row.group_size = members[gidx].size();
      row.below_min = row.group_size < options.min_group_size;
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

/// Rows of groups large enough to analyse (e.g. race groups with enough
/// subjects).
inline std::vector<GroupStatRow> sufficient_groups(const GroupStats& stats) {
  std::vector<GroupStatRow> out;
  std::copy_if(stats.rows.begin(), stats.rows.end(), std::back_inserter(out),
               [](const GroupStatRow& r) { return !r.below_min; });
  return out;
}

// ---------------------------------------------------------------------------
// Correlations
// ---------------------------------------------------------------------------

struct MetricPair {
  Metric a;
  Metric b;
};

struct CorrelationEntry {
  Metric a = Metric::MuscleDensity2D;
  Metric b = Metric::MuscleDensity2D;
  /// Absent when fewer than two complete cases or a series is constant.
  std::optional<double> r;
  std::size_t n = 0;
};

/// 2D-vs-3D pairs of each metric followed by every pair of 2D metrics.
inline std::vector<MetricPair> default_metric_pairs() {
  std::vector<MetricPair> pairs{{Metric::MuscleDensity2D, Metric::MuscleDensity3D},
                                {Metric::VatSatRatio2D, Metric::VatSatRatio3D},
                                {Metric::MuscleArea2D, Metric::MuscleVolume3D}};
  const std::array<Metric, 4> flat{Metric::MuscleDensity2D, Metric::VatSatRatio2D, Metric::MuscleArea2D,
                                   Metric::Smi2D};
  for (std::size_t i = 0; i < flat.size(); ++i) {
    for (std::size_t j = i + 1; j < flat.size(); ++j) pairs.push_back({flat[i], flat[j]});
  }
  return pairs;
}

/// Pearson r for each requested pair over subjects that have both metrics.
inline std::vector<CorrelationEntry> correlation_matrix(std::span<const BodyCompResult> results,
                                                        std::span<const MetricPair> pairs) {
  const auto ordered = detail::sorted_by_subject(results);
  std::vector<CorrelationEntry> out;
  for (const MetricPair& p : pairs) {
    std::vector<double> xs, ys;
    for (const BodyCompResult* r : ordered) {
      const auto x = metric_value(*r, p.a);
      const auto y = metric_value(*r, p.b);
      if (x && y) {
        xs.push_back(*x);
        ys.push_back(*y);
      }
    }
    CorrelationEntry e;
    e.a = p.a;
    e.b = p.b;
    e.n = xs.size();
    if (e.n >= 2 && !detail::is_constant(xs) && !detail::is_constant(ys)) {
      e.r = pearson_r(xs, ys);
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace bodycomp
