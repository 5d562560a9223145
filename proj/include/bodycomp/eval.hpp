#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bodycomp/core.hpp"
#include "bodycomp/error.hpp"
#include "bodycomp/metrics.hpp"
#include "bodycomp/region.hpp"
#include "bodycomp/stats.hpp"

namespace bodycomp {

// ---------------------------------------------------------------------------
// Scalar metrics
// ---------------------------------------------------------------------------

struct DiceResult {
  double value = 1.0;
  /// Both masks empty; value is reported as 1.0.
  bool degenerate = false;
};

inline DiceResult dice_from_counts(std::size_t size_a, std::size_t size_b, std::size_t overlap) {
  if (size_a + size_b == 0) return {1.0, true};
  return {2.0 * static_cast<double>(overlap) / static_cast<double>(size_a + size_b), false};
}

/// Dice overlap of two binary masks; any nonzero element is foreground.
inline DiceResult dice(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "dice: masks differ in size");
  }
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool in_a = a[i] != 0;
    const bool in_b = b[i] != 0;
    na += in_a;
    nb += in_b;
    both += in_a && in_b;
  }
  return dice_from_counts(na, nb, both);
}

struct MraeResult {
  double value = 0.0;
  /// Terms with zero ground truth and nonzero prediction, left out of the mean.
  std::size_t skipped = 0;
  /// Terms that entered the mean.
  std::size_t terms = 0;
};

/// Mean of |truth_i - pred_i| / |truth_i|. A 0/0 term counts as zero error;
/// a zero truth with nonzero prediction is skipped and tallied, or raises
/// ZeroGroundTruth when `strict`.
inline MraeResult mrae(std::span<const double> truth, std::span<const double> pred, bool strict = false) {
  if (truth.size() != pred.size()) {
    throw Error(ErrorCode::DimensionMismatch, "mrae: series differ in length");
  }
  if (truth.empty()) throw Error(ErrorCode::EmptyInput, "mrae: empty input");

  MraeResult r;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0.0) {
      if (pred[i] == 0.0) {
        ++r.terms;
        continue;
      }
      if (strict) throw Error(ErrorCode::ZeroGroundTruth, "mrae: zero ground truth at index " + std::to_string(i));
      ++r.skipped;
      continue;
    }
    sum += std::abs(truth[i] - pred[i]) / std::abs(truth[i]);
    ++r.terms;
  }
  if (r.terms == 0) {
    throw Error(ErrorCode::ZeroGroundTruth, "mrae: every term has zero ground truth");
  }
  r.value = sum / static_cast<double>(r.terms);
  return r;
}

namespace detail {
inline bool is_constant(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs.front(); });
}

inline void require_pair(std::span<const double> x, std::span<const double> y, std::string_view what) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": series differ in length");
  }
  if (x.size() < 2) {
    throw Error(ErrorCode::EmptyInput, std::string(what) + ": need at least two points");
  }
}

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double v : xs) s += v;
  return s / static_cast<double>(xs.size());
}
}  // namespace detail

/// Coefficient of determination 1 - SS_res / SS_tot.
inline double r_squared(std::span<const double> obs, std::span<const double> pred) {
  detail::require_pair(obs, pred, "r_squared");
  if (detail::is_constant(obs)) {
    throw Error(ErrorCode::ConstantSeries, "r_squared: observations are constant");
  }
  const double m = detail::mean(obs);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    ss_res += (obs[i] - pred[i]) * (obs[i] - pred[i]);
    ss_tot += (obs[i] - m) * (obs[i] - m);
  }
  return 1.0 - ss_res / ss_tot;
}

/// Pearson r = Cov(X, Y) / (sigma_X sigma_Y), population moments.
inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  detail::require_pair(x, y, "pearson_r");
  if (detail::is_constant(x) || detail::is_constant(y)) {
    throw Error(ErrorCode::ConstantSeries, "pearson_r: constant series");
  }
  const double mx = detail::mean(x);
  const double my = detail::mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

/// Width of the normal muscle attenuation range, -29 to +150 HU.
inline constexpr double kMuscleDensityRangeHU = 150.0 - (-29.0);

/// Muscle-density error expressed as a percentage of the normal range width.
inline double muscle_density_error_pct(double err_hu) {
  if (!(err_hu >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "muscle density error must be >= 0");
  }
  return err_hu / kMuscleDensityRangeHU * 100.0;
}

/// |other - reference| / |reference| in percent.
inline double metric_pct_difference(double reference, double other) {
  if (reference == 0.0) {
    throw Error(ErrorCode::ZeroReference, "percentage difference against a zero reference");
  }
  return std::abs(other - reference) / std::abs(reference) * 100.0;
}

// ---------------------------------------------------------------------------
// Mask evaluation
// ---------------------------------------------------------------------------

enum class EvalRegion { L3, T12L4, All };

inline std::string_view to_string(EvalRegion r) {
  switch (r) {
    case EvalRegion::L3: return "L3";
    case EvalRegion::T12L4: return "T12-L4";
    case EvalRegion::All: return "all";
  }
  return "all";
}

inline EvalRegion parse_eval_region(std::string_view s) {
  if (s == "l3" || s == "L3") return EvalRegion::L3;
  if (s == "t12l4" || s == "T12-L4" || s == "t12-l4") return EvalRegion::T12L4;
  if (s == "all") return EvalRegion::All;
  throw Error(ErrorCode::InvalidArgument, "unknown region '" + std::string(s) + "' (l3|t12l4|all)");
}

/// Overlap and quantity agreement for one label within one region of a case.
struct LabelRegionScore {
  std::string label;
  EvalRegion region = EvalRegion::All;
  DiceResult dice;                  // pooled over every voxel of the region
  std::vector<double> slice_dice;   // per slice, degenerate slices left out
  std::size_t degenerate_slices = 0;
  double gt_measure = 0.0;    // cm^2 on L3, cm^3 otherwise
  double pred_measure = 0.0;
};

/// Prediction-vs-truth differences of the body-composition metrics. Muscle
/// density is normalised by the 179 HU range; the rest are percentage
/// differences against the ground-truth value (absent when that is zero).
struct MetricErrors {
  double muscle_density_2d_pct = 0.0;
  double muscle_density_3d_pct = 0.0;
  std::optional<double> vat_sat_ratio_2d_pct;
  std::optional<double> vat_sat_ratio_3d_pct;
  std::optional<double> muscle_area_2d_pct;
  std::optional<double> muscle_volume_3d_pct;
  std::optional<double> smi_2d_pct;
};

struct CaseEvaluation {
  std::string case_id;
  std::vector<LabelRegionScore> scores;
  std::optional<MetricErrors> metric_errors;
  /// Why `metric_errors` is absent, if it is.
  std::string metric_errors_note;
};

struct EvalSummaryRow {
  std::string label;
  EvalRegion region = EvalRegion::All;
  std::size_t n_cases = 0;
  SummaryStat dice_volume;  // mean over per-case volume Dice
  SummaryStat dice_slice;   // pooled over every non-degenerate slice
  std::size_t degenerate_volumes = 0;
  std::optional<MraeResult> mrae;
  std::optional<double> r_squared;
};

struct EvalReport {
  MergePolicy policy = MergePolicy::MuscularFatAsMuscle;
  std::vector<CaseEvaluation> cases;
  std::vector<EvalSummaryRow> summary;
  std::vector<std::pair<std::string, SummaryStat>> metric_error_summary;

  [[nodiscard]] std::size_t case_count() const noexcept { return cases.size(); }
};

struct EvalOptions {
  MergePolicy policy = MergePolicy::MuscularFatAsMuscle;
  /// Empty selects L3, T12-L4 and all slices when vertebrae are supplied,
  /// otherwise all slices only.
  std::vector<EvalRegion> regions;
  std::optional<double> height_m;
  std::string case_id = "case";
};

namespace detail {

inline std::vector<std::pair<std::string, TissueClass>> evaluated_labels(MergePolicy policy) {
  std::vector<std::pair<std::string, TissueClass>> labels{
      {std::string(tissue::muscle), TissueClass::Muscle},
      {std::string(tissue::sat), TissueClass::SAT},
      {std::string(tissue::vat), TissueClass::VAT}};
  if (policy == MergePolicy::Separate) {
    labels.emplace_back(std::string(tissue::muscular_fat), TissueClass::MuscularFat);
  }
  return labels;
}

inline void score_label(const LabelVolume& gt, const TissueClassifier& gt_class, const LabelVolume& pred,
                        const TissueClassifier& pred_class, TissueClass target,
                        const MeasurementRegion& region, LabelRegionScore& out) {
  const Geometry& g = gt.geometry();
  const auto [lo, hi] = region.bounds(g.nz());
  const bool single = region.kind == MeasurementRegion::Kind::SingleSlice;
  std::size_t total_a = 0, total_b = 0, total_both = 0;
  double weighted_a = 0.0, weighted_b = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    const auto a = gt.slice(k);
    const auto b = pred.slice(k);
    std::size_t na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool in_a = gt_class(a[i]) == target;
      const bool in_b = pred_class(b[i]) == target;
      na += in_a;
      nb += in_b;
      both += in_a && in_b;
    }
    const DiceResult d = dice_from_counts(na, nb, both);
    if (d.degenerate) {
      ++out.degenerate_slices;
    } else {
      out.slice_dice.push_back(d.value);
    }
    total_a += na;
    total_b += nb;
    total_both += both;
    const double weight = single ? 1.0 : g.slice_thickness_mm(k);
    weighted_a += static_cast<double>(na) * weight;
    weighted_b += static_cast<double>(nb) * weight;
  }
  out.dice = dice_from_counts(total_a, total_b, total_both);
  const double scale = single ? g.pixel_area_cm2() : g.pixel_area_cm2() / 10.0;
  out.gt_measure = weighted_a * scale;
  out.pred_measure = weighted_b * scale;
}

inline std::optional<double> pct_or_none(double reference, double other) {
  if (reference == 0.0) return std::nullopt;
  return metric_pct_difference(reference, other);
}

}  // namespace detail

/// Scores one prediction against its ground truth.
inline CaseEvaluation evaluate_case(const LabelVolume& gt, const LabelVolume& pred, const VoxelVolume& hu,
                                    const LabelVolume* vertebrae, const EvalOptions& options) {
  detail::require_hu(hu);
  require_same_grid(gt.geometry(), pred.geometry(), "prediction mask");
  require_same_grid(gt.geometry(), hu.geometry(), "CT volume");
  if (vertebrae) require_same_grid(gt.geometry(), vertebrae->geometry(), "vertebra mask");

  std::vector<EvalRegion> regions = options.regions;
  if (regions.empty()) {
    regions = vertebrae ? std::vector<EvalRegion>{EvalRegion::L3, EvalRegion::T12L4, EvalRegion::All}
                        : std::vector<EvalRegion>{EvalRegion::All};
  }

  const TissueClassifier gt_class(gt.label_map(), options.policy);
  const TissueClassifier pred_class(pred.label_map(), options.policy);

  CaseEvaluation result;
  result.case_id = options.case_id;
  for (EvalRegion which : regions) {
    MeasurementRegion region;
    switch (which) {
      case EvalRegion::L3:
        if (!vertebrae) throw Error(ErrorCode::VertebraNotFound, "L3 region requires a vertebra mask");
        region = MeasurementRegion::single_slice(largest_label_slice(*vertebrae, vertebra_label("L3")));
        break;
      case EvalRegion::T12L4:
        if (!vertebrae) throw Error(ErrorCode::VertebraNotFound, "T12-L4 region requires a vertebra mask");
        region = region_t12_l4(*vertebrae).region;
        break;
      case EvalRegion::All:
        region = MeasurementRegion::all_slices();
        break;
    }
    for (const auto& [name, target] : detail::evaluated_labels(options.policy)) {
      LabelRegionScore score;
      score.label = name;
      score.region = which;
      detail::score_label(gt, gt_class, pred, pred_class, target, region, score);
      result.scores.push_back(std::move(score));
    }
  }

  if (!vertebrae) {
    result.metric_errors_note = "no vertebra mask";
    return result;
  }
  try {
    SubjectRecord subject;
    subject.subject_id = options.case_id;
    subject.height_m = options.height_m;
    const BodyCompResult ref = measure_subject(hu, gt, *vertebrae, subject, options.policy);
    const BodyCompResult got = measure_subject(hu, pred, *vertebrae, subject, options.policy);
    MetricErrors e;
    e.muscle_density_2d_pct = muscle_density_error_pct(std::abs(got.muscle_density_2d - ref.muscle_density_2d));
    e.muscle_density_3d_pct = muscle_density_error_pct(std::abs(got.muscle_density_3d - ref.muscle_density_3d));
    e.vat_sat_ratio_2d_pct = detail::pct_or_none(ref.vat_sat_ratio_2d, got.vat_sat_ratio_2d);
    e.vat_sat_ratio_3d_pct = detail::pct_or_none(ref.vat_sat_ratio_3d, got.vat_sat_ratio_3d);
    e.muscle_area_2d_pct = detail::pct_or_none(ref.muscle_area_2d, got.muscle_area_2d);
    e.muscle_volume_3d_pct = detail::pct_or_none(ref.muscle_volume_3d, got.muscle_volume_3d);
    if (ref.smi_2d && got.smi_2d) e.smi_2d_pct = detail::pct_or_none(*ref.smi_2d, *got.smi_2d);
    result.metric_errors = e;
  } catch (const Error& err) {
    result.metric_errors_note = err.what();
  }
  return result;
}

/// Aggregates per-case scores into summary rows (mean/SD of Dice per
/// volume and per slice, MRAE and R^2 of the per-case quantities).
inline EvalReport build_eval_report(std::vector<CaseEvaluation> cases, MergePolicy policy) {
  EvalReport report;
  report.policy = policy;
  report.cases = std::move(cases);

  std::vector<std::pair<std::string, EvalRegion>> keys;
  std::map<std::pair<std::string, int>, std::vector<const LabelRegionScore*>> grouped;
  for (const auto& c : report.cases) {
    for (const auto& s : c.scores) {
      auto key = std::make_pair(s.label, static_cast<int>(s.region));
      auto& bucket = grouped[key];
      if (bucket.empty()) keys.emplace_back(s.label, s.region);
      bucket.push_back(&s);
    }
  }

  for (const auto& [label, region] : keys) {
    const auto& bucket = grouped[{label, static_cast<int>(region)}];
    EvalSummaryRow row;
    row.label = label;
    row.region = region;
    row.n_cases = bucket.size();
    std::vector<double> volume_dice, slice_dice, truth, predicted;
    for (const LabelRegionScore* s : bucket) {
      volume_dice.push_back(s->dice.value);
      row.degenerate_volumes += s->dice.degenerate;
      slice_dice.insert(slice_dice.end(), s->slice_dice.begin(), s->slice_dice.end());
      truth.push_back(s->gt_measure);
      predicted.push_back(s->pred_measure);
    }
    row.dice_volume = summarize(volume_dice);
    row.dice_slice = summarize(slice_dice);
    try {
      row.mrae = mrae(truth, predicted);
    } catch (const Error&) {
    }
    if (truth.size() >= 2 && !detail::is_constant(truth)) {
      row.r_squared = r_squared(truth, predicted);
    }
    report.summary.push_back(std::move(row));
  }

  std::vector<std::pair<std::string, std::vector<double>>> errors{
      {"muscle_density_2d_pct", {}}, {"muscle_density_3d_pct", {}}, {"vat_sat_ratio_2d_pct", {}},
      {"vat_sat_ratio_3d_pct", {}},  {"muscle_area_2d_pct", {}},    {"muscle_volume_3d_pct", {}},
      {"smi_2d_pct", {}}};
  for (const auto& c : report.cases) {
    if (!c.metric_errors) continue;
    const MetricErrors& e = *c.metric_errors;
    const std::optional<double> values[] = {e.muscle_density_2d_pct, e.muscle_density_3d_pct,
                                            e.vat_sat_ratio_2d_pct,  e.vat_sat_ratio_3d_pct,
                                            e.muscle_area_2d_pct,    e.muscle_volume_3d_pct,
                                            e.smi_2d_pct};
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (values[i]) errors[i].second.push_back(*values[i]);
    }
  }
  for (auto& [name, values] : errors) {
    report.metric_error_summary.emplace_back(name, summarize(values));
  }
  return report;
}

/// Evaluates a single case and wraps it in a one-case report.
inline EvalReport evaluate_masks(const LabelVolume& gt, const LabelVolume& pred, const VoxelVolume& hu,
                                 const LabelVolume* vertebrae, const EvalOptions& options) {
  std::vector<CaseEvaluation> cases;
  cases.push_back(evaluate_case(gt, pred, hu, vertebrae, options));
  return build_eval_report(std::move(cases), options.policy);
}

}  // namespace bodycomp
