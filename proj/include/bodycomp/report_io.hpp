#pragma once

// JSON and CSV renderings of results, evaluation reports and cohort tables.
// CSV output is UTF-8 with '\n' line endings and numbers printed "%.6g";
// absent values are empty fields.

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bodycomp/cohort.hpp"
#include "bodycomp/core.hpp"
#include "bodycomp/error.hpp"
#include "bodycomp/eval.hpp"
#include "bodycomp/format.hpp"

namespace bodycomp {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace detail {
inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
inline nlohmann::json summary_json(const SummaryStat& s) {
  return {{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}};
}
}  // namespace detail

// ---------------------------------------------------------------------------
// BodyCompResult
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const BodyCompResult& r) {
  return {{"kind", "bodycomp_result"},
          {"subject_id", r.subject_id},
          {"policy", std::string(to_string(r.policy))},
          {"l3_slice", r.region_2d},
          {"t12_l4_lo", r.region_3d_lo},
          {"t12_l4_hi", r.region_3d_hi},
          {"t12_l4_single_slice", r.region_3d_single_slice},
          {"muscle_density_2d_hu", r.muscle_density_2d},
          {"muscle_density_3d_hu", r.muscle_density_3d},
          {"vat_sat_ratio_2d", r.vat_sat_ratio_2d},
          {"vat_sat_ratio_3d", r.vat_sat_ratio_3d},
          {"muscle_area_2d_cm2", r.muscle_area_2d},
          {"muscle_volume_3d_cm3", r.muscle_volume_3d},
          {"smi_2d_cm2_m2", detail::optional_json(r.smi_2d)}};
}

inline BodyCompResult result_from_json(const nlohmann::json& j) {
  try {
    if (j.value("kind", "") != "bodycomp_result") {
      throw Error(ErrorCode::FormatError, "not a bodycomp_result document");
    }
    BodyCompResult r;
    r.subject_id = j.at("subject_id").get<std::string>();
    r.policy = parse_merge_policy(j.at("policy").get<std::string>());
    r.region_2d = j.at("l3_slice").get<std::size_t>();
    r.region_3d_lo = j.at("t12_l4_lo").get<std::size_t>();
    r.region_3d_hi = j.at("t12_l4_hi").get<std::size_t>();
    r.region_3d_single_slice = j.value("t12_l4_single_slice", false);
    r.muscle_density_2d = j.at("muscle_density_2d_hu").get<double>();
    r.muscle_density_3d = j.at("muscle_density_3d_hu").get<double>();
    r.vat_sat_ratio_2d = j.at("vat_sat_ratio_2d").get<double>();
    r.vat_sat_ratio_3d = j.at("vat_sat_ratio_3d").get<double>();
    r.muscle_area_2d = j.at("muscle_area_2d_cm2").get<double>();
    r.muscle_volume_3d = j.at("muscle_volume_3d_cm3").get<double>();
    if (j.contains("smi_2d_cm2_m2") && !j["smi_2d_cm2_m2"].is_null()) {
      r.smi_2d = j["smi_2d_cm2_m2"].get<double>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad result document: ") + e.what());
  }
}

inline constexpr std::string_view kResultsCsvHeader =
    "subject_id,policy,l3_slice,t12_l4_lo,t12_l4_hi,muscle_density_2d_hu,muscle_density_3d_hu,"
    "vat_sat_ratio_2d,vat_sat_ratio_3d,muscle_area_2d_cm2,muscle_volume_3d_cm3,smi_2d_cm2_m2";

inline void write_results_csv(std::span<const BodyCompResult> results, std::ostream& out) {
  out << kResultsCsvHeader << '\n';
  for (const auto& r : results) {
    out << csv_field(r.subject_id) << ',' << to_string(r.policy) << ',' << r.region_2d << ',' << r.region_3d_lo
        << ',' << r.region_3d_hi << ',' << format_number(r.muscle_density_2d) << ','
        << format_number(r.muscle_density_3d) << ',' << format_number(r.vat_sat_ratio_2d) << ','
        << format_number(r.vat_sat_ratio_3d) << ',' << format_number(r.muscle_area_2d) << ','
        << format_number(r.muscle_volume_3d) << ',' << format_number(r.smi_2d) << '\n';
  }
}

// ---------------------------------------------------------------------------
// EvalReport
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : report.cases) {
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& s : c.scores) {
      const SummaryStat slices = summarize(s.slice_dice);
      scores.push_back({{"label", s.label},
                        {"region", std::string(to_string(s.region))},
                        {"dice", s.dice.value},
                        {"dice_degenerate", s.dice.degenerate},
                        {"slice_dice", detail::summary_json(slices)},
                        {"degenerate_slices", s.degenerate_slices},
                        {"gt_measure", s.gt_measure},
                        {"pred_measure", s.pred_measure},
                        {"measure_unit", s.region == EvalRegion::L3 ? "cm2" : "cm3"}});
    }
    nlohmann::json errors = nullptr;
    if (c.metric_errors) {
      const MetricErrors& e = *c.metric_errors;
      errors = {{"muscle_density_2d_pct", e.muscle_density_2d_pct},
                {"muscle_density_3d_pct", e.muscle_density_3d_pct},
                {"vat_sat_ratio_2d_pct", detail::optional_json(e.vat_sat_ratio_2d_pct)},
                {"vat_sat_ratio_3d_pct", detail::optional_json(e.vat_sat_ratio_3d_pct)},
                {"muscle_area_2d_pct", detail::optional_json(e.muscle_area_2d_pct)},
                {"muscle_volume_3d_pct", detail::optional_json(e.muscle_volume_3d_pct)},
                {"smi_2d_pct", detail::optional_json(e.smi_2d_pct)}};
    }
    cases.push_back({{"case_id", c.case_id},
                     {"scores", scores},
                     {"metric_errors", errors},
                     {"metric_errors_note", c.metric_errors_note}});
  }

  nlohmann::json summary = nlohmann::json::array();
  for (const auto& row : report.summary) {
    nlohmann::json mrae_json = nullptr;
    if (row.mrae) mrae_json = {{"value", row.mrae->value}, {"terms", row.mrae->terms}, {"skipped", row.mrae->skipped}};
    summary.push_back({{"label", row.label},
                       {"region", std::string(to_string(row.region))},
                       {"n_cases", row.n_cases},
                       {"dice_per_volume", detail::summary_json(row.dice_volume)},
                       {"dice_per_slice", detail::summary_json(row.dice_slice)},
                       {"degenerate_volumes", row.degenerate_volumes},
                       {"mrae", mrae_json},
                       {"r_squared", detail::optional_json(row.r_squared)}});
  }

  nlohmann::json metric_errors = nlohmann::json::array();
  for (const auto& [name, stat] : report.metric_error_summary) {
    metric_errors.push_back({{"metric", name}, {"n", stat.n}, {"mean", stat.mean}, {"sd", stat.sd}});
  }

  return {{"policy", std::string(to_string(report.policy))},
          {"case_count", report.case_count()},
          {"cases", cases},
          {"summary", summary},
          {"metric_errors", metric_errors}};
}

inline void write_eval_csv(const EvalReport& report, std::ostream& out) {
  out << "label,region,n_cases,dice_volume_mean,dice_volume_sd,dice_slice_mean,dice_slice_sd,slices_scored,"
         "degenerate_volumes,mrae,mrae_skipped,r_squared\n";
  for (const auto& row : report.summary) {
    out << row.label << ',' << to_string(row.region) << ',' << row.n_cases << ','
        << format_number(row.dice_volume.mean) << ',' << format_number(row.dice_volume.sd) << ','
        << (row.dice_slice.n ? format_number(row.dice_slice.mean) : "") << ','
        << (row.dice_slice.n ? format_number(row.dice_slice.sd) : "") << ',' << row.dice_slice.n << ','
        << row.degenerate_volumes << ',' << (row.mrae ? format_number(row.mrae->value) : "") << ','
        << (row.mrae ? std::to_string(row.mrae->skipped) : "") << ',' << format_number(row.r_squared) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Cohort tables
// ---------------------------------------------------------------------------

inline void write_group_stats_csv(std::span<const GroupStats> tables, std::ostream& out) {
  out << "group_by,group,metric,count,mean,sd,group_size,below_min\n";
  for (const auto& table : tables) {
    for (const auto& row : table.rows) {
      out << to_string(table.by) << ',' << csv_field(row.group) << ',' << to_string(row.metric) << ','
          << row.stat.n << ',' << (row.stat.n ? format_number(row.stat.mean) : "") << ','
          << (row.stat.n ? format_number(row.stat.sd) : "") << ',' << row.group_size << ','
          << (row.below_min ? 1 : 0) << '\n';
    }
  }
}

inline void write_correlations_csv(std::span<const CorrelationEntry> entries, std::ostream& out) {
  out << "metric_a,metric_b,r,n\n";
  for (const auto& e : entries) {
    out << to_string(e.a) << ',' << to_string(e.b) << ',' << format_number(e.r) << ',' << e.n << '\n';
  }
}

}  // namespace bodycomp
