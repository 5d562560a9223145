#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>

#include "bodycomp/bodycomp.hpp"

namespace fs = std::filesystem;

namespace bodycomp::cli {
namespace {

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

/// Calls f(i) for i in [0, n) on up to `jobs` threads. f must not throw.
template <typename F>
void parallel_for(std::size_t n, std::size_t jobs, F&& f) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

std::size_t default_jobs() {
  if (const char* env = std::getenv("BODYCOMP_JOBS")) {
    std::size_t v = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size() && v >= 1) return v;
  }
  return 1;
}

/// Re-raises library errors with the offending file in the message.
template <typename F>
auto with_file(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

VoxelVolume load_hu(const fs::path& path) {
  return with_file(path, [&] { return to_hu(read_ct_volume(path)); });
}

LabelVolume load_labels(const fs::path& path, LabelKind kind) {
  return with_file(path, [&] { return read_label_volume(path, kind); });
}

std::string file_stem_id(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    out += ok ? c : '_';
  }
  return out.empty() ? "subject" : out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

/// CSV with a header row; returns rows as column-name -> value maps.
std::vector<std::unordered_map<std::string, std::string>> read_manifest(const fs::path& path,
                                                                        const std::vector<std::string>& required) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumn, "manifest is empty");
  const auto header = detail::split_csv_line(line);
  for (const auto& name : required) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw Error(ErrorCode::MissingColumn, "manifest lacks column '" + name + "'");
    }
  }
  std::vector<std::unordered_map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    std::unordered_map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = i < fields.size() ? fields[i] : "";
    rows.push_back(std::move(row));
  }
  return rows;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------
// measure
// ---------------------------------------------------------------------------

struct MeasureArgs {
  std::string ct, tissue, vertebrae, manifest, cohort, policy = "muscle", out = ".", subject_id;
  std::size_t jobs = 1;
};

struct MeasureItem {
  std::string subject_id;  // may be empty until the CT header is read
  fs::path ct, tissue, vertebrae;
};

int cmd_measure(const MeasureArgs& a, std::ostream& out, std::ostream& err) {
  MergePolicy policy;
  try {
    policy = parse_merge_policy(a.policy);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitInvalidInvocation;
  }

  std::vector<MeasureItem> items;
  try {
    if (!a.manifest.empty()) {
      const fs::path base = fs::path(a.manifest).parent_path();
      for (auto& row : read_manifest(a.manifest, {"subject_id", "ct", "tissue", "vertebrae"})) {
        items.push_back({row["subject_id"], resolve(base, row["ct"]), resolve(base, row["tissue"]),
                         resolve(base, row["vertebrae"])});
      }
    } else {
      if (a.ct.empty() || a.tissue.empty() || a.vertebrae.empty()) {
        err << "measure: give --ct, --tissue and --vertebrae, or --manifest\n";
        return kExitInvalidInvocation;
      }
      items.push_back({a.subject_id, a.ct, a.tissue, a.vertebrae});
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitInvalidInvocation;
  }

  std::unordered_map<std::string, SubjectRecord> cohort;
  if (!a.cohort.empty()) {
    try {
      for (auto& r : read_cohort_csv(fs::path(a.cohort))) cohort.emplace(r.subject_id, std::move(r));
    } catch (const Error& e) {
      err << a.cohort << ": " << e.what() << '\n';
      return kExitInvalidInvocation;
    }
  }

  std::vector<std::optional<BodyCompResult>> results(items.size());
  std::vector<std::string> failures(items.size());
  std::vector<std::string> notes(items.size());

  parallel_for(items.size(), a.jobs, [&](std::size_t i) {
    const MeasureItem& item = items[i];
    std::string id = item.subject_id;
    try {
      VoxelVolume hu = load_hu(item.ct);
      if (id.empty()) id = hu.subject_id().value_or(item.ct.stem().string());
      const LabelVolume tissue = load_labels(item.tissue, LabelKind::Tissue);
      const LabelVolume vertebrae = load_labels(item.vertebrae, LabelKind::Vertebra);
      SubjectRecord subject;
      subject.subject_id = id;
      if (!cohort.empty()) {
        if (auto it = cohort.find(id); it != cohort.end()) {
          subject = it->second;
        } else {
          notes[i] = "subject " + id + ": not in cohort CSV, SMI left blank";
        }
      }
      BodyCompResult r = with_file(item.vertebrae, [&] { return measure_subject(hu, tissue, vertebrae, subject, policy); });
      results[i] = std::move(r);
    } catch (const std::exception& e) {
      failures[i] = "subject " + (id.empty() ? item.ct.string() : id) + ": " + e.what();
    }
  });

  // Duplicate ids would overwrite each other's JSON; the later one fails.
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (results[i] && !seen.insert(results[i]->subject_id).second) {
      failures[i] = "subject " + results[i]->subject_id + ": duplicate subject id in batch";
      results[i].reset();
    }
  }

  std::vector<BodyCompResult> ok;
  try {
    fs::create_directories(a.out);
    for (const auto& r : results) {
      if (!r) continue;
      write_text(fs::path(a.out) / (file_stem_id(r->subject_id) + ".json"), to_json(*r).dump(2) + "\n");
      ok.push_back(*r);
    }
    std::ostringstream csv;
    write_results_csv(ok, csv);
    write_text(fs::path(a.out) / "results.csv", csv.str());
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitPartialFailure;
  }

  std::size_t failed = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!notes[i].empty()) err << "warning: " << notes[i] << '\n';
    if (!failures[i].empty()) {
      err << "error: " << failures[i] << '\n';
      ++failed;
    }
  }
  out << "measured " << ok.size() << " of " << items.size() << " subjects\n";
  return failed == 0 ? kExitOk : kExitPartialFailure;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string gt, pred, ct, vertebrae, manifest, regions, policy = "muscle", out = ".", case_id = "case";
  std::optional<double> height_m;
  std::size_t jobs = 1;
};

struct EvalItem {
  std::string case_id;
  fs::path gt, pred, ct, vertebrae;
  std::optional<double> height_m;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  EvalOptions base;
  std::vector<EvalItem> items;
  try {
    base.policy = parse_merge_policy(a.policy);
    for (const auto& r : split_list(a.regions)) base.regions.push_back(parse_eval_region(r));
    if (!a.manifest.empty()) {
      const fs::path dir = fs::path(a.manifest).parent_path();
      for (auto& row : read_manifest(a.manifest, {"case_id", "gt", "pred", "ct"})) {
        EvalItem item{row["case_id"], resolve(dir, row["gt"]), resolve(dir, row["pred"]), resolve(dir, row["ct"]),
                      resolve(dir, row["vertebrae"]), std::nullopt};
        if (!row["height_m"].empty()) item.height_m = detail::parse_real(row["height_m"], "manifest height_m");
        items.push_back(std::move(item));
      }
    } else {
      if (a.gt.empty() || a.pred.empty() || a.ct.empty()) {
        err << "evaluate: give --gt, --pred and --ct, or --manifest\n";
        return kExitInvalidInvocation;
      }
      items.push_back({a.case_id, a.gt, a.pred, a.ct, a.vertebrae, a.height_m});
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitInvalidInvocation;
  }

  std::vector<std::optional<CaseEvaluation>> cases(items.size());
  std::vector<std::string> failures(items.size());
  parallel_for(items.size(), a.jobs, [&](std::size_t i) {
    const EvalItem& item = items[i];
    try {
      const LabelVolume gt = load_labels(item.gt, LabelKind::Tissue);
      const LabelVolume pred = load_labels(item.pred, LabelKind::Tissue);
      const VoxelVolume hu = load_hu(item.ct);
      std::optional<LabelVolume> vertebrae;
      if (!item.vertebrae.empty()) vertebrae = load_labels(item.vertebrae, LabelKind::Vertebra);
      EvalOptions options = base;
      options.case_id = item.case_id;
      options.height_m = item.height_m;
      cases[i] = evaluate_case(gt, pred, hu, vertebrae ? &*vertebrae : nullptr, options);
    } catch (const std::exception& e) {
      failures[i] = "case " + item.case_id + ": " + e.what();
    }
  });

  std::vector<CaseEvaluation> done;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (cases[i]) done.push_back(std::move(*cases[i]));
    if (!failures[i].empty()) {
      err << "error: " << failures[i] << '\n';
      ++failed;
    }
  }
  if (done.empty()) return kExitPartialFailure;

  const EvalReport report = build_eval_report(std::move(done), base.policy);
  try {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "eval.json", to_json(report).dump(2) + "\n");
    std::ostringstream csv;
    write_eval_csv(report, csv);
    write_text(fs::path(a.out) / "eval.csv", csv.str());
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitPartialFailure;
  }
  out << "evaluated " << report.case_count() << " of " << items.size() << " cases\n";
  return failed == 0 ? kExitOk : kExitPartialFailure;
}

// ---------------------------------------------------------------------------
// select-slice
// ---------------------------------------------------------------------------

int cmd_select_slice(const std::string& vertebrae_path, const std::string& level, std::ostream& out,
                     std::ostream& err) {
  try {
    const LabelVolume vertebrae = load_labels(vertebrae_path, LabelKind::Vertebra);
    if (level == "T12-L4" || level == "t12l4") {
      const RangeSelection range = region_t12_l4(vertebrae);
      out << "level=T12-L4 z_lo=" << range.region.z_lo << " z_hi=" << range.region.z_hi << '\n';
      if (range.single_slice) err << "warning: T12 and L4 maxima share slice " << range.region.z_lo << '\n';
      return kExitOk;
    }
    const std::string name = vertebra_label(level);
    const std::size_t k = largest_label_slice(vertebrae, name);
    out << "level=" << level << " slice=" << k << " area_cm2=" << format_number(label_area_per_slice(vertebrae, name)[k])
        << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitPartialFailure;
  }
}

// ---------------------------------------------------------------------------
// postprocess
// ---------------------------------------------------------------------------

std::size_t count_code(const LabelVolume& v, std::uint8_t code) {
  return static_cast<std::size_t>(std::count(v.codes().begin(), v.codes().end(), code));
}

int cmd_sat_skin(const std::string& tissue_path, const std::string& ct_path, const std::string& out_path,
                 std::ostream& out, std::ostream& err) {
  try {
    const LabelVolume tissue = load_labels(tissue_path, LabelKind::Tissue);
    const VoxelVolume hu = load_hu(ct_path);
    const LabelVolume grown = dilate_sat_to_skin(tissue, hu);
    const std::uint8_t sat = tissue.code_of(tissue::sat);
    with_file(out_path, [&] { write_volume(grown, fs::path(out_path)); return 0; });
    out << "sat pixels added: " << count_code(grown, sat) - count_code(tissue, sat) << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitPartialFailure;
  }
}

int cmd_mf_filter(const std::string& ct_path, const std::string& roi_path, const std::string& roi_labels,
                  const std::string& out_path, std::ostream& out, std::ostream& err) {
  try {
    const VoxelVolume hu = load_hu(ct_path);
    const LabelVolume roi = load_labels(roi_path, LabelKind::Tissue);
    std::vector<std::uint8_t> codes;
    for (const auto& name : split_list(roi_labels)) codes.push_back(roi.code_of(name));
    const LabelVolume mf = muscular_fat_candidates(hu, roi, codes);
    with_file(out_path, [&] { write_volume(mf, fs::path(out_path)); return 0; });
    out << "muscular fat candidate pixels: " << count_code(mf, kCandidateCode) << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitPartialFailure;
  }
}

// ---------------------------------------------------------------------------
// cohort
// ---------------------------------------------------------------------------

struct CohortArgs {
  std::string results, demographics, out, group_by = "age_bin,sex,race", pairs;
  std::size_t min_group = 20, age_bins = 6, age_min_count = 20;
};

int cmd_cohort(const CohortArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<GroupBy> groupings;
  std::vector<MetricPair> pairs;
  try {
    for (const auto& g : split_list(a.group_by)) groupings.push_back(parse_group_by(g));
    if (a.pairs.empty()) {
      pairs = default_metric_pairs();
    } else {
      for (const auto& p : split_list(a.pairs)) {
        const auto colon = p.find(':');
        if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "pair '" + p + "' is not a:b");
        pairs.push_back({parse_metric(p.substr(0, colon)), parse_metric(p.substr(colon + 1))});
      }
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitInvalidInvocation;
  }

  try {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.results)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<BodyCompResult> results;
    for (const auto& f : files) {
      std::ifstream in(f);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception&) {
        continue;
      }
      if (!j.is_object() || j.value("kind", "") != "bodycomp_result") continue;
      results.push_back(with_file(f, [&] { return result_from_json(j); }));
    }
    if (results.empty()) {
      err << "error: no result documents in '" << a.results << "'\n";
      return kExitPartialFailure;
    }
    const auto records = read_cohort_csv(fs::path(a.demographics));

    GroupStatsOptions options;
    options.min_group_size = a.min_group;
    options.age_bin_count = a.age_bins;
    options.age_bin_min_count = a.age_min_count;
    std::vector<GroupStats> tables;
    for (GroupBy by : groupings) {
      tables.push_back(group_stats(results, records, by, options));
      if (tables.back().binning && tables.back().binning->reduced) {
        err << "warning: age bins: " << tables.back().binning->warning << '\n';
      }
    }
    const auto correlations = correlation_matrix(results, pairs);

    const fs::path dir = a.out.empty() ? fs::path(a.results) : fs::path(a.out);
    fs::create_directories(dir);
    std::ostringstream groups_csv, corr_csv;
    write_group_stats_csv(tables, groups_csv);
    write_correlations_csv(correlations, corr_csv);
    write_text(dir / "group_stats.csv", groups_csv.str());
    write_text(dir / "correlations.csv", corr_csv.str());
    out << "cohort of " << results.size() << " subjects written to " << dir.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitPartialFailure;
  }
}

// ---------------------------------------------------------------------------
// phantom
// ---------------------------------------------------------------------------

struct PhantomArgs {
  std::string out_dir = ".", omit;
  std::vector<double> spacing{0.8, 0.8, 2.5};
  PhantomSpec spec;
};

int cmd_phantom(PhantomArgs a, std::ostream& out, std::ostream& err) {
  try {
    if (a.spacing.size() != 3) throw Error(ErrorCode::InvalidArgument, "--spacing needs three values");
    a.spec.spacing_mm = {a.spacing[0], a.spacing[1], a.spacing[2]};
    for (const auto& level : split_list(a.omit)) {
      if (level == "T12") a.spec.include_t12 = false;
      else if (level == "L3") a.spec.include_l3 = false;
      else if (level == "L4") a.spec.include_l4 = false;
      else if (level == "SAT") a.spec.include_sat = false;
      else throw Error(ErrorCode::InvalidArgument, "cannot omit '" + level + "' (T12|L3|L4|SAT)");
    }
    const Phantom p = make_phantom(a.spec);
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    write_volume(p.ct, dir / "ct.bcv");
    write_volume(p.tissue, dir / "tissue.bcv");
    write_volume(p.vertebrae, dir / "vertebrae.bcv");
    out << "phantom " << a.spec.subject_id << " written to " << dir.string() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidArgument ? kExitInvalidInvocation : kExitPartialFailure;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Body composition quantification from CT segmentation masks", "bodycomp"};
  app.require_subcommand(1);

  const std::size_t env_jobs = default_jobs();

  MeasureArgs measure;
  measure.jobs = env_jobs;
  auto* m = app.add_subcommand("measure", "Measure muscle density, VAT/SAT ratio, muscle area/volume and SMI");
  m->add_option("--ct", measure.ct, "Raw CT volume (.bcv)");
  m->add_option("--tissue", measure.tissue, "Tissue label volume (.bcv)");
  m->add_option("--vertebrae", measure.vertebrae, "Vertebra label volume (.bcv)");
  m->add_option("--manifest", measure.manifest, "CSV with subject_id,ct,tissue,vertebrae");
  m->add_option("--cohort", measure.cohort, "Demographics CSV (supplies height for SMI)");
  m->add_option("--policy", measure.policy, "Muscular fat merge: muscle|sat|vat|separate");
  m->add_option("--subject-id", measure.subject_id, "Subject id for single-volume runs");
  m->add_option("--out", measure.out, "Output directory");
  m->add_option("--jobs", measure.jobs, "Worker threads (default $BODYCOMP_JOBS or 1)")->check(CLI::PositiveNumber);

  EvaluateArgs evaluate;
  evaluate.jobs = env_jobs;
  auto* e = app.add_subcommand("evaluate", "Compare predicted tissue masks with ground truth");
  e->add_option("--gt", evaluate.gt, "Ground-truth tissue labels (.bcv)");
  e->add_option("--pred", evaluate.pred, "Predicted tissue labels (.bcv)");
  e->add_option("--ct", evaluate.ct, "Raw CT volume (.bcv)");
  e->add_option("--vertebrae", evaluate.vertebrae, "Vertebra label volume (.bcv)");
  e->add_option("--manifest", evaluate.manifest, "CSV with case_id,gt,pred,ct[,vertebrae,height_m]");
  e->add_option("--regions", evaluate.regions, "Comma list of l3,t12l4,all");
  e->add_option("--policy", evaluate.policy, "Muscular fat merge: muscle|sat|vat|separate");
  e->add_option("--height", evaluate.height_m, "Height in metres, enables the SMI error");
  e->add_option("--case-id", evaluate.case_id, "Case id for single-case runs");
  e->add_option("--out", evaluate.out, "Output directory");
  e->add_option("--jobs", evaluate.jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string select_vertebrae, select_level = "L3";
  auto* s = app.add_subcommand("select-slice", "Print the largest-area slice of a vertebra level");
  s->add_option("--vertebrae", select_vertebrae, "Vertebra label volume (.bcv)")->required();
  s->add_option("--level", select_level, "Vertebra level (e.g. L3) or T12-L4");

  auto* post = app.add_subcommand("postprocess", "Mask post-processing");
  post->require_subcommand(1);
  std::string sk_tissue, sk_ct, sk_out;
  auto* sk = post->add_subcommand("sat-skin", "Grow SAT to the skin boundary");
  sk->add_option("--tissue", sk_tissue, "Tissue label volume (.bcv)")->required();
  sk->add_option("--ct", sk_ct, "Raw CT volume (.bcv)")->required();
  sk->add_option("--out", sk_out, "Output tissue label volume (.bcv)")->required();
  std::string mf_ct, mf_roi, mf_labels, mf_out;
  auto* mf = post->add_subcommand("mf-filter", "Muscular fat candidates inside a region of interest");
  mf->add_option("--ct", mf_ct, "Raw CT volume (.bcv)")->required();
  mf->add_option("--roi", mf_roi, "Label volume defining the region of interest (.bcv)")->required();
  mf->add_option("--roi-labels", mf_labels, "Comma list of label names forming the ROI (default: all nonzero)");
  mf->add_option("--out", mf_out, "Output candidate mask (.bcv)")->required();

  CohortArgs cohort;
  auto* c = app.add_subcommand("cohort", "Demographic group statistics and metric correlations");
  c->add_option("--results", cohort.results, "Directory of per-subject result JSON files")->required();
  c->add_option("--demographics", cohort.demographics, "Cohort CSV")->required();
  c->add_option("--out", cohort.out, "Output directory (default: the results directory)");
  c->add_option("--group-by", cohort.group_by, "Comma list of age_bin,sex,race");
  c->add_option("--pairs", cohort.pairs, "Comma list of metric_a:metric_b (default: built-in set)");
  c->add_option("--min-group", cohort.min_group, "Groups smaller than this are flagged");
  c->add_option("--age-bins", cohort.age_bins, "Number of age bins")->check(CLI::PositiveNumber);
  c->add_option("--age-min-count", cohort.age_min_count, "Minimum subjects per age bin");

  PhantomArgs phantom;
  auto* p = app.add_subcommand("phantom", "Write a synthetic CT/tissue/vertebra triple");
  p->add_option("--out-dir", phantom.out_dir, "Output directory");
  p->add_option("--nx", phantom.spec.nx)->check(CLI::PositiveNumber);
  p->add_option("--ny", phantom.spec.ny)->check(CLI::PositiveNumber);
  p->add_option("--nz", phantom.spec.nz)->check(CLI::PositiveNumber);
  p->add_option("--spacing", phantom.spacing, "sx sy sz in mm")->expected(3)->delimiter(',');
  p->add_option("--t12", phantom.spec.t12_slice, "Peak slice of T12");
  p->add_option("--l3", phantom.spec.l3_slice, "Peak slice of L3");
  p->add_option("--l4", phantom.spec.l4_slice, "Peak slice of L4");
  p->add_option("--vertebra-extent", phantom.spec.vertebra_half_extent, "Slices labelled either side of a peak");
  p->add_option("--omit", phantom.omit, "Comma list of T12,L3,L4,SAT to leave out");
  p->add_option("--subject-id", phantom.spec.subject_id);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error, out, err);
    return code == 0 ? kExitOk : kExitInvalidInvocation;
  }

  if (m->parsed()) return cmd_measure(measure, out, err);
  if (e->parsed()) return cmd_evaluate(evaluate, out, err);
  if (s->parsed()) return cmd_select_slice(select_vertebrae, select_level, out, err);
  if (sk->parsed()) return cmd_sat_skin(sk_tissue, sk_ct, sk_out, out, err);
  if (mf->parsed()) return cmd_mf_filter(mf_ct, mf_roi, mf_labels, mf_out, out, err);
  if (c->parsed()) return cmd_cohort(cohort, out, err);
  if (p->parsed()) return cmd_phantom(phantom, out, err);
  return kExitInvalidInvocation;
}

}  // namespace bodycomp::cli
