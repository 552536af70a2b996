#pragma once

#include "gpgd/contraction.hpp"
#include "gpgd/harness/run.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

//! @file report.hpp
//! Plot-ready data and a pass/fail listing of every contraction check, rebuilt
//! from the run directories' summary.json and trace.csv. Output depends only
//! on file contents (no timings, sorted run order), so it is byte-stable.

namespace gpgd::harness {

struct RunRecord
{
  std::string name; // run directory relative to the results root
  SolveSummary summary;
  std::vector<IterationRecord> records;
};

struct ReportStats
{
  int runs = 0;
  int passed = 0;
  int failed = 0;
  int unrateable = 0;
  int unchecked = 0;
};

inline std::vector<RunRecord> collect_runs(const std::filesystem::path& root)
{
  namespace fs = std::filesystem;
  require_config(fs::is_directory(root), "report: '" + root.string() + "' is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "summary.json") dirs.push_back(entry.path().parent_path());
  std::sort(dirs.begin(), dirs.end());

  std::vector<RunRecord> runs;
  for (const auto& d : dirs) {
    RunRecord r;
    r.name = fs::relative(d, root).generic_string();
    if (r.name.empty() || r.name == ".") r.name = d.filename().generic_string();
    r.summary = summary_from_json(io::read_json(d / "summary.json"));
    if (fs::exists(d / "trace.csv")) r.records = io::trace_records_from_csv(io::read_file(d / "trace.csv"));
    runs.push_back(std::move(r));
  }
  return runs;
}

//! Writes gap_vs_t.tsv, rate_scatter.tsv and report.txt into `out`.
inline ReportStats emit_report(const std::vector<RunRecord>& runs, const std::filesystem::path& out,
                               double cutoff = 1e-10)
{
  require(!runs.empty(), "emit_report: no runs found");
  ReportStats stats;
  std::string gaps = "x\tseries\tvalue\n";
  std::string scatter = "x\tseries\tvalue\n";
  std::string text = "contraction report\n";
  char buf[512];

  for (const auto& run : runs) {
    ++stats.runs;
    std::vector<double> g;
    for (const auto& rec : run.records) {
      g.push_back(rec.gap.value_or(std::numeric_limits<double>::quiet_NaN()));
      if (rec.gap && *rec.gap > 0.0)
        gaps += std::to_string(rec.t) + '\t' + run.name + '\t' + io::format_double(std::log10(*rec.gap)) + '\n';
    }
    if (run.summary.theory_rate && run.summary.fitted_rate)
      scatter += io::format_double(*run.summary.theory_rate) + '\t' + run.name + '\t' +
                 io::format_double(*run.summary.fitted_rate) + '\n';

    const int iterations = run.records.empty() ? 0 : run.records.back().t;
    std::string verdict;
    if (iterations < 3) {
      ++stats.unrateable;
      std::snprintf(buf, sizeof buf, "%s: UNRATEABLE (%d iterations < 3)\n", run.name.c_str(), iterations);
      text += buf;
      continue;
    }
    if (!run.summary.check_rho || std::any_of(g.begin(), g.end(), [](double v) { return std::isnan(v); })) {
      ++stats.unchecked;
      std::snprintf(buf, sizeof buf, "%s: NO BOUND (%s)\n", run.name.c_str(),
                    run.summary.theory_note.empty() ? "no gap values" : run.summary.theory_note.c_str());
      text += buf;
      continue;
    }
    ContractionOptions opt;
    opt.rho = *run.summary.check_rho;
    opt.cutoff = cutoff;
    const ContractionReport rep = contraction_report(g, opt);
    const bool pass = rep.violations == 0;
    ++(pass ? stats.passed : stats.failed);
    const std::string bound = run.summary.mode == "pgd" ? "single-block" : "myopic";
    std::snprintf(buf, sizeof buf,
                  "%s: %s bound gap[t+1] <= %.6f gap[t]: %s (checked %d steps, violations %d, min margin %.6e, "
                  "max ratio %.6f)\n",
                  run.name.c_str(), bound.c_str(), opt.rho, pass ? "PASS" : "FAIL", rep.checked_steps, rep.violations,
                  rep.checked_steps ? rep.min_margin : 0.0, rep.max_ratio);
    text += buf;
  }
  std::snprintf(buf, sizeof buf, "runs %d: passed %d, failed %d, unrateable %d, no bound %d\n", stats.runs,
                stats.passed, stats.failed, stats.unrateable, stats.unchecked);
  text += buf;

  io::write_file(out / "gap_vs_t.tsv", gaps);
  io::write_file(out / "rate_scatter.tsv", scatter);
  io::write_file(out / "report.txt", text);
  return stats;
}

inline ReportStats emit_report(const std::filesystem::path& results_root, const std::filesystem::path& out,
                               double cutoff = 1e-10)
{
  return emit_report(collect_runs(results_root), out, cutoff);
}

} // namespace gpgd::harness
