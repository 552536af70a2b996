#pragma once

#include "gpgd/harness/run.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <thread>
#include <vector>

//! @file sweep.hpp
//! Parameter sweeps over (m, l, noise level) x trials. Each trial gets its
//! own seed derived from (master seed, axis point, trial index) and its own
//! output directory; aggregation happens single-threaded afterwards.

namespace gpgd::harness {

struct AxisPoint
{
  Index m = 0;
  Index l = 0;
  double noise_level = 0.0;
};

struct TrialResult
{
  std::size_t point = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string status;
  std::optional<double> final_dist;
  std::optional<double> final_gap;
  std::optional<double> fitted_rate;
  std::optional<double> theory_rate;
  std::optional<int> violations;
  int iterations = 0;
};

struct PointSummary
{
  AxisPoint axis;
  int trials = 0;
  int ok = 0;
  double dist_q1 = 0, dist_median = 0, dist_q3 = 0;
  std::optional<double> rate_q1, rate_median, rate_q3;
};

struct SweepResults
{
  std::vector<AxisPoint> points;
  std::vector<TrialResult> trials; // ordered by (point, trial)
  std::vector<PointSummary> summaries;
};

//! Quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q)
{
  require(!v.empty(), "quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline std::vector<AxisPoint> axis_points(const SweepSpec& s)
{
  std::vector<AxisPoint> out;
  for (Index m : s.m)
    for (Index l : s.l)
      for (double e : s.noise_level) out.push_back({m, l, e});
  return out;
}

inline std::filesystem::path trial_dir(const std::filesystem::path& root, std::size_t point, int trial)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "point_%03zu/trial_%03d", point, trial);
  return root / "runs" / buf;
}

inline TrialResult run_trial(const ExperimentConfig& base, const AxisPoint& axis, std::size_t point, int trial,
                             const std::filesystem::path& root)
{
  TrialResult r;
  r.point = point;
  r.trial = trial;
  r.seed = derive_seed(base.seed, point, trial);
  ExperimentConfig cfg = base;
  cfg.problem.m = axis.m;
  cfg.problem.l = axis.l;
  cfg.problem.noise_level = axis.noise_level;
  const auto dir = trial_dir(root, point, trial);
  try {
    const ProblemInstance inst = gen_problem(cfg, r.seed);
    write_instance(inst, dir);
    const SolveOutcome out = run_solve(inst, cfg);
    write_outcome(out, dir);
    r.status = out.summary.status;
    r.final_dist = out.summary.final_dist;
    r.final_gap = out.summary.final_gap;
    r.fitted_rate = out.summary.fitted_rate;
    r.theory_rate = out.summary.theory_rate;
    r.violations = out.summary.violations;
    r.iterations = out.summary.iterations;
  } catch (const std::exception& e) {
    r.status = "error";
    io::write_file(dir / "error.txt", std::string(e.what()) + "\n");
  }
  return r;
}

inline std::string opt_cell(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); }

//! Per-trial rows; contains no timings so identical configs give identical bytes.
inline std::string results_csv(const SweepResults& res)
{
  std::string out = "m,l,noise_level,trial,seed,status,final_dist,final_gap,fitted_rate,theory_rate,violations,iterations\n";
  for (const auto& t : res.trials) {
    const AxisPoint& a = res.points[t.point];
    out += std::to_string(a.m) + ',' + std::to_string(a.l) + ',' + io::format_double(a.noise_level) + ',' +
           std::to_string(t.trial) + ',' + std::to_string(t.seed) + ',' + t.status + ',' + opt_cell(t.final_dist) +
           ',' + opt_cell(t.final_gap) + ',' + opt_cell(t.fitted_rate) + ',' + opt_cell(t.theory_rate) + ',' +
           (t.violations ? std::to_string(*t.violations) : std::string()) + ',' + std::to_string(t.iterations) + '\n';
  }
  return out;
}

inline std::string summary_csv(const SweepResults& res)
{
  std::string out = "m,l,noise_level,trials,ok,final_dist_q1,final_dist_median,final_dist_q3,"
                    "fitted_rate_q1,fitted_rate_median,fitted_rate_q3\n";
  for (const auto& s : res.summaries) {
    out += std::to_string(s.axis.m) + ',' + std::to_string(s.axis.l) + ',' + io::format_double(s.axis.noise_level) +
           ',' + std::to_string(s.trials) + ',' + std::to_string(s.ok) + ',';
    if (s.ok > 0)
      out += io::format_double(s.dist_q1) + ',' + io::format_double(s.dist_median) + ',' + io::format_double(s.dist_q3);
    else
      out += ",,";
    out += ',' + opt_cell(s.rate_q1) + ',' + opt_cell(s.rate_median) + ',' + opt_cell(s.rate_q3) + '\n';
  }
  return out;
}

inline std::string summary_table(const SweepResults& res)
{
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%6s %4s %10s %6s %4s %12s %12s %12s\n", "m", "l", "noise", "trials", "ok",
                "dist_med", "rate_med", "rate_iqr");
  out += buf;
  for (const auto& s : res.summaries) {
    char rate[32] = "-", iqr[32] = "-";
    if (s.rate_median) std::snprintf(rate, sizeof rate, "%.4f", *s.rate_median);
    if (s.rate_q1 && s.rate_q3) std::snprintf(iqr, sizeof iqr, "%.4f", *s.rate_q3 - *s.rate_q1);
    std::snprintf(buf, sizeof buf, "%6lld %4lld %10.3g %6d %4d %12.4e %12s %12s\n", static_cast<long long>(s.axis.m),
                  static_cast<long long>(s.axis.l), s.axis.noise_level, s.trials, s.ok,
                  s.ok ? s.dist_median : 0.0, rate, iqr);
    out += buf;
  }
  return out;
}

inline SweepResults aggregate(std::vector<AxisPoint> points, std::vector<TrialResult> trials)
{
  SweepResults res{std::move(points), std::move(trials), {}};
  for (std::size_t p = 0; p < res.points.size(); ++p) {
    PointSummary s;
    s.axis = res.points[p];
    std::vector<double> dists, rates;
    for (const auto& t : res.trials) {
      if (t.point != p) continue;
      ++s.trials;
      if (t.status != "ok") continue;
      ++s.ok;
      if (t.final_dist) dists.push_back(*t.final_dist);
      if (t.fitted_rate) rates.push_back(*t.fitted_rate);
    }
    if (!dists.empty()) {
      s.dist_q1 = quantile(dists, 0.25);
      s.dist_median = quantile(dists, 0.5);
      s.dist_q3 = quantile(dists, 0.75);
    }
    if (!rates.empty()) {
      s.rate_q1 = quantile(rates, 0.25);
      s.rate_median = quantile(rates, 0.5);
      s.rate_q3 = quantile(rates, 0.75);
    }
    res.summaries.push_back(s);
  }
  return res;
}

//! Runs every (axis point, trial) and writes sweep_results.csv,
//! sweep_summary.csv and sweep_table.txt under `root`.
inline SweepResults run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& root)
{
  cfg.validate();
  require_config(cfg.sweep.has_value(), "config has no 'sweep' section");
  const SweepSpec& sw = *cfg.sweep;
  const auto points = axis_points(sw);

  struct Job
  {
    std::size_t point;
    int trial;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < points.size(); ++p)
    for (int t = 0; t < sw.trials; ++t) jobs.push_back({p, t});

  std::vector<TrialResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      results[i] = run_trial(cfg, points[jobs[i].point], jobs[i].point, jobs[i].trial, root);
  };
  const int nthreads = std::max(1, std::min<int>(sw.jobs, static_cast<int>(jobs.size())));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResults res = aggregate(points, std::move(results));
  io::write_file(root / "sweep_results.csv", results_csv(res));
  io::write_file(root / "sweep_summary.csv", summary_csv(res));
  io::write_file(root / "sweep_table.txt", summary_table(res));
  return res;
}

} // namespace gpgd::harness
