#pragma once

#include "gpgd/core.hpp"
#include "gpgd/solver.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

//! @file contraction.hpp
//! Checks of per-step contraction gap_{t+1} <= rho * gap_t + floor on a
//! recorded trace, geometric rate fitting, plateau detection, and the
//! predicted contraction factors.

namespace gpgd {

//------------------------------------------------------------------------------
// Theoretical factors

//! Single-block factor beta/alpha - 1; below 1 only when beta/alpha < 2.
inline double pgd_rate(double alpha, double beta) { return beta / alpha - 1.0; }

//! The competing form 2 - beta/alpha, reported alongside for comparison. It
//! is smaller than beta/alpha - 1 once beta/alpha > 1.5, and the one-step
//! argument does not deliver it, so nothing is checked against it.
inline double pgd_rate_as_stated(double alpha, double beta) { return 2.0 - beta / alpha; }

struct MyopicRate
{
  double value = 0.0;       // raw formula value
  double numerator = 0.0;   // 2 - (beta/alpha)(1 - 2.5 mu)/(1 - mu)
  double denominator = 0.0; // 1 - (beta/(2 alpha)) mu/(1 - mu)
  bool applicable = false;
  std::string reason;       // why not applicable
};

//! Myopic contraction factor
//!   (2 - (b/a)(1 - 2.5 mu)/(1 - mu)) / (1 - (b/(2a)) mu/(1 - mu)).
//! It is a valid bound only when the standing hypotheses hold
//! (1 <= b/a < 2, 0 <= mu < 1) and the denominator is positive (the final
//! rearrangement divides by it); otherwise `applicable` is false.
inline MyopicRate myopic_rate(double alpha, double beta, double mu)
{
  MyopicRate r;
  const double cond = beta / alpha;
  r.numerator = 2.0 - cond * (1.0 - 2.5 * mu) / (1.0 - mu);
  r.denominator = 1.0 - 0.5 * cond * mu / (1.0 - mu);
  r.value = r.numerator / r.denominator;
  if (!(alpha > 0.0) || !(beta >= alpha))
    r.reason = "requires 0 < alpha <= beta";
  else if (cond >= 2.0)
    r.reason = "beta/alpha = " + std::to_string(cond) + " >= 2";
  else if (!(mu >= 0.0 && mu < 1.0))
    r.reason = "mu outside [0, 1)";
  else if (r.denominator <= 0.0)
    r.reason = "nonpositive denominator";
  else if (r.value < 0.0)
    r.reason = "negative factor";
  else
    r.applicable = true;
  return r;
}

//------------------------------------------------------------------------------
// Fits

struct LinearFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

//! Ordinary least squares y = slope x + intercept, with R^2.
inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys)
{
  require(xs.size() == ys.size() && xs.size() >= 2, "linear_fit: need at least two paired points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  require(sxx > 0.0, "linear_fit: abscissae are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

//! First t with gap_t <= delta.
inline std::optional<int> iterations_to_gap(const IterationTrace& trace, double delta)
{
  for (const auto& r : trace.records)
    if (r.gap && *r.gap <= delta) return r.t;
  return std::nullopt;
}

//------------------------------------------------------------------------------
// Report

struct ContractionOptions
{
  double rho = 1.0;
  //! Additive slack in the per-step bound.
  double floor = 0.0;
  //! Steps starting from gap_t < cutoff are not checked or fitted.
  double cutoff = 0.0;
  int plateau_window = 5;
  double plateau_tolerance = 0.01;
};

struct ContractionReport
{
  std::vector<double> ratios; // gap_{t+1}/gap_t for every checked step
  int checked_steps = 0;
  int violations = 0;
  double violation_fraction = 0.0;
  double max_ratio = 0.0;
  //! Worst margin rho * gap_t + floor - gap_{t+1}, normalized by gap_t.
  double min_margin = std::numeric_limits<double>::infinity();
  std::optional<double> fitted_rate;
  int fit_points = 0;
  std::optional<int> plateau_start;
  std::optional<double> plateau_level;
  bool rateable = false; // at least 3 pre-plateau points
};

namespace detail {

inline double median(std::vector<double> v)
{
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

} // namespace detail

//! Analyzes a sequence of objective gaps. Only the leading run of finite,
//! strictly positive gaps is used. The plateau starts at the first t where the
//! gap fails to drop by plateau_tolerance over plateau_window steps; its level
//! is the median gap from there on. The rate is exp(slope) of a least-squares
//! fit of log gap over the pre-plateau points at or above the cutoff.
inline ContractionReport contraction_report(const std::vector<double>& gaps, const ContractionOptions& opt)
{
  ContractionReport rep;
  std::size_t usable = 0;
  while (usable < gaps.size() && std::isfinite(gaps[usable]) && gaps[usable] > 0.0) ++usable;

  for (std::size_t t = 0; t + 1 < usable; ++t) {
    if (gaps[t] < opt.cutoff) break;
    const double ratio = gaps[t + 1] / gaps[t];
    rep.ratios.push_back(ratio);
    ++rep.checked_steps;
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    const double margin = (opt.rho * gaps[t] + opt.floor - gaps[t + 1]) / gaps[t];
    rep.min_margin = std::min(rep.min_margin, margin);
    if (gaps[t + 1] > opt.rho * gaps[t] + opt.floor) ++rep.violations;
  }
  // A trailing zero gap after a positive one is a checked step (exact convergence).
  if (usable < gaps.size() && usable > 0 && gaps[usable] == 0.0 && gaps[usable - 1] >= opt.cutoff) {
    rep.ratios.push_back(0.0);
    ++rep.checked_steps;
    rep.min_margin = std::min(rep.min_margin, opt.rho + opt.floor / gaps[usable - 1]);
  }
  if (rep.checked_steps > 0) rep.violation_fraction = static_cast<double>(rep.violations) / rep.checked_steps;

  const std::size_t w = static_cast<std::size_t>(opt.plateau_window);
  for (std::size_t t = 0; t + w < usable; ++t) {
    if (gaps[t + w] > (1.0 - opt.plateau_tolerance) * gaps[t]) {
      rep.plateau_start = static_cast<int>(t);
      rep.plateau_level = detail::median(std::vector<double>(gaps.begin() + static_cast<std::ptrdiff_t>(t),
                                                             gaps.begin() + static_cast<std::ptrdiff_t>(usable)));
      break;
    }
  }

  const std::size_t fit_end = rep.plateau_start ? static_cast<std::size_t>(*rep.plateau_start) : usable;
  std::vector<double> ts, logs;
  for (std::size_t t = 0; t < fit_end && t < usable; ++t) {
    if (gaps[t] < opt.cutoff) break;
    ts.push_back(static_cast<double>(t));
    logs.push_back(std::log(gaps[t]));
  }
  rep.fit_points = static_cast<int>(ts.size());
  if (ts.size() >= 3) {
    rep.rateable = true;
    rep.fitted_rate = std::exp(linear_fit(ts, logs).slope);
  }
  return rep;
}

inline ContractionReport contraction_report(const IterationTrace& trace, const ContractionOptions& opt)
{
  for (const auto& r : trace.records)
    if (!r.gap) throw ContractError("contraction_report: trace has no gap values (x* unknown)");
  return contraction_report(trace.gaps(), opt);
}

} // namespace gpgd
