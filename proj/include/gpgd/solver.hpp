#pragma once

#include "gpgd/core.hpp"
#include "gpgd/generator.hpp"
#include "gpgd/objective.hpp"
#include "gpgd/projection.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <vector>

//! @file solver.hpp
//! Projected gradient descent with an approximate projection onto Range(G),
//! and the myopic block variant for signals x = G(z) + v with v sparse in a
//! basis B. Both record a full per-iteration trace.

namespace gpgd {

enum class SolverMode { pgd, myopic };

inline std::string to_string(SolverMode m) { return m == SolverMode::pgd ? "pgd" : "myopic"; }

inline SolverMode parse_solver_mode(const std::string& s)
{
  if (s == "pgd") return SolverMode::pgd;
  if (s == "myopic") return SolverMode::myopic;
  throw ConfigError("unknown solver mode '" + s + "'");
}

struct SolverConfig
{
  double eta = 1.0;
  int max_iters = 100;
  SolverMode mode = SolverMode::pgd;
  Index sparsity = 0;
  //! Stop once F(x_t) - F(x*) < stop_gap; only honored when x* is known.
  std::optional<double> stop_gap;
  std::uint64_t seed = 0;
  //! Abort when f_value exceeds this multiple of |F(x_0)|.
  double divergence_factor = 1e3;

  void validate() const
  {
    require_config(eta > 0.0 && std::isfinite(eta), "solver eta must be positive and finite");
    require_config(max_iters >= 1, "solver max_iters must be positive");
    require_config(sparsity >= 0, "solver sparsity must be nonnegative");
    require_config(!stop_gap || *stop_gap >= 0.0, "solver stop_gap must be nonnegative");
  }
};

struct IterationRecord
{
  int t = 0;
  double f_value = 0.0;
  std::optional<double> gap;
  std::optional<double> dist_to_truth;
  double proj_residual_sq = 0.0;
  double wall_time_us = 0.0;
};

struct IterationTrace
{
  std::vector<IterationRecord> records;
  Vector final_point;
  // Myopic mode only.
  std::optional<Vector> final_u;
  std::optional<Vector> final_v;
  std::optional<Vector> final_v_coeffs;
  //! Largest ||B^T v_t||_0 seen over the run (myopic mode).
  Index max_sparse_support = 0;

  double proj_time_us = 0.0;
  double grad_time_us = 0.0;

  int iterations() const { return records.empty() ? 0 : records.back().t; }

  std::vector<double> gaps() const
  {
    std::vector<double> out;
    for (const auto& r : records) out.push_back(r.gap.value_or(std::numeric_limits<double>::quiet_NaN()));
    return out;
  }
};

//! Raised when an iterate's objective is non-finite or blows up; carries the
//! trace up to the failure.
struct DivergenceError : Error
{
  DivergenceError(const std::string& what, IterationTrace partial) : Error(what), trace(std::move(partial)) {}
  IterationTrace trace;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double micros(Clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); }

class TraceRecorder
{
public:
  TraceRecorder(const Objective& f, const std::optional<Vector>& x_star, const SolverConfig& cfg)
      : f_(f), x_star_(x_star), cfg_(cfg), start_(Clock::now())
  {
    if (x_star_) f_star_ = f_.value(*x_star_);
  }

  //! Records iterate t; returns true when the early-stop gap is reached.
  bool record(int t, const Vector& x, double proj_residual_sq)
  {
    IterationRecord rec;
    rec.t = t;
    try {
      rec.f_value = f_.value(x);
    } catch (const NumericError& e) {
      throw DivergenceError(std::string("objective became non-finite at iteration ") + std::to_string(t) +
                                " (" + e.what() + "); the step size is likely too large",
                            trace);
    }
    if (!std::isfinite(rec.f_value))
      throw DivergenceError("objective became non-finite at iteration " + std::to_string(t), trace);
    if (t == 0) f0_ = rec.f_value;
    else if (f0_ != 0.0 && rec.f_value > cfg_.divergence_factor * std::abs(f0_))
      throw DivergenceError("objective exceeded " + std::to_string(cfg_.divergence_factor) +
                                " x its initial value at iteration " + std::to_string(t),
                            trace);
    if (x_star_) {
      rec.gap = rec.f_value - f_star_;
      rec.dist_to_truth = (x - *x_star_).norm();
    }
    rec.proj_residual_sq = proj_residual_sq;
    rec.wall_time_us = micros(Clock::now() - start_);
    trace.records.push_back(rec);
    return x_star_ && cfg_.stop_gap && *rec.gap < *cfg_.stop_gap;
  }

  IterationTrace trace;

private:
  const Objective& f_;
  const std::optional<Vector>& x_star_;
  const SolverConfig& cfg_;
  Clock::time_point start_;
  double f_star_ = 0.0;
  double f0_ = 0.0;
};

} // namespace detail

//! Fixed-step projected gradient descent: z_t = x_t - eta grad F(x_t),
//! x_{t+1} = P_G(z_t). Runs max_iters iterations unless the early-stop gap is
//! reached. Records t = 0..T.
inline IterationTrace epsilon_pgd(const Objective& f, const GeneratorNetwork& g, const ProjectionConfig& proj,
                                  const SolverConfig& cfg, std::optional<Vector> x0 = std::nullopt,
                                  const std::optional<Vector>& x_star = std::nullopt)
{
  cfg.validate();
  require_config(cfg.mode == SolverMode::pgd, "epsilon_pgd requires mode = pgd");
  require(f.dim() == g.output_dim(), "epsilon_pgd: objective dimension does not match generator output");
  if (x_star) require(x_star->size() == f.dim(), "epsilon_pgd: x_star has wrong length");

  Projector projector(g, proj);
  Vector x = x0 ? *x0 : Vector::Zero(f.dim());
  require(x.size() == f.dim(), "epsilon_pgd: x0 has wrong length");

  detail::TraceRecorder rec(f, x_star, cfg);
  if (rec.record(0, x, 0.0)) {
    rec.trace.final_point = x;
    return std::move(rec.trace);
  }
  for (int t = 0; t < cfg.max_iters; ++t) {
    auto t0 = detail::Clock::now();
    const Vector grad = f.gradient(x);
    auto t1 = detail::Clock::now();
    const ProjectionResult p = projector(x - cfg.eta * grad);
    auto t2 = detail::Clock::now();
    rec.trace.grad_time_us += detail::micros(t1 - t0);
    rec.trace.proj_time_us += detail::micros(t2 - t1);
    x = p.point;
    if (rec.record(t + 1, x, p.residual_sq)) break;
  }
  rec.trace.final_point = x;
  return std::move(rec.trace);
}

//! Myopic block PGD. Both blocks step along the single gradient at the
//! combined iterate:
//!   u_{t+1} = P_G(u_t - eta grad F(x_t))
//!   v_{t+1} = Thresh_{B,l}(v_t - eta grad F(x_t))
//!   x_{t+1} = u_{t+1} + v_{t+1}
//! starting from x_0 = u_0 = v_0 = 0. The sparse block is stored by its basis
//! coefficients, so ||B^T v_t||_0 <= l holds exactly.
inline IterationTrace myopic_pgd(const Objective& f, const GeneratorNetwork& g, const ProjectionConfig& proj,
                                 const OrthoBasis* basis, const SolverConfig& cfg,
                                 const std::optional<Vector>& x_star = std::nullopt)
{
  cfg.validate();
  require_config(cfg.mode == SolverMode::myopic, "myopic_pgd requires mode = myopic");
  require_config(basis != nullptr, "myopic_pgd requires an orthonormal basis");
  require(f.dim() == g.output_dim(), "myopic_pgd: objective dimension does not match generator output");
  require(basis->dim() == f.dim(), "myopic_pgd: basis dimension does not match signal dimension");
  require_config(cfg.sparsity <= f.dim(), "myopic_pgd: sparsity exceeds signal dimension");
  if (x_star) require(x_star->size() == f.dim(), "myopic_pgd: x_star has wrong length");

  Projector projector(g, proj);
  const Index n = f.dim();
  Vector u = Vector::Zero(n);
  Vector coeffs = Vector::Zero(n);
  Vector v = Vector::Zero(n);
  Vector x = Vector::Zero(n);

  detail::TraceRecorder rec(f, x_star, cfg);
  bool stop = rec.record(0, x, 0.0);
  for (int t = 0; t < cfg.max_iters && !stop; ++t) {
    auto t0 = detail::Clock::now();
    const Vector step = cfg.eta * f.gradient(x);
    auto t1 = detail::Clock::now();
    const ProjectionResult p = projector(u - step);
    auto t2 = detail::Clock::now();
    coeffs = hard_threshold_coefficients(*basis, v - step, cfg.sparsity);
    rec.trace.grad_time_us += detail::micros(t1 - t0);
    rec.trace.proj_time_us += detail::micros(t2 - t1);

    rec.trace.max_sparse_support = std::max(rec.trace.max_sparse_support, count_nonzero(coeffs));
    u = p.point;
    v = basis->synthesize(coeffs);
    x = u + v;
    stop = rec.record(t + 1, x, p.residual_sq);
  }
  rec.trace.final_point = x;
  rec.trace.final_u = u;
  rec.trace.final_v = v;
  rec.trace.final_v_coeffs = coeffs;
  return std::move(rec.trace);
}

} // namespace gpgd
