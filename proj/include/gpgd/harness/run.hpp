#pragma once

#include "gpgd/contraction.hpp"
#include "gpgd/estimators.hpp"
#include "gpgd/harness/config.hpp"
#include "gpgd/harness/problem.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

//! @file run.hpp
//! One solver run on one problem instance: constants, step size, the run
//! itself and a contraction check against the theoretical factor.

namespace gpgd::harness {

//! Exact constants, available when G is linear and F is least squares.
struct OracleConstants
{
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> mu;
};

struct SolveSummary
{
  std::string status = "ok"; // "ok" | "diverged"
  std::string mode;
  int iterations = 0;
  double eta = 0.0;
  std::optional<double> final_gap;
  std::optional<double> final_dist;
  std::optional<double> fitted_rate;
  std::optional<double> theory_rate;          // factor the run is checked against
  std::optional<double> theory_rate_as_stated; // 2 - beta/alpha, informational
  std::string theory_note;                     // why theory_rate is absent
  std::optional<double> check_rho;             // theory_rate + check_tolerance
  int checked_steps = 0;
  std::optional<int> violations;
  std::optional<double> plateau_level;
  bool rateable = false;
  std::optional<OracleConstants> oracle;
  std::optional<RegularityEstimates> regularity;
  std::optional<double> gamma_delta; // gamma_hat * Delta_hat, reported next to epsilon
  double epsilon = 0.0;
  double proj_time_total_us = 0.0;
  double grad_time_total_us = 0.0;
};

inline io::json to_json(const SolveSummary& s)
{
  using io::json;
  using io::opt_json;
  json j{{"status", s.status},
         {"mode", s.mode},
         {"iterations", s.iterations},
         {"eta", s.eta},
         {"final_gap", opt_json(s.final_gap)},
         {"final_dist", opt_json(s.final_dist)},
         {"fitted_rate", opt_json(s.fitted_rate)},
         {"theory_rate", opt_json(s.theory_rate)},
         {"theory_rate_as_stated", opt_json(s.theory_rate_as_stated)},
         {"theory_note", s.theory_note},
         {"check_rho", opt_json(s.check_rho)},
         {"checked_steps", s.checked_steps},
         {"violations", s.violations ? json(*s.violations) : json(nullptr)},
         {"plateau_level", opt_json(s.plateau_level)},
         {"rateable", s.rateable},
         {"epsilon", s.epsilon},
         {"gamma_delta", opt_json(s.gamma_delta)},
         {"runtime", {{"proj_time_total_us", s.proj_time_total_us}, {"grad_time_total_us", s.grad_time_total_us}}}};
  j["oracle"] = s.oracle ? json{{"alpha", s.oracle->alpha}, {"beta", s.oracle->beta}, {"mu", opt_json(s.oracle->mu)}}
                         : json(nullptr);
  j["regularity"] = s.regularity ? io::to_json(*s.regularity) : json(nullptr);
  return j;
}

inline SolveSummary summary_from_json(const io::json& j)
{
  const std::string w = "summary";
  io::reject_unknown_keys(j, {"status", "mode", "iterations", "eta", "final_gap", "final_dist", "fitted_rate",
                              "theory_rate", "theory_rate_as_stated", "theory_note", "check_rho", "checked_steps",
                              "violations", "plateau_level", "rateable", "epsilon", "gamma_delta", "runtime",
                              "oracle", "regularity"},
                          w);
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  SolveSummary s;
  s.status = io::get<std::string>(j, "status", w);
  s.mode = io::get<std::string>(j, "mode", w);
  s.iterations = io::get<int>(j, "iterations", w);
  s.eta = io::get<double>(j, "eta", w);
  s.final_gap = opt("final_gap");
  s.final_dist = opt("final_dist");
  s.fitted_rate = opt("fitted_rate");
  s.theory_rate = opt("theory_rate");
  s.theory_rate_as_stated = opt("theory_rate_as_stated");
  s.theory_note = io::get<std::string>(j, "theory_note", w);
  s.check_rho = opt("check_rho");
  s.checked_steps = io::get<int>(j, "checked_steps", w);
  if (!j.at("violations").is_null()) s.violations = j["violations"].get<int>();
  s.plateau_level = opt("plateau_level");
  s.rateable = io::get<bool>(j, "rateable", w);
  s.epsilon = io::get<double>(j, "epsilon", w);
  s.gamma_delta = opt("gamma_delta");
  s.proj_time_total_us = j.at("runtime").at("proj_time_total_us").get<double>();
  s.grad_time_total_us = j.at("runtime").at("grad_time_total_us").get<double>();
  if (!j.at("oracle").is_null()) {
    OracleConstants o;
    o.alpha = j["oracle"].at("alpha").get<double>();
    o.beta = j["oracle"].at("beta").get<double>();
    if (!j["oracle"].at("mu").is_null()) o.mu = j["oracle"]["mu"].get<double>();
    s.oracle = o;
  }
  if (!j.at("regularity").is_null()) s.regularity = io::regularity_from_json(j["regularity"]);
  return s;
}

//! Exact RSC/RSS (and incoherence, for the myopic model) when G is linear and
//! F is least squares. For the myopic model the constraint subspace is
//! span(W) + span(B_S), S the support of nu*.
inline std::optional<OracleConstants> oracle_constants(const ProblemInstance& inst, SolverMode mode)
{
  if (!inst.generator.is_affine() || inst.meta.model != "linear") return std::nullopt;
  const Matrix& w = inst.generator.layers().front().weights;
  OracleConstants o;
  if (mode == SolverMode::myopic && inst.basis && !inst.nu_support.empty()) {
    const auto c = restricted_curvature(inst.a, minkowski_subspace(w, *inst.basis, inst.nu_support));
    o.alpha = c.lambda_min;
    o.beta = c.lambda_max;
    o.mu = subspace_incoherence(w, *inst.basis, inst.nu_support);
  } else {
    const auto c = restricted_curvature(inst.a, orthonormalize_columns(w));
    o.alpha = c.lambda_min;
    o.beta = c.lambda_max;
    if (mode == SolverMode::myopic) o.mu = 0.0;
  }
  return o;
}

inline ProjectionConfig resolve_projection(const ExperimentConfig& cfg, const GeneratorNetwork& g)
{
  ProjectionConfig p = cfg.projection;
  if (cfg.projection_auto)
    p.method = g.is_affine() ? ProjectionMethod::closed_form_linear : ProjectionMethod::latent_gd;
  return p;
}

//! Sampled regularity constants over the solver's constraint set.
inline RegularityEstimates estimate_regularity(const ProblemInstance& inst, SolverMode mode, int samples,
                                               std::uint64_t seed)
{
  const Objective f = inst.objective();
  ConstraintSampler sampler(inst.generator);
  const bool myopic = mode == SolverMode::myopic && inst.basis && inst.meta.l > 0;
  if (myopic) sampler.with_sparse(*inst.basis, inst.meta.l);

  RegularityEstimates r;
  r.num_samples = samples;
  r.seed = seed;
  const auto rr = estimate_rsc_rss(f, sampler, std::max(samples, 2), derive_seed(seed, 1));
  r.alpha_hat = rr.alpha;
  r.beta_hat = rr.beta;
  if (myopic) {
    ConstraintSampler range(inst.generator);
    r.mu_hat = estimate_incoherence(range, *inst.basis, inst.meta.l, std::max(samples, 1), derive_seed(seed, 2));
  }
  ConstraintSampler range(inst.generator);
  const auto dg = estimate_diameter_gamma(f, inst.x_star, range, std::clamp(samples, 1, 200), derive_seed(seed, 3));
  r.delta_hat = dg.delta;
  r.gamma_hat = dg.gamma;
  return r;
}

struct SolveOutcome
{
  SolveSummary summary;
  IterationTrace trace;
};

inline SolveOutcome run_solve(const ProblemInstance& inst, const ExperimentConfig& cfg)
{
  const SolverMode mode = cfg.solver.mode;
  if (mode == SolverMode::myopic) require_config(inst.basis.has_value(), "myopic mode requires a basis");

  const Objective f = inst.objective();
  const ProjectionConfig proj = resolve_projection(cfg, inst.generator);

  SolveSummary s;
  s.mode = to_string(mode);
  s.epsilon = proj.epsilon;
  s.oracle = oracle_constants(inst, mode);
  if (cfg.estimation.samples > 0) {
    s.regularity = estimate_regularity(inst, mode, cfg.estimation.samples, derive_seed(inst.meta.seed, 0xe5));
    if (s.regularity->gamma_hat) s.gamma_delta = *s.regularity->gamma_hat * s.regularity->delta_hat;
  }

  std::optional<double> alpha, beta, mu;
  if (s.oracle) {
    alpha = s.oracle->alpha;
    beta = s.oracle->beta;
    mu = s.oracle->mu;
  } else if (s.regularity) {
    alpha = s.regularity->alpha_hat;
    beta = s.regularity->beta_hat;
    mu = s.regularity->mu_hat;
  }

  if (cfg.solver.eta) s.eta = *cfg.solver.eta;
  else if (beta && *beta > 0.0) s.eta = 1.0 / *beta;
  else throw ConfigError("no step size: set solver.eta or enable estimation");

  if (alpha && beta && *alpha > 0.0) {
    if (mode == SolverMode::pgd) {
      s.theory_rate = pgd_rate(*alpha, *beta);
      s.theory_rate_as_stated = pgd_rate_as_stated(*alpha, *beta);
    } else if (mu) {
      const MyopicRate r = myopic_rate(*alpha, *beta, *mu);
      if (r.applicable) s.theory_rate = r.value;
      else s.theory_note = "myopic factor not applicable: " + r.reason;
    } else {
      s.theory_note = "incoherence unavailable";
    }
  } else {
    s.theory_note = "curvature constants unavailable";
  }

  SolverConfig sc;
  sc.eta = s.eta;
  sc.max_iters = cfg.solver.max_iters;
  sc.mode = mode;
  sc.sparsity = inst.meta.l;
  sc.stop_gap = cfg.solver.stop_gap;
  sc.seed = inst.meta.seed;

  IterationTrace trace;
  try {
    trace = mode == SolverMode::pgd
                ? epsilon_pgd(f, inst.generator, proj, sc, std::nullopt, inst.x_star)
                : myopic_pgd(f, inst.generator, proj, inst.basis ? &*inst.basis : nullptr, sc, inst.x_star);
  } catch (const DivergenceError& e) {
    s.status = "diverged";
    s.theory_note = e.what();
    trace = e.trace;
  }

  s.iterations = trace.iterations();
  if (!trace.records.empty()) {
    s.final_gap = trace.records.back().gap;
    s.final_dist = trace.records.back().dist_to_truth;
  }
  s.proj_time_total_us = trace.proj_time_us;
  s.grad_time_total_us = trace.grad_time_us;

  ContractionOptions opt;
  opt.cutoff = cfg.solver.cutoff;
  if (s.theory_rate) {
    s.check_rho = *s.theory_rate + cfg.solver.check_tolerance;
    opt.rho = *s.check_rho;
  }
  if (!trace.records.empty()) {
    const ContractionReport rep = contraction_report(trace, opt);
    s.fitted_rate = rep.fitted_rate;
    s.rateable = rep.rateable;
    s.plateau_level = rep.plateau_level;
    s.checked_steps = rep.checked_steps;
    if (s.theory_rate) s.violations = rep.violations;
  }
  return {std::move(s), std::move(trace)};
}

inline void write_outcome(const SolveOutcome& out, const std::filesystem::path& dir)
{
  io::write_file(dir / "trace.csv", io::trace_to_csv(out.trace));
  io::write_json(dir / "summary.json", to_json(out.summary));
}

} // namespace gpgd::harness
