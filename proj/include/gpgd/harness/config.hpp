#pragma once

#include "gpgd/generator.hpp"
#include "gpgd/io.hpp"
#include "gpgd/objective.hpp"
#include "gpgd/projection.hpp"
#include "gpgd/solver.hpp"

#include <optional>
#include <string>
#include <vector>

//! @file config.hpp
//! Experiment configuration and its JSON schema. Unknown keys are rejected at
//! every level. See docs/config.md for the full schema.

namespace gpgd::harness {

using io::json;

struct GeneratorSpec
{
  std::string type = "linear"; // "linear" | "random"
  bool orthonormal = true;     // linear: orthonormalize the Gaussian columns
  Index depth = 2;             // random
  std::vector<Index> widths{}; // random: d - 1 hidden widths
  Activation activation = Activation::relu();
  Activation output_activation = Activation::identity();
};

struct ProblemSpec
{
  Index n = 100;
  Index m = 40;
  Index k = 5;
  Index l = 0;
  double noise_level = 0.0; // ||e|| / ||A x*||
  GeneratorSpec generator;
  std::optional<std::string> basis; // "identity" | "random"
  std::string model = "linear";     // "linear" | "glm"
  GlmLink link = GlmLink::sigmoid;
};

struct SolverSpec
{
  SolverMode mode = SolverMode::pgd;
  std::optional<double> eta; // default 1/beta (exact oracle when available, else sampled)
  int max_iters = 200;
  std::optional<double> stop_gap;
  double check_tolerance = 0.05; // additive slack on the theoretical factor
  double cutoff = 1e-10;         // contraction checks stop below this gap
};

struct EstimationSpec
{
  int samples = 500;
};

struct SweepSpec
{
  std::vector<Index> m;
  std::vector<Index> l;
  std::vector<double> noise_level;
  int trials = 1;
  int jobs = 1;
};

struct ExperimentConfig
{
  ProblemSpec problem;
  ProjectionConfig projection;
  bool projection_auto = true; // pick closed-form-linear for affine G, latent-gd otherwise
  SolverSpec solver;
  EstimationSpec estimation;
  std::optional<SweepSpec> sweep;
  std::string output = "out";
  std::uint64_t seed = 0;

  void validate() const
  {
    const auto& p = problem;
    require_config(p.n >= 1 && p.m >= 1 && p.k >= 1, "problem: n, m, k must be positive");
    require_config(p.k <= p.n, "problem: k must not exceed n");
    require_config(p.l >= 0 && p.l <= p.n, "problem: l must lie in [0, n]");
    require_config(p.noise_level >= 0.0, "problem: noise_level must be nonnegative");
    require_config(p.generator.type == "linear" || p.generator.type == "random",
                   "problem.generator.type must be 'linear' or 'random'");
    if (p.generator.type == "random")
      require_config(static_cast<Index>(p.generator.widths.size()) == p.generator.depth - 1,
                     "problem.generator: widths must list depth - 1 hidden widths");
    require_config(!p.basis || *p.basis == "identity" || *p.basis == "random",
                   "problem.basis must be 'identity' or 'random'");
    require_config(p.model == "linear" || p.model == "glm", "problem.model must be 'linear' or 'glm'");
    projection.validate();
    require_config(solver.max_iters >= 1, "solver.max_iters must be positive");
    require_config(!solver.eta || *solver.eta > 0.0, "solver.eta must be positive");
    require_config(solver.check_tolerance >= 0.0 && solver.cutoff >= 0.0, "solver tolerances must be nonnegative");
    require_config(estimation.samples >= 0, "estimation.samples must be nonnegative");
    if (sweep) {
      require_config(!sweep->m.empty() && !sweep->l.empty() && !sweep->noise_level.empty(),
                     "sweep axes must be nonempty");
      require_config(sweep->trials >= 1, "sweep.trials must be at least 1");
      require_config(sweep->jobs >= 1, "sweep.jobs must be at least 1");
      for (Index m : sweep->m) require_config(m >= 1, "sweep.m entries must be positive");
      for (Index l : sweep->l) require_config(l >= 0 && l <= p.n, "sweep.l entries must lie in [0, n]");
      for (double e : sweep->noise_level) require_config(e >= 0.0, "sweep.noise_level entries must be nonnegative");
    }
  }
};

namespace detail {

inline Activation activation_from(const json& j, const char* name_key, const char* slope_key, Activation fallback,
                                  const std::string& where)
{
  if (!j.contains(name_key)) return fallback;
  std::optional<double> slope;
  if (j.contains(slope_key)) slope = io::get<double>(j, slope_key, where);
  return Activation::parse(io::get<std::string>(j, name_key, where), slope);
}

template <typename T>
std::vector<T> list_of(const json& j, const char* key, const std::string& where)
{
  if (!j.contains(key)) return {};
  if (!j.at(key).is_array()) throw ConfigError(where + ": '" + key + "' must be an array");
  return io::get<std::vector<T>>(j, key, where);
}

} // namespace detail

inline ExperimentConfig config_from_json(const json& j)
{
  io::reject_unknown_keys(j, {"problem", "projection", "solver", "estimation", "sweep", "output", "seed"}, "config");
  ExperimentConfig c;
  c.seed = io::get_seed(j, "seed", 0, "config");
  c.output = io::get_or<std::string>(j, "output", c.output, "config");

  if (j.contains("problem")) {
    const json& p = j["problem"];
    const std::string w = "problem";
    io::reject_unknown_keys(p, {"n", "m", "k", "l", "noise_level", "generator", "basis", "measurement"}, w);
    c.problem.n = io::get_or<Index>(p, "n", c.problem.n, w);
    c.problem.m = io::get_or<Index>(p, "m", c.problem.m, w);
    c.problem.k = io::get_or<Index>(p, "k", c.problem.k, w);
    c.problem.l = io::get_or<Index>(p, "l", c.problem.l, w);
    c.problem.noise_level = io::get_or<double>(p, "noise_level", c.problem.noise_level, w);
    if (p.contains("generator")) {
      const json& g = p["generator"];
      const std::string gw = w + ".generator";
      io::reject_unknown_keys(g, {"type", "orthonormal", "depth", "widths", "activation", "slope",
                                  "output_activation", "output_slope"},
                              gw);
      auto& gs = c.problem.generator;
      gs.type = io::get_or<std::string>(g, "type", gs.type, gw);
      gs.orthonormal = io::get_or<bool>(g, "orthonormal", gs.orthonormal, gw);
      gs.depth = io::get_or<Index>(g, "depth", gs.depth, gw);
      gs.widths = detail::list_of<Index>(g, "widths", gw);
      gs.activation = detail::activation_from(g, "activation", "slope", gs.activation, gw);
      gs.output_activation = detail::activation_from(g, "output_activation", "output_slope", gs.output_activation, gw);
    }
    if (p.contains("basis")) c.problem.basis = io::get<std::string>(p, "basis", w);
    if (p.contains("measurement")) {
      const json& mj = p["measurement"];
      io::reject_unknown_keys(mj, {"model", "link"}, w + ".measurement");
      c.problem.model = io::get_or<std::string>(mj, "model", c.problem.model, w + ".measurement");
      if (mj.contains("link")) c.problem.link = parse_link(io::get<std::string>(mj, "link", w + ".measurement"));
    }
  }

  if (j.contains("projection")) {
    const json& p = j["projection"];
    const std::string w = "projection";
    io::reject_unknown_keys(p, {"method", "epsilon", "restarts", "inner_iters", "inner_step", "grid_bounds",
                                "grid_resolution", "seed", "degrade"},
                            w);
    auto& pc = c.projection;
    const auto method = io::get_or<std::string>(p, "method", "auto", w);
    c.projection_auto = method == "auto";
    if (!c.projection_auto) pc.method = parse_projection_method(method);
    pc.epsilon = io::get_or<double>(p, "epsilon", pc.epsilon, w);
    pc.restarts = io::get_or<int>(p, "restarts", pc.restarts, w);
    pc.inner_iters = io::get_or<int>(p, "inner_iters", pc.inner_iters, w);
    if (p.contains("inner_step")) {
      const json& s = p["inner_step"];
      if (s.is_string()) {
        if (s.get<std::string>() != "backtracking") throw ConfigError(w + ": inner_step must be a number or 'backtracking'");
      } else {
        pc.inner_step = io::get<double>(p, "inner_step", w);
      }
    }
    if (p.contains("grid_bounds")) {
      const auto b = io::get<std::vector<double>>(p, "grid_bounds", w);
      if (b.size() != 2) throw ConfigError(w + ": grid_bounds must be [lower, upper]");
      pc.grid_lower = b[0];
      pc.grid_upper = b[1];
    }
    pc.grid_resolution = io::get_or<int>(p, "grid_resolution", pc.grid_resolution, w);
    pc.seed = io::get_seed(p, "seed", pc.seed, w);
    pc.degrade = io::get_or<bool>(p, "degrade", pc.degrade, w);
  }

  if (j.contains("solver")) {
    const json& s = j["solver"];
    const std::string w = "solver";
    io::reject_unknown_keys(s, {"mode", "eta", "max_iters", "stop_gap", "check_tolerance", "cutoff"}, w);
    if (s.contains("mode")) c.solver.mode = parse_solver_mode(io::get<std::string>(s, "mode", w));
    if (s.contains("eta") && !s["eta"].is_null()) c.solver.eta = io::get<double>(s, "eta", w);
    c.solver.max_iters = io::get_or<int>(s, "max_iters", c.solver.max_iters, w);
    if (s.contains("stop_gap") && !s["stop_gap"].is_null()) c.solver.stop_gap = io::get<double>(s, "stop_gap", w);
    c.solver.check_tolerance = io::get_or<double>(s, "check_tolerance", c.solver.check_tolerance, w);
    c.solver.cutoff = io::get_or<double>(s, "cutoff", c.solver.cutoff, w);
  }

  if (j.contains("estimation")) {
    io::reject_unknown_keys(j["estimation"], {"samples"}, "estimation");
    c.estimation.samples = io::get_or<int>(j["estimation"], "samples", c.estimation.samples, "estimation");
  }

  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    const std::string w = "sweep";
    io::reject_unknown_keys(s, {"m", "l", "noise_level", "trials", "jobs"}, w);
    SweepSpec sw;
    sw.m = s.contains("m") ? detail::list_of<Index>(s, "m", w) : std::vector<Index>{c.problem.m};
    sw.l = s.contains("l") ? detail::list_of<Index>(s, "l", w) : std::vector<Index>{c.problem.l};
    sw.noise_level = s.contains("noise_level") ? detail::list_of<double>(s, "noise_level", w)
                                               : std::vector<double>{c.problem.noise_level};
    sw.trials = io::get_or<int>(s, "trials", sw.trials, w);
    sw.jobs = io::get_or<int>(s, "jobs", sw.jobs, w);
    c.sweep = sw;
  }

  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& p) { return config_from_json(io::read_json(p)); }

inline json to_json(const ExperimentConfig& c)
{
  const auto& g = c.problem.generator;
  json gen{{"type", g.type}, {"orthonormal", g.orthonormal}, {"depth", g.depth}, {"widths", g.widths},
           {"activation", g.activation.name()}, {"output_activation", g.output_activation.name()}};
  if (g.activation.kind() == ActivationKind::leaky_relu) gen["slope"] = g.activation.slope();
  if (g.output_activation.kind() == ActivationKind::leaky_relu) gen["output_slope"] = g.output_activation.slope();

  json problem{{"n", c.problem.n},
               {"m", c.problem.m},
               {"k", c.problem.k},
               {"l", c.problem.l},
               {"noise_level", c.problem.noise_level},
               {"generator", gen},
               {"measurement", {{"model", c.problem.model}, {"link", to_string(c.problem.link)}}}};
  if (c.problem.basis) problem["basis"] = *c.problem.basis;

  const auto& p = c.projection;
  json proj{{"method", c.projection_auto ? std::string("auto") : to_string(p.method)},
            {"epsilon", p.epsilon},
            {"restarts", p.restarts},
            {"inner_iters", p.inner_iters},
            {"inner_step", p.inner_step ? json(*p.inner_step) : json("backtracking")},
            {"grid_bounds", {p.grid_lower, p.grid_upper}},
            {"grid_resolution", p.grid_resolution},
            {"seed", p.seed},
            {"degrade", p.degrade}};

  json solver{{"mode", to_string(c.solver.mode)},
              {"eta", c.solver.eta ? json(*c.solver.eta) : json(nullptr)},
              {"max_iters", c.solver.max_iters},
              {"stop_gap", c.solver.stop_gap ? json(*c.solver.stop_gap) : json(nullptr)},
              {"check_tolerance", c.solver.check_tolerance},
              {"cutoff", c.solver.cutoff}};

  json out{{"problem", problem},
           {"projection", proj},
           {"solver", solver},
           {"estimation", {{"samples", c.estimation.samples}}},
           {"output", c.output},
           {"seed", c.seed}};
  if (c.sweep)
    out["sweep"] = {{"m", c.sweep->m},
                    {"l", c.sweep->l},
                    {"noise_level", c.sweep->noise_level},
                    {"trials", c.sweep->trials},
                    {"jobs", c.sweep->jobs}};
  return out;
}

} // namespace gpgd::harness
