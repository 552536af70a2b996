// Command-line harness: generate problems, run solvers, sweep parameters,
// estimate regularity constants and emit contraction reports.
//
// Exit codes: 0 success, 1 unexpected error, 2 configuration error,
// 3 solver divergence.

#include "gpgd/harness/report.hpp"
#include "gpgd/harness/sweep.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace gpgd;
using namespace gpgd::harness;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDiverged = 3;

struct Globals
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig load(const Globals& g)
{
  ExperimentConfig cfg = g.config.empty() ? config_from_json(io::json::object()) : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output = g.out;
  return cfg;
}

ProblemInstance instance_for(const ExperimentConfig& cfg, const std::string& instance_dir)
{
  if (!instance_dir.empty()) return read_instance(instance_dir);
  return gen_problem(cfg, cfg.seed);
}

void print_summary(const SolveSummary& s)
{
  std::cout << "status: " << s.status << "\n"
            << "iterations: " << s.iterations << "\n"
            << "eta: " << s.eta << "\n";
  if (s.final_gap) std::cout << "final gap: " << *s.final_gap << "\n";
  if (s.final_dist) std::cout << "final distance: " << *s.final_dist << "\n";
  if (s.fitted_rate) std::cout << "fitted rate: " << *s.fitted_rate << "\n";
  if (s.theory_rate) std::cout << "theory rate: " << *s.theory_rate << "\n";
  else if (!s.theory_note.empty()) std::cout << "theory rate: n/a (" << s.theory_note << ")\n";
  if (s.violations) std::cout << "violations: " << *s.violations << " of " << s.checked_steps << " steps\n";
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"gpgd: projected gradient descent under generative priors"};
  app.require_subcommand(1);

  Globals g;
  std::uint64_t seed_value = 0;
  auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--config", g.config, "experiment config (JSON)");
    sub->add_option("--seed", seed_value, "master seed (overrides the config)");
    sub->add_option("--out", g.out, "output directory (overrides the config)");
  };

  auto* gen = app.add_subcommand("gen", "generate a problem instance");
  add_globals(gen);

  std::string instance_dir;
  auto* solve = app.add_subcommand("solve", "run the configured solver on one instance");
  add_globals(solve);
  solve->add_option("--instance", instance_dir, "instance directory written by 'gen' (default: generate)");

  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  add_globals(sweep);

  std::string report_in;
  double report_cutoff = 1e-10;
  auto* report = app.add_subcommand("report", "emit plot data and the bound-check report");
  add_globals(report);
  report->add_option("--in", report_in, "results directory to scan (default: --out)");
  report->add_option("--cutoff", report_cutoff, "stop checking once the gap falls below this");

  int samples = -1;
  auto* estimate = app.add_subcommand("estimate", "estimate regularity constants");
  add_globals(estimate);
  estimate->add_option("--instance", instance_dir, "instance directory written by 'gen' (default: generate)");
  estimate->add_option("--samples", samples, "number of sampled pairs (default: config estimation.samples)");

  CLI11_PARSE(app, argc, argv);

  for (auto* sub : {gen, solve, sweep, report, estimate})
    if (sub->count("--seed")) g.seed = seed_value;

  try {
    if (*gen) {
      const ExperimentConfig cfg = load(g);
      const ProblemInstance inst = gen_problem(cfg, cfg.seed);
      write_instance(inst, cfg.output);
      std::cout << "wrote instance to " << cfg.output << "\n";
      return kOk;
    }
    if (*solve) {
      const ExperimentConfig cfg = load(g);
      const ProblemInstance inst = instance_for(cfg, instance_dir);
      if (instance_dir.empty()) write_instance(inst, cfg.output);
      const SolveOutcome out = run_solve(inst, cfg);
      write_outcome(out, cfg.output);
      print_summary(out.summary);
      return out.summary.status == "diverged" ? kDiverged : kOk;
    }
    if (*sweep) {
      const ExperimentConfig cfg = load(g);
      const SweepResults res = run_sweep(cfg, cfg.output);
      std::cout << summary_table(res);
      return kOk;
    }
    if (*report) {
      const fs::path out = g.out.empty() ? fs::path(report_in.empty() ? "out" : report_in) : fs::path(g.out);
      const fs::path in = report_in.empty() ? out : fs::path(report_in);
      const ReportStats st = emit_report(in, out, report_cutoff);
      std::cout << io::read_file(out / "report.txt");
      return st.failed == 0 ? kOk : 1;
    }
    if (*estimate) {
      const ExperimentConfig cfg = load(g);
      const ProblemInstance inst = instance_for(cfg, instance_dir);
      const int n = samples > 0 ? samples : std::max(cfg.estimation.samples, 2);
      const RegularityEstimates r = estimate_regularity(inst, cfg.solver.mode, n, derive_seed(cfg.seed, 0xe5));
      io::json j = io::to_json(r);
      if (const auto o = oracle_constants(inst, cfg.solver.mode))
        j = io::json{{"estimates", j},
                     {"oracle", {{"alpha", o->alpha}, {"beta", o->beta}, {"mu", io::opt_json(o->mu)}}}};
      else
        j = io::json{{"estimates", j}, {"oracle", nullptr}};
      if (r.gamma_hat) j["gamma_delta"] = *r.gamma_hat * r.delta_hat;
      io::write_json(fs::path(cfg.output) / "regularity.json", j);
      std::cout << j.dump(2) << "\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ContractError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DivergenceError& e) {
    std::cerr << "solver diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
