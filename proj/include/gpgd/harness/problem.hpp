#pragma once

#include "gpgd/harness/config.hpp"

#include <filesystem>
#include <optional>
#include <vector>

//! @file problem.hpp
//! Synthetic inverse problems: a generator, an optional sparsifying basis,
//! Gaussian measurements and the ground truth x* = G(z*) + nu*.

namespace gpgd::harness {

struct ProblemMeta
{
  Index n = 0, m = 0, k = 0, l = 0;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  std::string model = "linear";
  GlmLink link = GlmLink::sigmoid;
  std::string basis_type; // empty when no basis
};

struct ProblemInstance
{
  GeneratorNetwork generator;
  std::optional<OrthoBasis> basis;
  Matrix a;
  Vector y;
  Vector z_star;
  std::optional<Vector> nu_star;
  std::vector<Index> nu_support; // basis indices carrying nu*
  Vector x_star;
  Vector noise;
  ProblemMeta meta;

  Objective objective() const
  {
    if (meta.model == "glm") return Objective::glm(a, y, meta.link);
    return Objective::least_squares(a, y);
  }
};

//! Mean response E[y | x] of the measurement model.
inline Vector measurement_mean(const Matrix& a, const Vector& x, const std::string& model, GlmLink link)
{
  Vector t = a * x;
  if (model == "glm")
    for (Index i = 0; i < t.size(); ++i) t(i) = link == GlmLink::sigmoid ? gpgd::detail::sigmoid(t(i)) : std::exp(t(i));
  return t;
}

namespace seeds {
inline constexpr std::uint64_t generator = 1, basis = 2, measurement = 3, latent = 4, innovation = 5, noise = 6;
}

//! Every random component draws from its own stream derived from `seed`,
//! so changing one dimension leaves unrelated components unchanged.
inline ProblemInstance gen_problem(const ExperimentConfig& cfg, std::uint64_t seed)
{
  cfg.validate();
  const ProblemSpec& p = cfg.problem;
  require_config(p.l <= p.n, "l must not exceed n");
  require_config(p.m >= 1, "m must be at least 1");

  ProblemMeta meta{p.n, p.m, p.k, p.l, p.noise_level, seed, p.model, p.link, {}};

  auto generator = [&]() -> GeneratorNetwork {
    if (p.generator.type == "linear") {
      Rng rng(derive_seed(seed, seeds::generator));
      Matrix w = rng.normal_matrix(p.n, p.k);
      if (p.generator.orthonormal) w = orthonormalize_columns(w);
      return make_linear_generator(w);
    }
    RandomGeneratorSpec spec;
    spec.latent_dim = p.k;
    spec.output_dim = p.n;
    spec.depth = p.generator.depth;
    spec.hidden_widths = p.generator.widths;
    spec.activation = p.generator.activation;
    spec.output_activation = p.generator.output_activation;
    std::vector<std::string> warnings;
    return make_random_generator(spec, derive_seed(seed, seeds::generator), &warnings);
  }();

  std::optional<OrthoBasis> basis;
  std::string basis_type = p.basis.value_or(p.l > 0 || cfg.solver.mode == SolverMode::myopic ? "identity" : "");
  if (basis_type == "identity") basis = OrthoBasis::identity(p.n);
  else if (basis_type == "random") basis = OrthoBasis::random(p.n, derive_seed(seed, seeds::basis));
  meta.basis_type = basis_type;

  Rng arng(derive_seed(seed, seeds::measurement));
  Matrix a = arng.normal_matrix(p.m, p.n, 1.0 / std::sqrt(static_cast<double>(p.m)));

  Rng zrng(derive_seed(seed, seeds::latent));
  Vector z_star = zrng.normal_vector(p.k);

  std::optional<Vector> nu_star;
  std::vector<Index> support;
  if (p.l > 0) {
    Rng vrng(derive_seed(seed, seeds::innovation));
    support = vrng.subset(p.n, p.l);
    std::sort(support.begin(), support.end());
    Vector coeffs = Vector::Zero(p.n);
    for (Index i : support) coeffs(i) = vrng.normal();
    nu_star = basis->synthesize(coeffs);
  }

  Vector x_star = generator.forward(z_star);
  if (nu_star) x_star += *nu_star;

  const Vector clean = measurement_mean(a, x_star, p.model, p.link);
  Vector noise = Vector::Zero(p.m);
  if (p.noise_level > 0.0) {
    Rng nrng(derive_seed(seed, seeds::noise));
    const Vector g = nrng.normal_vector(p.m);
    noise = (p.noise_level * (a * x_star).norm() / g.norm()) * g;
  }
  Vector y = clean + noise;

  return ProblemInstance{std::move(generator), std::move(basis), std::move(a), std::move(y), std::move(z_star),
                         std::move(nu_star), std::move(support), std::move(x_star), std::move(noise), meta};
}

//------------------------------------------------------------------------------
// Files: instance.json (meta, truth, y), generator.json, A.csv, B.csv

inline void write_instance(const ProblemInstance& inst, const std::filesystem::path& dir)
{
  using io::json;
  std::filesystem::create_directories(dir);
  json meta{{"n", inst.meta.n},
            {"m", inst.meta.m},
            {"k", inst.meta.k},
            {"l", inst.meta.l},
            {"noise_level", inst.meta.noise_level},
            {"seed", inst.meta.seed},
            {"model", inst.meta.model},
            {"link", to_string(inst.meta.link)},
            {"basis", inst.meta.basis_type}};
  json truth{{"z_star", io::to_json(inst.z_star)},
             {"nu_star", inst.nu_star ? io::to_json(*inst.nu_star) : json(nullptr)},
             {"nu_support", inst.nu_support},
             {"x_star", io::to_json(inst.x_star)},
             {"noise", io::to_json(inst.noise)}};
  io::write_json(dir / "instance.json", json{{"meta", meta}, {"truth", truth}, {"y", io::to_json(inst.y)}});
  io::write_json(dir / "generator.json", io::to_json(inst.generator));
  io::write_matrix_csv(dir / "A.csv", inst.a);
  if (inst.basis) io::write_matrix_csv(dir / "B.csv", inst.basis->matrix());
}

inline ProblemInstance read_instance(const std::filesystem::path& dir)
{
  using io::json;
  const json j = io::read_json(dir / "instance.json");
  io::reject_unknown_keys(j, {"meta", "truth", "y"}, "instance");
  const json& mj = j.at("meta");
  io::reject_unknown_keys(mj, {"n", "m", "k", "l", "noise_level", "seed", "model", "link", "basis"}, "instance.meta");
  ProblemMeta meta;
  meta.n = io::get<Index>(mj, "n", "instance.meta");
  meta.m = io::get<Index>(mj, "m", "instance.meta");
  meta.k = io::get<Index>(mj, "k", "instance.meta");
  meta.l = io::get<Index>(mj, "l", "instance.meta");
  meta.noise_level = io::get<double>(mj, "noise_level", "instance.meta");
  meta.seed = io::get_seed(mj, "seed", 0, "instance.meta");
  meta.model = io::get<std::string>(mj, "model", "instance.meta");
  meta.link = parse_link(io::get<std::string>(mj, "link", "instance.meta"));
  meta.basis_type = io::get<std::string>(mj, "basis", "instance.meta");

  const json& tj = j.at("truth");
  io::reject_unknown_keys(tj, {"z_star", "nu_star", "nu_support", "x_star", "noise"}, "instance.truth");

  std::optional<OrthoBasis> basis;
  if (!meta.basis_type.empty()) basis = OrthoBasis(io::read_matrix_csv(dir / "B.csv"));
  std::optional<Vector> nu;
  if (!tj.at("nu_star").is_null()) nu = io::vector_from_json(tj["nu_star"], "instance.truth.nu_star");

  ProblemInstance inst{io::generator_from_json(io::read_json(dir / "generator.json")),
                       std::move(basis),
                       io::read_matrix_csv(dir / "A.csv"),
                       io::vector_from_json(j.at("y"), "instance.y"),
                       io::vector_from_json(tj.at("z_star"), "instance.truth.z_star"),
                       std::move(nu),
                       tj.at("nu_support").get<std::vector<Index>>(),
                       io::vector_from_json(tj.at("x_star"), "instance.truth.x_star"),
                       io::vector_from_json(tj.at("noise"), "instance.truth.noise"),
                       meta};
  require_config(inst.a.rows() == meta.m && inst.a.cols() == meta.n, "instance: A shape does not match meta");
  require_config(inst.y.size() == meta.m && inst.x_star.size() == meta.n, "instance: vector lengths do not match meta");
  return inst;
}

} // namespace gpgd::harness
