#include "gpgd/contraction.hpp"
#include "gpgd/estimators.hpp"
#include "gpgd/solver.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace gpgd;

namespace {

struct Desk
{
  Matrix w;
  Matrix a;
  GeneratorNetwork g;
  Objective f;
  Vector x_star;
  double alpha, beta;
};

// n=100, k=5, orthonormal W, A ~ N(0, 1/m), noiseless.
Desk desk(std::uint64_t seed, Index m = 40)
{
  Rng rng(seed);
  Matrix w = orthonormalize_columns(rng.normal_matrix(100, 5));
  Matrix a = rng.normal_matrix(m, 100, 1.0 / std::sqrt(static_cast<double>(m)));
  Vector x_star = w * rng.normal_vector(5);
  const auto [lmin, lmax] = oracle::restricted_eigen_range(oracle::to_mat(a), oracle::to_mat(w));
  GeneratorNetwork g = make_linear_generator(w);
  Objective f = Objective::least_squares(a, a * x_star);
  return {std::move(w), std::move(a), std::move(g), std::move(f), std::move(x_star), lmin, lmax};
}

SolverConfig pgd_config(double eta, int iters)
{
  SolverConfig c;
  c.eta = eta;
  c.max_iters = iters;
  return c;
}

ProjectionConfig closed_form()
{
  ProjectionConfig p;
  p.method = ProjectionMethod::closed_form_linear;
  return p;
}

} // namespace

TEST(EpsilonPgd, DenoisingConvergesInOneStep)
{
  Rng rng(1);
  const Matrix w = orthonormalize_columns(rng.normal_matrix(20, 3));
  const GeneratorNetwork g = make_linear_generator(w);
  const Vector x_star = w * rng.normal_vector(3);
  const Objective f = Objective::least_squares(Matrix::Identity(20, 20), x_star);
  const IterationTrace tr = epsilon_pgd(f, g, closed_form(), pgd_config(1.0, 3), std::nullopt, x_star);
  ASSERT_EQ(tr.records.size(), 4u);
  EXPECT_LT((tr.records[1].dist_to_truth.value()), 1e-14);
  EXPECT_LT(*tr.records[1].gap, 1e-28);
}

TEST(EpsilonPgd, FixedPointStays)
{
  Rng rng(2);
  const Matrix w = orthonormalize_columns(rng.normal_matrix(15, 2));
  const GeneratorNetwork g = make_linear_generator(w);
  const Matrix a = rng.normal_matrix(10, 15);
  const Vector x0 = w * rng.normal_vector(2);
  const Objective f = Objective::least_squares(a, a * x0);
  const IterationTrace tr = epsilon_pgd(f, g, closed_form(), pgd_config(0.1, 10), x0);
  for (const auto& r : tr.records) EXPECT_LT(r.f_value, 1e-25);
  EXPECT_LT((tr.final_point - x0).norm(), 1e-12);
}

TEST(EpsilonPgd, RecordsAreContiguousFromZero)
{
  const Desk d = desk(3);
  const IterationTrace tr = epsilon_pgd(d.f, d.g, closed_form(), pgd_config(1.0 / d.beta, 25), std::nullopt, d.x_star);
  ASSERT_EQ(tr.records.size(), 26u);
  for (std::size_t t = 0; t < tr.records.size(); ++t) {
    EXPECT_EQ(tr.records[t].t, static_cast<int>(t));
    EXPECT_TRUE(std::isfinite(tr.records[t].f_value));
  }
  EXPECT_EQ(tr.records[0].proj_residual_sq, 0.0);
  EXPECT_EQ(tr.iterations(), 25);
}

TEST(EpsilonPgd, DeskContractionWithinProofFactor)
{
  for (std::uint64_t seed : {4u, 5u, 6u}) {
    const Desk d = desk(seed);
    const IterationTrace tr =
        epsilon_pgd(d.f, d.g, closed_form(), pgd_config(1.0 / d.beta, 300), std::nullopt, d.x_star);
    ContractionOptions opt;
    opt.rho = pgd_rate(d.alpha, d.beta) + 0.05;
    opt.cutoff = 1e-10;
    const ContractionReport rep = contraction_report(tr, opt);
    EXPECT_GT(rep.checked_steps, 0);
    EXPECT_EQ(rep.violations, 0) << "seed " << seed;
    // The exact per-step factor on a subspace quadratic is (1 - alpha/beta)^2.
    const double tight = std::pow(1.0 - d.alpha / d.beta, 2);
    EXPECT_LE(rep.max_ratio, tight + 1e-6);
    ASSERT_TRUE(rep.fitted_rate.has_value());
    EXPECT_LE(*rep.fitted_rate, pgd_rate(d.alpha, d.beta) + 0.05);
  }
}

TEST(EpsilonPgd, MonotoneDescent)
{
  const Desk d = desk(7);
  const IterationTrace tr = epsilon_pgd(d.f, d.g, closed_form(), pgd_config(1.0 / d.beta, 100));
  for (std::size_t t = 1; t < tr.records.size(); ++t)
    EXPECT_LE(tr.records[t].f_value, tr.records[t - 1].f_value * (1 + 1e-12) + 1e-28); // roundoff floor
}

TEST(EpsilonPgd, IterationCountLogarithmic)
{
  const Desk d = desk(8);
  const IterationTrace tr = epsilon_pgd(d.f, d.g, closed_form(), pgd_config(1.0 / d.beta, 400), std::nullopt, d.x_star);
  std::vector<double> xs, ys;
  for (double delta : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const auto t = iterations_to_gap(tr, delta);
    ASSERT_TRUE(t.has_value());
    xs.push_back(std::log(1.0 / delta));
    ys.push_back(*t);
  }
  EXPECT_GE(linear_fit(xs, ys).r_squared, 0.98);
}

TEST(EpsilonPgd, EarlyStop)
{
  const Desk d = desk(9);
  SolverConfig cfg = pgd_config(1.0 / d.beta, 500);
  cfg.stop_gap = 1e-6;
  const IterationTrace tr = epsilon_pgd(d.f, d.g, closed_form(), cfg, std::nullopt, d.x_star);
  EXPECT_LT(*tr.records.back().gap, 1e-6);
  EXPECT_GE(*tr.records[tr.records.size() - 2].gap, 1e-6);
  // Without x* the stop gap is ignored.
  EXPECT_EQ(epsilon_pgd(d.f, d.g, closed_form(), cfg).iterations(), 500);
}

TEST(EpsilonPgd, Deterministic)
{
  RandomGeneratorSpec spec;
  spec.latent_dim = 2;
  spec.output_dim = 20;
  spec.hidden_widths = {8};
  const GeneratorNetwork g = make_random_generator(spec, 1);
  Rng rng(10);
  const Matrix a = rng.normal_matrix(15, 20, 1.0 / std::sqrt(15.0));
  const Vector x_star = g.forward(rng.normal_vector(2));
  const Objective f = Objective::least_squares(a, a * x_star);
  ProjectionConfig p;
  p.method = ProjectionMethod::latent_gd;
  p.seed = 4;
  p.restarts = 3;
  const IterationTrace t1 = epsilon_pgd(f, g, p, pgd_config(0.5, 20), std::nullopt, x_star);
  const IterationTrace t2 = epsilon_pgd(f, g, p, pgd_config(0.5, 20), std::nullopt, x_star);
  ASSERT_EQ(t1.records.size(), t2.records.size());
  for (std::size_t i = 0; i < t1.records.size(); ++i) {
    EXPECT_EQ(t1.records[i].f_value, t2.records[i].f_value);
    EXPECT_EQ(t1.records[i].proj_residual_sq, t2.records[i].proj_residual_sq);
  }
  EXPECT_EQ(t1.final_point, t2.final_point);
}

TEST(EpsilonPgd, DivergenceKeepsPartialTrace)
{
  const Desk d = desk(11);
  try {
    epsilon_pgd(d.f, d.g, closed_form(), pgd_config(50.0 / d.beta, 200), std::nullopt, d.x_star);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_FALSE(e.trace.records.empty());
    EXPECT_LT(e.trace.records.size(), 201u);
  }
}

TEST(EpsilonPgd, ConfigErrors)
{
  const Desk d = desk(12);
  SolverConfig cfg = pgd_config(1.0, 10);
  cfg.mode = SolverMode::myopic;
  EXPECT_THROW(epsilon_pgd(d.f, d.g, closed_form(), cfg), ConfigError);
  EXPECT_THROW(epsilon_pgd(d.f, d.g, closed_form(), pgd_config(-1.0, 10)), ConfigError);
  EXPECT_THROW(epsilon_pgd(d.f, d.g, closed_form(), pgd_config(1.0, 0)), ConfigError);
  EXPECT_THROW(epsilon_pgd(d.f, d.g, closed_form(), pgd_config(1.0, 10), Vector::Zero(3)), ContractError);
}

TEST(Myopic, ZeroSparsityReducesToPgd)
{
  const Desk d = desk(13);
  SolverConfig mc = pgd_config(1.0 / d.beta, 60);
  mc.mode = SolverMode::myopic;
  mc.sparsity = 0;
  const OrthoBasis basis = OrthoBasis::identity(100);
  const IterationTrace my = myopic_pgd(d.f, d.g, closed_form(), &basis, mc, d.x_star);
  const IterationTrace pg = epsilon_pgd(d.f, d.g, closed_form(), pgd_config(1.0 / d.beta, 60), std::nullopt, d.x_star);
  ASSERT_EQ(my.records.size(), pg.records.size());
  for (std::size_t i = 0; i < my.records.size(); ++i) {
    EXPECT_EQ(my.records[i].f_value, pg.records[i].f_value);
    EXPECT_EQ(my.records[i].gap, pg.records[i].gap);
  }
  EXPECT_EQ(my.final_point, pg.final_point);
  EXPECT_EQ(my.final_v->norm(), 0.0);
}

TEST(Myopic, ZeroRangeGeneratorIsHardThresholding)
{
  // Range(G) = {0}: first layer has zero weights and bias.
  const GeneratorNetwork g({Layer{Matrix::Zero(3, 1), Vector::Zero(3), Activation::relu()},
                            Layer{Matrix::Ones(30, 3), Vector::Zero(30), Activation::identity()}});
  Rng rng(14);
  const OrthoBasis basis = OrthoBasis::random(30, 15);
  Vector coeffs = Vector::Zero(30);
  for (Index i : rng.subset(30, 3)) coeffs(i) = rng.normal();
  const Vector x_star = basis.synthesize(coeffs);
  const Matrix a = rng.normal_matrix(25, 30, 1.0 / 5.0);
  const Objective f = Objective::least_squares(a, a * x_star);

  ProjectionConfig p;
  p.method = ProjectionMethod::latent_gd;
  p.restarts = 1;
  SolverConfig cfg = pgd_config(0.3, 40);
  cfg.mode = SolverMode::myopic;
  cfg.sparsity = 3;
  const IterationTrace tr = myopic_pgd(f, g, p, &basis, cfg, x_star);

  // Independent iterative hard thresholding.
  const oracle::Mat bm = oracle::to_mat(basis.matrix());
  const oracle::Mat am = oracle::to_mat(a);
  const oracle::Vec y = oracle::to_vec(a * x_star);
  oracle::Vec v(30, 0.0);
  for (int t = 0; t < 40; ++t) {
    oracle::Vec r = oracle::matvec(am, v);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    const oracle::Vec grad = oracle::matvec(oracle::transpose(am), r);
    oracle::Vec z(30);
    for (int i = 0; i < 30; ++i) z[i] = v[i] - 0.3 * grad[i];
    oracle::Vec c = oracle::matvec(oracle::transpose(bm), z);
    std::vector<int> order(30);
    for (int i = 0; i < 30; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return std::abs(c[i]) > std::abs(c[j]); });
    for (int i = 3; i < 30; ++i) c[order[i]] = 0.0;
    v = oracle::matvec(bm, c);
  }
  EXPECT_LT(oracle::relative_error(oracle::to_vec(tr.final_point), v), 1e-10);
  EXPECT_LT(tr.final_u->norm(), 1e-300);
}

TEST(Myopic, DeskRecoveryAndFeasibility)
{
  Rng rng(15);
  const Matrix w = orthonormalize_columns(rng.normal_matrix(100, 5));
  const Matrix a = rng.normal_matrix(60, 100, 1.0 / std::sqrt(60.0));
  const GeneratorNetwork g = make_linear_generator(w);
  const OrthoBasis basis = OrthoBasis::identity(100);
  Vector nu = Vector::Zero(100);
  const auto support = rng.subset(100, 5);
  for (Index i : support) nu(i) = rng.normal();
  const Vector x_star = w * rng.normal_vector(5) + nu;
  const Objective f = Objective::least_squares(a, a * x_star);
  const CurvatureBounds c = restricted_curvature(a, minkowski_subspace(w, basis, support));

  SolverConfig cfg = pgd_config(1.0 / c.lambda_max, 200);
  cfg.mode = SolverMode::myopic;
  cfg.sparsity = 5;
  const IterationTrace tr = myopic_pgd(f, g, closed_form(), &basis, cfg, x_star);
  EXPECT_LE(tr.max_sparse_support, 5);
  EXPECT_LE(count_nonzero(*tr.final_v_coeffs), 5);
  EXPECT_LT((*tr.final_u + *tr.final_v - tr.final_point).norm(), 1e-15);
  EXPECT_LE(*tr.records.back().dist_to_truth, 1e-4);
}

TEST(Myopic, RequiresBasis)
{
  const Desk d = desk(16);
  SolverConfig cfg = pgd_config(1.0, 5);
  cfg.mode = SolverMode::myopic;
  EXPECT_THROW(myopic_pgd(d.f, d.g, closed_form(), nullptr, cfg), ConfigError);
  cfg.mode = SolverMode::pgd;
  const OrthoBasis basis = OrthoBasis::identity(100);
  EXPECT_THROW(myopic_pgd(d.f, d.g, closed_form(), &basis, cfg), ConfigError);
}

TEST(SolverMode, Parse)
{
  EXPECT_EQ(parse_solver_mode("pgd"), SolverMode::pgd);
  EXPECT_EQ(parse_solver_mode("myopic"), SolverMode::myopic);
  EXPECT_THROW(parse_solver_mode("admm"), ConfigError);
}
