#include "gpgd/estimators.hpp"
#include "gpgd/io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace gpgd;

namespace {

struct LinearFamily
{
  Matrix w;
  Matrix a;
  GeneratorNetwork g;
  Objective f;
};

LinearFamily linear_family(std::uint64_t seed, Index n = 100, Index k = 5, Index m = 40)
{
  Rng rng(seed);
  Matrix w = orthonormalize_columns(rng.normal_matrix(n, k));
  Matrix a = rng.normal_matrix(m, n, 1.0 / std::sqrt(static_cast<double>(m)));
  const Vector y = a * (w * rng.normal_vector(k));
  GeneratorNetwork g = make_linear_generator(w);
  Objective f = Objective::least_squares(a, y);
  return {std::move(w), std::move(a), std::move(g), std::move(f)};
}

} // namespace

TEST(RscRss, DenoisingIsExactlyOne)
{
  Rng rng(1);
  const GeneratorNetwork g = make_linear_generator(rng.normal_matrix(10, 3));
  const Objective f = Objective::least_squares(Matrix::Identity(10, 10), rng.normal_vector(10));
  const RscRssEstimate e = estimate_rsc_rss(f, ConstraintSampler(g), 100, 2);
  for (double r : e.ratios) EXPECT_NEAR(r, 1.0, 1e-9);
  EXPECT_NEAR(e.alpha, 1.0, 1e-9);
  EXPECT_NEAR(e.beta, 1.0, 1e-9);
}

TEST(RscRss, SandwichedByEigenvaluesAndConverges)
{
  const LinearFamily fam = linear_family(3);
  const auto [lmin, lmax] = oracle::restricted_eigen_range(oracle::to_mat(fam.a), oracle::to_mat(fam.w));
  const RscRssEstimate e = estimate_rsc_rss(fam.f, ConstraintSampler(fam.g), 2000, 4);
  for (double r : e.ratios) {
    EXPECT_GE(r, lmin * (1 - 1e-9));
    EXPECT_LE(r, lmax * (1 + 1e-9));
  }
  EXPECT_LE(std::abs(e.alpha - lmin) / lmin, 0.05);
  EXPECT_LE(std::abs(e.beta - lmax) / lmax, 0.05);
  EXPECT_NEAR(rsc_ratio(fam.f, e.alpha_x, e.alpha_y), e.alpha, 1e-12);
  EXPECT_NEAR(rsc_ratio(fam.f, e.beta_x, e.beta_y), e.beta, 1e-12);
}

TEST(RscRss, LibraryOracleAgreesWithJacobi)
{
  const LinearFamily fam = linear_family(5);
  const auto [lmin, lmax] = oracle::restricted_eigen_range(oracle::to_mat(fam.a), oracle::to_mat(fam.w));
  const CurvatureBounds c = restricted_curvature(fam.a, fam.w);
  EXPECT_NEAR(c.lambda_min, lmin, 1e-10);
  EXPECT_NEAR(c.lambda_max, lmax, 1e-10);
}

TEST(RscRss, NestedInSampleCount)
{
  const LinearFamily fam = linear_family(6);
  double prev_a = std::numeric_limits<double>::infinity(), prev_b = 0.0;
  for (int n : {50, 200, 500, 1000}) {
    const RscRssEstimate e = estimate_rsc_rss(fam.f, ConstraintSampler(fam.g), n, 7);
    EXPECT_LE(e.alpha, prev_a);
    EXPECT_GE(e.beta, prev_b);
    prev_a = e.alpha;
    prev_b = e.beta;
  }
}

TEST(RscRss, GlmOrderedAndConvex)
{
  Rng rng(8);
  RandomGeneratorSpec spec;
  spec.latent_dim = 3;
  spec.output_dim = 15;
  spec.hidden_widths = {6};
  const GeneratorNetwork g = make_random_generator(spec, 9);
  const Matrix a = rng.normal_matrix(20, 15, 1.0 / std::sqrt(20.0));
  Vector y(20);
  for (Index i = 0; i < 20; ++i) y(i) = rng.uniform();
  for (auto link : {GlmLink::sigmoid, GlmLink::exp}) {
    const Objective f = Objective::glm(a, y, link);
    const RscRssEstimate e = estimate_rsc_rss(f, ConstraintSampler(g, 0.5), 300, 10);
    EXPECT_LE(e.alpha, e.beta);
    for (double r : e.ratios) EXPECT_GE(r, -1e-9);
  }
}

TEST(RscRss, DegenerateSamplerFails)
{
  // Zero output weights: the range is the single point (1, 1, 1, 1).
  Layer l{Matrix::Ones(3, 1), Vector::Zero(3), Activation::relu()};
  Layer out{Matrix::Zero(4, 3), Vector::Ones(4), Activation::identity()};
  const GeneratorNetwork g({l, out});
  const Objective f = Objective::least_squares(Matrix::Identity(4, 4), Vector::Zero(4));
  EXPECT_THROW(estimate_rsc_rss(f, ConstraintSampler(g), 10, 1), Error);
  EXPECT_THROW(estimate_rsc_rss(f, ConstraintSampler(g), 1, 1), ContractError);
}

TEST(Incoherence, OrthogonalSubspacesGiveZero)
{
  const Index n = 12, k = 3;
  const GeneratorNetwork g = make_linear_generator(Matrix::Identity(n, k));
  std::vector<Index> support;
  for (Index i = k; i < k + 4; ++i) support.push_back(i);
  const double mu = estimate_incoherence(ConstraintSampler(g), OrthoBasis::identity(n), 4, 200, 1, support);
  EXPECT_EQ(mu, 0.0);
}

TEST(Incoherence, SharedDirectionGivesOne)
{
  const GeneratorNetwork g = make_linear_generator(Matrix::Identity(8, 1));
  const double mu = estimate_incoherence(ConstraintSampler(g), OrthoBasis::identity(8), 1, 20, 1);
  EXPECT_NEAR(mu, 1.0, 1e-15);
}

TEST(Incoherence, MatchesSubspaceAngleOracle)
{
  Rng rng(12);
  const Matrix w = orthonormalize_columns(rng.normal_matrix(100, 5));
  const GeneratorNetwork g = make_linear_generator(w);
  const OrthoBasis basis = OrthoBasis::identity(100);
  const std::vector<Index> support = rng.subset(100, 5);

  oracle::Mat ws(5, oracle::Vec(5));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) ws[i][j] = w(support[j], i);
  const double exact = oracle::largest_singular(ws);
  EXPECT_NEAR(subspace_incoherence(w, basis, support), exact, 1e-12);

  std::vector<double> traj;
  const double mu = estimate_incoherence(ConstraintSampler(g), basis, 5, 5000, 13, support, &traj);
  EXPECT_LE(mu, exact + 1e-12);
  EXPECT_GE(mu, 0.98 * exact);
  for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_GE(traj[i], traj[i - 1]);
}

TEST(Incoherence, FreeSupportDominatesFixedSupport)
{
  Rng rng(14);
  const GeneratorNetwork g = make_linear_generator(orthonormalize_columns(rng.normal_matrix(30, 3)));
  const OrthoBasis basis = OrthoBasis::random(30, 15);
  const std::vector<Index> support{1, 4, 9};
  const double fixed = estimate_incoherence(ConstraintSampler(g), basis, 3, 300, 16, support);
  const double free = estimate_incoherence(ConstraintSampler(g), basis, 3, 300, 16);
  EXPECT_GE(free, fixed);
  EXPECT_LE(free, 1.0);
}

TEST(DiameterGamma, NoiselessGammaIsZero)
{
  const LinearFamily fam = linear_family(17);
  const Vector x_star = fam.w * Rng(17).normal_vector(5);
  const Objective f = Objective::least_squares(fam.a, fam.a * x_star);
  const DiameterGamma dg = estimate_diameter_gamma(f, x_star, ConstraintSampler(fam.g), 50, 1);
  ASSERT_TRUE(dg.gamma.has_value());
  EXPECT_LT(*dg.gamma, 1e-12);
  EXPECT_FALSE(estimate_diameter_gamma(f, std::nullopt, ConstraintSampler(fam.g), 5, 1).gamma.has_value());
}

TEST(DiameterGamma, BallBoundedByOperatorNorm)
{
  Rng rng(18);
  const Matrix w = rng.normal_matrix(10, 3);
  const GeneratorNetwork g = make_linear_generator(w);
  const Objective f = Objective::least_squares(Matrix::Identity(10, 10), Vector::Zero(10));
  const double r = 1.5;
  const DiameterGamma dg = estimate_diameter_gamma(f, std::nullopt, ConstraintSampler(g, r, LatentDistribution::ball), 200, 2);
  EXPECT_LE(dg.delta, 2.0 * r * largest_singular_value(w) + 1e-12);
  EXPECT_GT(dg.delta, 0.0);
}

TEST(DiameterGamma, TanhRangeBounded)
{
  RandomGeneratorSpec spec;
  spec.latent_dim = 2;
  spec.output_dim = 16;
  spec.hidden_widths = {8};
  spec.output_activation = Activation::tanh();
  const GeneratorNetwork g = make_random_generator(spec, 19);
  const Objective f = Objective::least_squares(Matrix::Identity(16, 16), Vector::Zero(16));
  const DiameterGamma dg = estimate_diameter_gamma(f, std::nullopt, ConstraintSampler(g, 10.0), 300, 3);
  EXPECT_LE(dg.delta, 2.0 * std::sqrt(16.0));
}

TEST(Minkowski, SubspaceSpansBothParts)
{
  Rng rng(20);
  const Matrix w = orthonormalize_columns(rng.normal_matrix(20, 3));
  const OrthoBasis basis = OrthoBasis::random(20, 21);
  const std::vector<Index> support{2, 7};
  const Matrix q = minkowski_subspace(w, basis, support);
  ASSERT_EQ(q.cols(), 5);
  EXPECT_LT((q * q.transpose() * w - w).norm(), 1e-12);
  for (Index s : support) EXPECT_LT((q * q.transpose() * basis.matrix().col(s) - basis.matrix().col(s)).norm(), 1e-12);
}

TEST(Regularity, JsonRoundTrip)
{
  RegularityEstimates r;
  r.alpha_hat = 0.3;
  r.beta_hat = 1.7;
  r.mu_hat = 0.25;
  r.delta_hat = 5.5;
  r.num_samples = 200;
  r.seed = 12345678901234567ULL;
  const RegularityEstimates s = io::regularity_from_json(io::json::parse(io::to_json(r).dump()));
  EXPECT_EQ(s.alpha_hat, r.alpha_hat);
  EXPECT_EQ(s.beta_hat, r.beta_hat);
  EXPECT_EQ(s.mu_hat, r.mu_hat);
  EXPECT_FALSE(s.gamma_hat.has_value());
  EXPECT_EQ(s.seed, r.seed);
  EXPECT_TRUE(s.consistent());
}
