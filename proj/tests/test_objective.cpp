#include "gpgd/io.hpp"
#include "gpgd/objective.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace gpgd;

namespace {

// Direct loop evaluation of each loss.
double reference_value(const oracle::Mat& a, const oracle::Vec& y, const oracle::Vec& x, const std::string& kind)
{
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = oracle::dot(a[i], x);
    if (kind == "ls") total += 0.5 * (y[i] - t) * (y[i] - t);
    else if (kind == "sigmoid") total += std::log(1.0 + std::exp(t)) - y[i] * t;
    else total += std::exp(t) - y[i] * t;
  }
  return total;
}

struct Case
{
  std::string kind;
  Objective f;
};

std::vector<Case> random_objectives(std::uint64_t seed)
{
  Rng rng(seed);
  const Matrix a = rng.normal_matrix(12, 6, 1.0 / std::sqrt(12.0));
  Vector y01(12);
  for (Index i = 0; i < 12; ++i) y01(i) = rng.uniform();
  Vector counts(12);
  for (Index i = 0; i < 12; ++i) counts(i) = static_cast<double>(rng.index(4));
  return {{"ls", Objective::least_squares(a, rng.normal_vector(12))},
          {"sigmoid", Objective::glm(a, y01, GlmLink::sigmoid)},
          {"exp", Objective::glm(a, counts, GlmLink::exp)}};
}

} // namespace

TEST(Objective, LeastSquaresHalfNorm)
{
  const Objective f = Objective::least_squares(Matrix::Identity(2, 2), Vector::Zero(2));
  EXPECT_DOUBLE_EQ(f.value(Vector{{3.0, 4.0}}), 12.5);
  EXPECT_EQ(f.gradient(Vector{{3.0, 4.0}}), (Vector{{3.0, 4.0}}));
}

TEST(Objective, ZeroAtConsistentSolution)
{
  Rng rng(1);
  const Matrix a = rng.normal_matrix(8, 5);
  const Vector x = rng.normal_vector(5);
  const Objective f = Objective::least_squares(a, a * x);
  EXPECT_LT(f.value(x), 1e-25);
  EXPECT_LT(f.gradient(x).norm(), 1e-10);
}

TEST(Objective, GlmSigmoidHandValue)
{
  const Objective f = Objective::glm(Matrix::Ones(1, 1), Vector::Constant(1, 0.5), GlmLink::sigmoid);
  EXPECT_NEAR(f.value(Vector::Zero(1)), std::log(2.0), 1e-15);
  EXPECT_NEAR(f.gradient(Vector::Zero(1))(0), 0.0, 1e-15);
}

TEST(Objective, MatchesReferenceValue)
{
  for (const auto& c : random_objectives(3)) {
    Rng rng(4);
    for (int i = 0; i < 5; ++i) {
      const Vector x = rng.normal_vector(6);
      const double want = reference_value(oracle::to_mat(c.f.a()), oracle::to_vec(c.f.y()), oracle::to_vec(x), c.kind);
      EXPECT_NEAR(c.f.value(x), want, 1e-12 * (1.0 + std::abs(want))) << c.kind;
    }
  }
}

TEST(Objective, GradientMatchesFiniteDifferences)
{
  for (const auto& c : random_objectives(5)) {
    const oracle::Mat a = oracle::to_mat(c.f.a());
    const oracle::Vec y = oracle::to_vec(c.f.y());
    Rng rng(6);
    for (int i = 0; i < 20; ++i) {
      const Vector x = rng.normal_vector(6);
      const auto fn = [&](const oracle::Vec& xx) { return reference_value(a, y, xx, c.kind); };
      const oracle::Vec want = oracle::central_gradient(fn, oracle::to_vec(x));
      EXPECT_LE(oracle::relative_error(oracle::to_vec(c.f.gradient(x)), want), 1e-5) << c.kind;
    }
  }
}

TEST(Objective, HessianTimesMatchesGradientDifferences)
{
  for (const auto& c : random_objectives(7)) {
    Rng rng(8);
    const Vector x = rng.normal_vector(6), d = rng.normal_vector(6);
    const double h = 1e-6;
    const Vector fd = (c.f.gradient(x + h * d) - c.f.gradient(x - h * d)) / (2 * h);
    EXPECT_LE((c.f.hessian_times(x, d) - fd).norm() / fd.norm(), 1e-6) << c.kind;
  }
}

TEST(Objective, SoftplusIsStable)
{
  EXPECT_NEAR(detail::softplus(800.0), 800.0, 1e-12);
  EXPECT_NEAR(detail::softplus(-800.0), 0.0, 1e-300);
  EXPECT_NEAR(detail::softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_EQ(detail::sigmoid(-800.0), 0.0);
  EXPECT_EQ(detail::sigmoid(800.0), 1.0);
  const Objective f = Objective::glm(Matrix::Ones(1, 1), Vector::Zero(1), GlmLink::sigmoid);
  EXPECT_TRUE(std::isfinite(f.value(Vector::Constant(1, 1e5))));
}

TEST(Objective, OverflowNamesRow)
{
  Matrix a = Matrix::Zero(3, 1);
  a(2, 0) = 1.0;
  const Objective f = Objective::glm(a, Vector::Zero(3), GlmLink::exp);
  try {
    f.value(Vector::Constant(1, 1000.0));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(f.gradient(Vector::Constant(1, 1000.0)), NumericError);
}

TEST(Objective, ShapeContract)
{
  EXPECT_THROW(Objective::least_squares(Matrix::Ones(3, 2), Vector::Zero(2)), ContractError);
  const Objective f = Objective::least_squares(Matrix::Ones(3, 2), Vector::Zero(3));
  EXPECT_THROW(f.value(Vector::Zero(3)), ContractError);
  Vector nan = Vector::Zero(2);
  nan(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(f.gradient(nan), ContractError);
}

TEST(Objective, JsonRoundTrip)
{
  for (const auto& c : random_objectives(9)) {
    const Objective g = io::objective_from_json(io::json::parse(io::to_json(c.f).dump()));
    EXPECT_EQ(g.kind(), c.f.kind());
    EXPECT_EQ(g.a(), c.f.a());
    EXPECT_EQ(g.y(), c.f.y());
    if (g.kind() == ObjectiveKind::glm) {
      EXPECT_EQ(g.link(), c.f.link());
    }
  }
  EXPECT_THROW(io::objective_from_json(io::json{{"kind", "huber"}, {"A", {{1.0}}}, {"y", {1.0}}}), ConfigError);
}
