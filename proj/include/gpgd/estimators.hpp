#pragma once

#include "gpgd/core.hpp"
#include "gpgd/generator.hpp"
#include "gpgd/objective.hpp"
#include "gpgd/projection.hpp"

#include <optional>
#include <vector>

//! @file estimators.hpp
//! Empirical estimates of the constants that govern the convergence rates:
//! restricted strong convexity / smoothness (alpha, beta), incoherence (mu)
//! between Range(G) and sparse-in-B vectors, the gradient norm at the
//! minimizer (gamma) and the diameter of Range(G) (Delta).
//!
//! Sampled estimates are one-sided evidence: alpha_hat >= alpha,
//! beta_hat <= beta, mu_hat <= mu, Delta_hat <= Delta. Exact subspace oracles
//! for the linear-generator / least-squares case are provided alongside.

namespace gpgd {

//------------------------------------------------------------------------------
// Constraint-set sampling

//! A point of Range(G) (+ an optional sparse-in-B component), stored by its
//! parameters so that it can be perturbed.
struct SetPoint
{
  Vector latent;
  Vector coeffs; // basis coefficients of the sparse part; empty when absent
};

enum class LatentDistribution { gaussian, ball };

//! Draws points from Range(G), or from the Minkowski sum of Range(G) and the
//! l-sparse-in-B vectors. The sparse support is either drawn uniformly per
//! point or pinned to a fixed index set.
class ConstraintSampler
{
public:
  explicit ConstraintSampler(const GeneratorNetwork& g, double latent_scale = 1.0,
                             LatentDistribution dist = LatentDistribution::gaussian)
      : g_(&g), scale_(latent_scale), dist_(dist)
  {
    require(latent_scale > 0.0, "sampler latent scale must be positive");
  }

  ConstraintSampler& with_sparse(const OrthoBasis& basis, Index l, std::optional<std::vector<Index>> support = std::nullopt)
  {
    require(basis.dim() == g_->output_dim(), "sampler: basis dimension does not match generator output");
    require(l >= 0 && l <= basis.dim(), "sampler: sparsity out of range");
    if (support) {
      require(static_cast<Index>(support->size()) == l, "sampler: fixed support must have exactly l indices");
      for (Index i : *support) require(i >= 0 && i < basis.dim(), "sampler: support index out of range");
    }
    basis_ = &basis;
    sparsity_ = l;
    support_ = std::move(support);
    return *this;
  }

  const GeneratorNetwork& generator() const { return *g_; }
  bool has_sparse() const { return basis_ != nullptr && sparsity_ > 0; }

  SetPoint draw(Rng& rng) const
  {
    SetPoint p;
    const Index k = g_->latent_dim();
    if (dist_ == LatentDistribution::gaussian) {
      p.latent = rng.normal_vector(k, scale_);
    } else {
      // Uniform in the ball of radius scale_.
      Vector d = rng.normal_vector(k);
      const double r = scale_ * std::pow(rng.uniform(), 1.0 / static_cast<double>(k));
      p.latent = (r / d.norm()) * d;
    }
    if (has_sparse()) {
      p.coeffs = Vector::Zero(basis_->dim());
      const std::vector<Index> supp = support_ ? *support_ : rng.subset(basis_->dim(), sparsity_);
      for (Index i : supp) p.coeffs(i) = rng.normal();
    }
    return p;
  }

  SetPoint perturb(const SetPoint& p, double step, Rng& rng) const
  {
    SetPoint q = p;
    q.latent += rng.normal_vector(q.latent.size(), step);
    const double rz = latent_radius();
    if (q.latent.norm() > rz) q.latent *= rz / q.latent.norm();
    for (Index i = 0; i < q.coeffs.size(); ++i)
      if (q.coeffs(i) != 0.0) q.coeffs(i) += step * rng.normal();
    // Local search stays where draw() puts essentially all of its mass;
    // otherwise curvature-growing losses (exp link) send it off to infinity.
    const double rc = std::sqrt(static_cast<double>(sparsity_)) + 4.0;
    if (q.coeffs.size() > 0 && q.coeffs.norm() > rc) q.coeffs *= rc / q.coeffs.norm();
    return q;
  }

  //! Ball radius for the ball law; sqrt(k) + 4 standard deviations for Gaussian.
  double latent_radius() const
  {
    if (dist_ == LatentDistribution::ball) return scale_;
    return scale_ * (std::sqrt(static_cast<double>(g_->latent_dim())) + 4.0);
  }

  Vector embed(const SetPoint& p) const
  {
    Vector x = g_->forward(p.latent);
    if (p.coeffs.size() > 0) x += basis_->synthesize(p.coeffs);
    return x;
  }

private:
  const GeneratorNetwork* g_;
  double scale_;
  LatentDistribution dist_;
  const OrthoBasis* basis_ = nullptr;
  Index sparsity_ = 0;
  std::optional<std::vector<Index>> support_;
};

//------------------------------------------------------------------------------
// RSC / RSS

constexpr double kMinPairDistance = 1e-12;

//! 2 (F(y) - F(x) - <grad F(x), y - x>) / ||x - y||^2.
inline double rsc_ratio(const Objective& f, const Vector& x, const Vector& y)
{
  const Vector d = y - x;
  return 2.0 * (f.value(y) - f.value(x) - f.gradient(x).dot(d)) / d.squaredNorm();
}

struct RscRssEstimate
{
  double alpha = 0.0;
  double beta = 0.0;
  Vector alpha_x, alpha_y; // pair attaining alpha
  Vector beta_x, beta_y;   // pair attaining beta
  std::vector<double> ratios; // every evaluated ratio, in sampling order
};

struct PairSearchOptions
{
  //! Independent pairs drawn before local refinement starts. The sample
  //! sequence does not depend on N, so estimates are nested in N.
  int explore = 200;
  //! Refine the current extreme pairs by random local perturbation.
  bool adaptive = true;
  double initial_step = 0.5;
};

//! Minimum and maximum of the RSC ratio over N sampled pairs of distinct
//! constraint-set points. In adaptive mode, after `explore` independent pairs
//! the remaining budget alternates between perturbing the current argmin and
//! argmax pairs (step adapted by the one-fifth success rule).
inline RscRssEstimate estimate_rsc_rss(const Objective& f, const ConstraintSampler& sampler, int num_pairs,
                                       std::uint64_t seed, PairSearchOptions opts = {})
{
  require(num_pairs >= 2, "estimate_rsc_rss: need at least 2 pairs");
  Rng rng(seed);
  RscRssEstimate est;
  est.ratios.reserve(static_cast<std::size_t>(num_pairs));

  struct Pair
  {
    SetPoint a, b;
    Vector xa, xb;
    double ratio;
  };
  std::optional<Pair> lo, hi;
  double step_lo = opts.initial_step;
  double step_hi = opts.initial_step;

  int degenerate = 0;
  const int max_degenerate = 10 * num_pairs + 100;

  auto evaluate = [&](SetPoint a, SetPoint b) -> std::optional<Pair> {
    Vector xa = sampler.embed(a);
    Vector xb = sampler.embed(b);
    if ((xa - xb).norm() < kMinPairDistance) {
      if (++degenerate > max_degenerate)
        throw Error("estimate_rsc_rss: sampler produced only degenerate pairs");
      return std::nullopt;
    }
    const double r = rsc_ratio(f, xa, xb);
    return Pair{std::move(a), std::move(b), std::move(xa), std::move(xb), r};
  };

  auto record = [&](const Pair& p) {
    est.ratios.push_back(p.ratio);
    if (!lo || p.ratio < lo->ratio) lo = p;
    if (!hi || p.ratio > hi->ratio) hi = p;
  };

  int count = 0;
  while (count < num_pairs) {
    const bool refine = opts.adaptive && count >= opts.explore && lo && hi;
    if (!refine) {
      SetPoint a = sampler.draw(rng);
      SetPoint b = sampler.draw(rng);
      if (auto p = evaluate(std::move(a), std::move(b))) {
        record(*p);
        ++count;
      }
      continue;
    }
    const bool toward_min = (count - opts.explore) % 2 == 0;
    Pair& cur = toward_min ? *lo : *hi;
    double& step = toward_min ? step_lo : step_hi;
    auto cand = evaluate(sampler.perturb(cur.a, step, rng), sampler.perturb(cur.b, step, rng));
    if (!cand) continue;
    const bool improved = toward_min ? cand->ratio < cur.ratio : cand->ratio > cur.ratio;
    step = improved ? std::min(step * 1.5, sampler.latent_radius()) : std::max(step * 0.9, 1e-10);
    record(*cand);
    ++count;
  }

  est.alpha = lo->ratio;
  est.beta = hi->ratio;
  est.alpha_x = lo->xa;
  est.alpha_y = lo->xb;
  est.beta_x = hi->xa;
  est.beta_y = hi->xb;
  return est;
}

//------------------------------------------------------------------------------
// Incoherence

//! Largest normalized inner product between a difference of two Range(G)
//! points and any difference of two sparse-in-B vectors, over N sampled
//! Range(G) pairs. For each sampled difference d the sparse partner is chosen
//! optimally: with a fixed support S it ranges over span(B_S), otherwise over
//! 2l-sparse combinations (the differences of two l-sparse vectors), so the
//! sample value is ||top entries of B^T d|| / ||d||.
inline double estimate_incoherence(const ConstraintSampler& range_sampler, const OrthoBasis& basis, Index l,
                                   int num_pairs, std::uint64_t seed,
                                   const std::optional<std::vector<Index>>& support = std::nullopt,
                                   std::vector<double>* trajectory = nullptr)
{
  require(num_pairs >= 1, "estimate_incoherence: need at least 1 sample");
  require(basis.dim() == range_sampler.generator().output_dim(), "estimate_incoherence: basis dimension mismatch");
  require(l >= 0 && l <= basis.dim(), "estimate_incoherence: sparsity out of range");
  const Index width = support ? static_cast<Index>(support->size()) : std::min<Index>(2 * l, basis.dim());

  Rng rng(seed);
  double mu = 0.0;
  int taken = 0;
  int degenerate = 0;
  while (taken < num_pairs) {
    const Vector u = range_sampler.embed(range_sampler.draw(rng));
    const Vector u2 = range_sampler.embed(range_sampler.draw(rng));
    const Vector d = u - u2;
    const double dn = d.norm();
    if (dn < kMinPairDistance) {
      if (++degenerate > 10 * num_pairs + 100) throw Error("estimate_incoherence: only degenerate samples");
      continue;
    }
    const Vector c = basis.analyze(d);
    double captured = 0.0;
    if (support) {
      for (Index i : *support) captured += c(i) * c(i);
    } else {
      for (Index i : top_support(c, width)) captured += c(i) * c(i);
    }
    mu = std::max(mu, std::min(1.0, std::sqrt(captured) / dn));
    if (trajectory) trajectory->push_back(mu);
    ++taken;
  }
  return mu;
}

//------------------------------------------------------------------------------
// Diameter and gradient at the minimizer

struct DiameterGamma
{
  double delta = 0.0;
  std::optional<double> gamma;
};

//! Delta_hat = max pairwise distance among N sampled range points;
//! gamma_hat = ||grad F(x_star)|| when x_star is given.
inline DiameterGamma estimate_diameter_gamma(const Objective& f, const std::optional<Vector>& x_star,
                                             const ConstraintSampler& sampler, int num_points, std::uint64_t seed)
{
  require(num_points >= 1, "estimate_diameter_gamma: need at least one point");
  Rng rng(seed);
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(num_points));
  for (int i = 0; i < num_points; ++i) pts.push_back(sampler.embed(sampler.draw(rng)));
  DiameterGamma out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) out.delta = std::max(out.delta, (pts[i] - pts[j]).norm());
  if (x_star) out.gamma = f.gradient(*x_star).norm();
  return out;
}

//------------------------------------------------------------------------------
// Aggregate

struct RegularityEstimates
{
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  std::optional<double> mu_hat;
  std::optional<double> gamma_hat;
  double delta_hat = 0.0;
  int num_samples = 0;
  std::uint64_t seed = 0;

  bool consistent() const { return alpha_hat > 0.0 && beta_hat >= alpha_hat; }
};

//------------------------------------------------------------------------------
// Exact oracles for subspace constraint sets with least squares

struct CurvatureBounds
{
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double condition() const { return lambda_max / lambda_min; }
};

//! Extreme eigenvalues of (A Q)^T (A Q) for Q an orthonormal basis of the
//! subspace: the exact RSC/RSS constants of least squares on that subspace.
inline CurvatureBounds restricted_curvature(const Matrix& a, const Matrix& q)
{
  require(a.cols() == q.rows(), "restricted_curvature: A columns do not match subspace dimension");
  const Matrix aq = a * q;
  Eigen::SelfAdjointEigenSolver<Matrix> es(aq.transpose() * aq);
  return {es.eigenvalues()(0), es.eigenvalues()(es.eigenvalues().size() - 1)};
}

//! Orthonormal basis of span(W) + span(B_S).
inline Matrix minkowski_subspace(const Matrix& w, const OrthoBasis& basis, const std::vector<Index>& support)
{
  Matrix m(w.rows(), w.cols() + static_cast<Index>(support.size()));
  m.leftCols(w.cols()) = w;
  for (std::size_t j = 0; j < support.size(); ++j) m.col(w.cols() + static_cast<Index>(j)) = basis.matrix().col(support[j]);
  return orthonormalize_columns(m);
}

//! Cosine of the smallest principal angle between span(W) and span(B_S).
inline double subspace_incoherence(const Matrix& w, const OrthoBasis& basis, const std::vector<Index>& support)
{
  if (support.empty()) return 0.0;
  const Matrix qw = orthonormalize_columns(w);
  Matrix bs(basis.dim(), static_cast<Index>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j) bs.col(static_cast<Index>(j)) = basis.matrix().col(support[j]);
  return std::min(1.0, largest_singular_value(qw.transpose() * bs));
}

} // namespace gpgd
