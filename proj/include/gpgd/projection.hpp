#pragma once

#include "gpgd/core.hpp"
#include "gpgd/generator.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

//! @file projection.hpp
//! Approximate Euclidean projection onto Range(G) and exact projection onto
//! the set of vectors that are l-sparse in an orthonormal basis.
//!
//! Three oracles are provided:
//!  - closed-form-linear: exact projection for affine generators (certified, slack 0);
//!  - grid: brute force over a latent grid, certified against that grid, k <= 3 only;
//!  - latent-gd: multi-start gradient descent on z -> 1/2 ||x - G(z)||^2 (not certified).

namespace gpgd {

//------------------------------------------------------------------------------
// Orthonormal basis

class OrthoBasis
{
public:
  static constexpr double tolerance = 1e-8;

  explicit OrthoBasis(Matrix b) : b_(std::move(b))
  {
    require(b_.rows() == b_.cols() && b_.rows() > 0, "ortho basis must be a nonempty square matrix");
    const Matrix gram = b_.transpose() * b_;
    const double dev = (gram - Matrix::Identity(b_.rows(), b_.cols())).cwiseAbs().maxCoeff();
    require(dev <= tolerance, "basis is not orthonormal (max |B^T B - I| = " + std::to_string(dev) + ")");
    identity_ = b_.isIdentity(0.0);
  }

  static OrthoBasis identity(Index n) { return OrthoBasis(Matrix::Identity(n, n)); }

  //! Q factor of a seeded Gaussian matrix.
  static OrthoBasis random(Index n, std::uint64_t seed)
  {
    Rng rng(seed);
    return OrthoBasis(orthonormalize_columns(rng.normal_matrix(n, n)));
  }

  Index dim() const { return b_.rows(); }
  const Matrix& matrix() const { return b_; }
  bool is_identity() const { return identity_; }

  Vector analyze(const Vector& v) const { return identity_ ? v : Vector(b_.transpose() * v); }
  Vector synthesize(const Vector& c) const { return identity_ ? c : Vector(b_ * c); }

private:
  Matrix b_;
  bool identity_ = false;
};

//! Number of nonzero entries.
inline Index count_nonzero(const Vector& c)
{
  return static_cast<Index>((c.array() != 0.0).count());
}

//------------------------------------------------------------------------------
// Hard thresholding

//! Indices of the `l` largest-magnitude entries of `c`, ties to the lowest
//! index, returned in increasing index order.
inline std::vector<Index> top_support(const Vector& c, Index l)
{
  std::vector<Index> order(static_cast<std::size_t>(c.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(c(a)) > std::abs(c(b)); });
  order.resize(static_cast<std::size_t>(l));
  std::sort(order.begin(), order.end());
  return order;
}

//! Coefficients (in basis B) of the projection of v onto {w : ||B^T w||_0 <= l}.
inline Vector hard_threshold_coefficients(const OrthoBasis& basis, const Vector& v, Index l)
{
  require(v.size() == basis.dim(), "hard_threshold: vector length does not match basis");
  require(l >= 0 && l <= v.size(), "hard_threshold: sparsity " + std::to_string(l) +
                                       " outside [0, " + std::to_string(v.size()) + "]");
  const Vector c = basis.analyze(v);
  Vector kept = Vector::Zero(c.size());
  for (Index i : top_support(c, l)) kept(i) = c(i);
  return kept;
}

//! Exact Euclidean projection of v onto the l-sparse-in-B set.
inline Vector hard_threshold(const OrthoBasis& basis, const Vector& v, Index l)
{
  return basis.synthesize(hard_threshold_coefficients(basis, v, l));
}

//------------------------------------------------------------------------------
// Configuration and results

enum class ProjectionMethod { closed_form_linear, latent_gd, grid };

inline std::string to_string(ProjectionMethod m)
{
  switch (m) {
    case ProjectionMethod::closed_form_linear: return "closed-form-linear";
    case ProjectionMethod::latent_gd: return "latent-gd";
    case ProjectionMethod::grid: return "grid";
  }
  return "closed-form-linear";
}

inline ProjectionMethod parse_projection_method(const std::string& s)
{
  if (s == "closed-form-linear") return ProjectionMethod::closed_form_linear;
  if (s == "latent-gd") return ProjectionMethod::latent_gd;
  if (s == "grid") return ProjectionMethod::grid;
  throw ConfigError("unknown projection method '" + s + "'");
}

struct ProjectionConfig
{
  ProjectionMethod method = ProjectionMethod::closed_form_linear;
  //! Target slack. With `degrade` set, outputs are pushed to exactly this slack.
  double epsilon = 0.0;
  int restarts = 10;
  int inner_iters = 200;
  //! Fixed latent step; empty means backtracking line search from 1.0.
  std::optional<double> inner_step;
  double grid_lower = -3.0;
  double grid_upper = 3.0;
  int grid_resolution = 200;
  std::uint64_t seed = 0;
  //! Perturb each oracle output inside Range(G) along a random latent
  //! direction until the residual grows by `epsilon`.
  bool degrade = false;

  void validate() const
  {
    require_config(epsilon >= 0.0 && std::isfinite(epsilon), "projection epsilon must be finite and >= 0");
    require_config(restarts >= 1, "projection restarts must be positive");
    require_config(inner_iters >= 1, "projection inner_iters must be positive");
    require_config(!inner_step || (*inner_step > 0.0 && std::isfinite(*inner_step)),
                   "projection inner_step must be positive");
    require_config(grid_lower < grid_upper, "grid bounds must satisfy lower < upper");
    require_config(grid_resolution >= 2, "grid resolution must be at least 2");
  }
};

struct ProjectionResult
{
  Vector point;
  Vector latent;
  double residual_sq = 0.0;
  bool certified = false;
};

//------------------------------------------------------------------------------
// Linear projection

//! Orthogonal projection onto span(W) with the latent least-squares solution.
//! Requires full column rank.
inline ProjectionResult project_linear(const Matrix& w, const Vector& x)
{
  require(x.size() == w.rows(), "project_linear: x length does not match W rows");
  require(all_finite(x), "project_linear: x has non-finite entries");
  require(smallest_singular_value(w) > 1e-10, "project_linear: W is rank deficient");
  Eigen::ColPivHouseholderQR<Matrix> qr(w);
  ProjectionResult r;
  r.latent = qr.solve(x);
  r.point = w * r.latent;
  r.residual_sq = (x - r.point).squaredNorm();
  r.certified = true;
  return r;
}

//------------------------------------------------------------------------------
// Projector

//! Projection oracle bound to one generator. Factorizations are computed once
//! at construction. The only mutable state is the call counter feeding the
//! `degrade` perturbations, so a run is reproducible from the config seed.
class Projector
{
public:
  Projector(const GeneratorNetwork& g, ProjectionConfig cfg) : g_(&g), cfg_(std::move(cfg))
  {
    cfg_.validate();
    switch (cfg_.method) {
      case ProjectionMethod::closed_form_linear: {
        require_config(g.is_affine(),
                       "closed-form-linear projection requires a single identity-activation layer");
        const Layer& layer = g.layers().front();
        require_config(smallest_singular_value(layer.weights) > 1e-10,
                       "closed-form-linear projection requires full column rank weights");
        qr_.compute(layer.weights);
        break;
      }
      case ProjectionMethod::grid:
        require_config(g.latent_dim() <= 3, "grid projection requires latent dim k <= 3, got k = " +
                                                std::to_string(g.latent_dim()));
        break;
      case ProjectionMethod::latent_gd:
        break;
    }
  }

  const ProjectionConfig& config() const { return cfg_; }
  const GeneratorNetwork& generator() const { return *g_; }

  ProjectionResult operator()(const Vector& x)
  {
    require(x.size() == g_->output_dim(), "project: x length " + std::to_string(x.size()) +
                                              " does not match generator output dim " +
                                              std::to_string(g_->output_dim()));
    require(all_finite(x), "project: x has non-finite entries");

    ProjectionResult r;
    switch (cfg_.method) {
      case ProjectionMethod::closed_form_linear: r = closed_form(x); break;
      case ProjectionMethod::grid: r = grid(x); break;
      case ProjectionMethod::latent_gd: r = latent_descent(x); break;
    }
    if (cfg_.degrade && cfg_.epsilon > 0.0) degrade(x, r);
    ++calls_;
    return r;
  }

private:
  ProjectionResult finish(const Vector& x, Vector latent, bool certified) const
  {
    ProjectionResult r;
    r.point = g_->forward(latent);
    r.latent = std::move(latent);
    r.residual_sq = (x - r.point).squaredNorm();
    r.certified = certified;
    return r;
  }

  ProjectionResult closed_form(const Vector& x) const
  {
    const Layer& layer = g_->layers().front();
    return finish(x, qr_.solve(Vector(x - layer.bias)), true);
  }

  ProjectionResult grid(const Vector& x) const
  {
    const Index k = g_->latent_dim();
    const Index res = cfg_.grid_resolution;
    const double step = (cfg_.grid_upper - cfg_.grid_lower) / static_cast<double>(res - 1);
    Index total = 1;
    for (Index i = 0; i < k; ++i) total *= res;

    Vector z(k);
    Vector best_z(k);
    double best = std::numeric_limits<double>::infinity();
    for (Index flat = 0; flat < total; ++flat) {
      Index rem = flat;
      for (Index i = 0; i < k; ++i) {
        z(i) = cfg_.grid_lower + step * static_cast<double>(rem % res);
        rem /= res;
      }
      const double r = (x - g_->forward(z)).squaredNorm();
      if (r < best) {
        best = r;
        best_z = z;
      }
    }
    return finish(x, best_z, true);
  }

  ProjectionResult latent_descent(const Vector& x) const
  {
    const Index k = g_->latent_dim();
    std::optional<ProjectionResult> best;
    for (int restart = 0; restart < cfg_.restarts; ++restart) {
      Rng rng(derive_seed(cfg_.seed, 0x1a7e, restart));
      Vector z = rng.normal_vector(k);
      descend(x, z);
      ProjectionResult cand = finish(x, std::move(z), false);
      if (!best || cand.residual_sq < best->residual_sq) best = std::move(cand);
    }
    return *best;
  }

  void descend(const Vector& x, Vector& z) const
  {
    Vector out = g_->forward(z);
    double phi = 0.5 * (x - out).squaredNorm();
    for (int it = 0; it < cfg_.inner_iters; ++it) {
      const Vector grad = g_->vjp(z, out - x);
      const double gnorm2 = grad.squaredNorm();
      if (std::sqrt(gnorm2) < 1e-9) break;

      if (cfg_.inner_step) {
        z -= *cfg_.inner_step * grad;
        out = g_->forward(z);
        phi = 0.5 * (x - out).squaredNorm();
        if (!std::isfinite(phi)) throw NumericError("latent-gd diverged; reduce inner_step");
        continue;
      }

      double s = 1.0;
      bool accepted = false;
      for (int halving = 0; halving < 60; ++halving, s *= 0.5) {
        const Vector trial = z - s * grad;
        const Vector trial_out = g_->forward(trial);
        const double trial_phi = 0.5 * (x - trial_out).squaredNorm();
        if (trial_phi <= phi - 1e-4 * s * gnorm2) {
          z = trial;
          out = trial_out;
          phi = trial_phi;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }
  }

  //! Moves the latent along a random direction until the residual has grown
  //! by `epsilon` (or as close as the range allows), keeping the output in
  //! Range(G) and within the slack.
  void degrade(const Vector& x, ProjectionResult& r) const
  {
    Rng rng(derive_seed(cfg_.seed, 0xde9a, calls_));
    Vector dir = rng.normal_vector(g_->latent_dim());
    dir /= dir.norm();
    const double target = r.residual_sq + cfg_.epsilon;
    auto residual_at = [&](double s) { return (x - g_->forward(Vector(r.latent + s * dir))).squaredNorm(); };

    double lo = 0.0;
    double hi = 1.0;
    int grow = 0;
    while (residual_at(hi) < target && grow < 60) {
      lo = hi;
      hi *= 2.0;
      ++grow;
    }
    if (residual_at(hi) >= target) {
      for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (residual_at(mid) < target ? lo : hi) = mid;
      }
    }
    ProjectionResult out = finish(x, Vector(r.latent + lo * dir), r.certified);
    r = std::move(out);
  }

  const GeneratorNetwork* g_;
  ProjectionConfig cfg_;
  Eigen::ColPivHouseholderQR<Matrix> qr_;
  std::uint64_t calls_ = 0;
};

//! One-shot projection.
inline ProjectionResult project(const ProjectionConfig& cfg, const GeneratorNetwork& g, const Vector& x)
{
  Projector p(g, cfg);
  return p(x);
}

} // namespace gpgd
