#pragma once

#include "gpgd/core.hpp"

#include <string>

//! @file objective.hpp
//! Smooth objectives F(x) over R^n built from a forward operator A (m x n)
//! and observations y: least squares, and GLM losses with a convex potential.

namespace gpgd {

enum class ObjectiveKind { least_squares, glm };
enum class GlmLink { sigmoid, exp };

inline std::string to_string(GlmLink link) { return link == GlmLink::sigmoid ? "sigmoid" : "exp"; }

inline GlmLink parse_link(const std::string& s)
{
  if (s == "sigmoid") return GlmLink::sigmoid;
  if (s == "exp") return GlmLink::exp;
  throw ConfigError("unknown GLM link '" + s + "'");
}

namespace detail {

//! log(1 + e^t) without overflow.
inline double softplus(double t) { return std::log1p(std::exp(-std::abs(t))) + std::max(t, 0.0); }

inline double sigmoid(double t)
{
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

} // namespace detail

class Objective
{
public:
  static Objective least_squares(Matrix a, Vector y) { return Objective(ObjectiveKind::least_squares, std::move(a), std::move(y), GlmLink::sigmoid); }

  static Objective glm(Matrix a, Vector y, GlmLink link) { return Objective(ObjectiveKind::glm, std::move(a), std::move(y), link); }

  ObjectiveKind kind() const { return kind_; }
  GlmLink link() const { return link_; }
  const Matrix& a() const { return a_; }
  const Vector& y() const { return y_; }
  Index dim() const { return a_.cols(); }
  Index rows() const { return a_.rows(); }

  //! Least squares: 1/2 ||y - Ax||^2.
  //! GLM: sum_i Phi(a_i^T x) - y_i a_i^T x, Phi the link potential.
  double value(const Vector& x) const
  {
    check_input(x);
    const Vector t = a_ * x;
    if (kind_ == ObjectiveKind::least_squares) {
      const Vector r = y_ - t;
      for (Index i = 0; i < r.size(); ++i)
        if (!std::isfinite(r(i))) throw NumericError("objective overflow at row " + std::to_string(i));
      return 0.5 * r.squaredNorm();
    }
    double total = 0.0;
    for (Index i = 0; i < t.size(); ++i) {
      const double phi = link_ == GlmLink::sigmoid ? detail::softplus(t(i)) : std::exp(t(i));
      const double term = phi - y_(i) * t(i);
      if (!std::isfinite(term)) throw NumericError("objective overflow at row " + std::to_string(i));
      total += term;
    }
    return total;
  }

  //! Least squares: A^T (Ax - y). GLM: A^T (Phi'(Ax) - y).
  Vector gradient(const Vector& x) const
  {
    check_input(x);
    Vector t = a_ * x;
    Vector residual(t.size());
    for (Index i = 0; i < t.size(); ++i) {
      double mean = t(i);
      if (kind_ == ObjectiveKind::glm) mean = link_ == GlmLink::sigmoid ? detail::sigmoid(t(i)) : std::exp(t(i));
      residual(i) = mean - y_(i);
      if (!std::isfinite(residual(i))) throw NumericError("gradient overflow at row " + std::to_string(i));
    }
    return a_.transpose() * residual;
  }

  //! Hessian-vector product.
  Vector hessian_times(const Vector& x, const Vector& d) const
  {
    check_input(x);
    require(d.size() == dim(), "hessian_times: direction length mismatch");
    Vector ad = a_ * d;
    if (kind_ == ObjectiveKind::glm) {
      const Vector t = a_ * x;
      for (Index i = 0; i < t.size(); ++i) {
        double w = 0.0;
        if (link_ == GlmLink::sigmoid) {
          const double s = detail::sigmoid(t(i));
          w = s * (1.0 - s);
        } else {
          w = std::exp(t(i));
        }
        ad(i) *= w;
      }
    }
    return a_.transpose() * ad;
  }

private:
  Objective(ObjectiveKind kind, Matrix a, Vector y, GlmLink link)
      : kind_(kind), link_(link), a_(std::move(a)), y_(std::move(y))
  {
    require(a_.rows() == y_.size(), "objective: A has " + std::to_string(a_.rows()) +
                                        " rows but y has length " + std::to_string(y_.size()));
    require(a_.cols() > 0 && a_.rows() > 0, "objective: A must be nonempty");
  }

  void check_input(const Vector& x) const
  {
    require(x.size() == dim(), "objective: x length " + std::to_string(x.size()) + " != " + std::to_string(dim()));
    require(all_finite(x), "objective: x has non-finite entries");
  }

  ObjectiveKind kind_;
  GlmLink link_;
  Matrix a_;
  Vector y_;
};

inline double value(const Objective& f, const Vector& x) { return f.value(x); }
inline Vector gradient(const Objective& f, const Vector& x) { return f.gradient(x); }

} // namespace gpgd
