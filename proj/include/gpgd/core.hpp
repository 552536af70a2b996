#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

//! @file core.hpp
//! Shared vector types, error hierarchy and the portable random stream.

namespace gpgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

//------------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

//! Precondition violated by the caller (dimension mismatch, bad argument).
struct ContractError : Error
{
  using Error::Error;
};

//! Incompatible or malformed configuration.
struct ConfigError : Error
{
  using Error::Error;
};

//! A non-finite intermediate value was produced.
struct NumericError : Error
{
  using Error::Error;
};

inline void require(bool cond, const std::string& what)
{
  if (!cond) throw ContractError(what);
}

inline void require_config(bool cond, const std::string& what)
{
  if (!cond) throw ConfigError(what);
}

inline bool all_finite(const Vector& v)
{
  return v.allFinite();
}

//------------------------------------------------------------------------------
// Seeds

//! splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Hierarchical seed derivation: derive_seed(master, a, b, ...) depends on
//! every component and on their order.
template <typename... Ts>
constexpr std::uint64_t derive_seed(std::uint64_t master, Ts... parts)
{
  std::uint64_t h = mix64(master);
  ((h = mix64(h ^ mix64(static_cast<std::uint64_t>(parts) + 0x632be59bd9b4e019ULL))), ...);
  return h;
}

//------------------------------------------------------------------------------
// Random stream

//! Random stream built on mt19937_64 (whose output sequence is fixed by the
//! standard). The distributions are implemented here instead of using
//! <random>'s, whose algorithms are implementation-defined, so that seeded
//! instances reproduce across standard libraries.
class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  //! Uniform on [0, 1) with 53 random bits.
  double uniform()
  {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  //! Standard normal via Box-Muller; the second variate is cached.
  double normal()
  {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  //! Uniform integer in [0, bound) by rejection.
  std::uint64_t index(std::uint64_t bound)
  {
    if (bound == 0) throw ContractError("Rng::index: bound must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = 0;
    do {
      draw = engine_();
    } while (draw >= limit);
    return draw % bound;
  }

  Vector normal_vector(Index size, double stddev = 1.0)
  {
    Vector v(size);
    for (Index i = 0; i < size; ++i) v(i) = stddev * normal();
    return v;
  }

  Matrix normal_matrix(Index rows, Index cols, double stddev = 1.0)
  {
    // Filled row-major so the draw order matches the file layout.
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = stddev * normal();
    return m;
  }

  //! `count` distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<Index> subset(Index n, Index count)
  {
    if (count > n) throw ContractError("Rng::subset: count exceeds population");
    std::vector<Index> pool(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < count; ++i) {
      const auto j = i + static_cast<Index>(index(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(count));
    return pool;
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

//------------------------------------------------------------------------------
// Small linear-algebra helpers

//! Orthonormal basis of the column span of `m` (thin Q of a Householder QR).
//! Column signs are normalized so the R diagonal is nonnegative.
inline Matrix orthonormalize_columns(const Matrix& m)
{
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  const Matrix r = qr.matrixQR().topRows(m.cols()).template triangularView<Eigen::Upper>();
  for (Index j = 0; j < m.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

inline double smallest_singular_value(const Matrix& m)
{
  if (m.cols() == 0 || m.rows() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (m.rows() < m.cols()) return 0.0;
  return s(s.size() - 1);
}

inline double largest_singular_value(const Matrix& m)
{
  if (m.cols() == 0 || m.rows() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

} // namespace gpgd
