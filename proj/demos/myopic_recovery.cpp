// Signal = G(z) + a 5-sparse innovation. The myopic solver recovers both
// parts; the sparse block is kept in coefficient form.

#include "gpgd/gpgd.hpp"

#include <cstdio>

using namespace gpgd;

int main()
{
  const Index n = 100, k = 5, l = 5, m = 60;
  Rng rng(11);
  const GeneratorNetwork g = make_linear_generator(orthonormalize_columns(rng.normal_matrix(n, k)));
  const OrthoBasis basis = OrthoBasis::identity(n);

  std::vector<Index> support = rng.subset(n, l);
  Vector coeffs = Vector::Zero(n);
  for (Index i : support) coeffs(i) = rng.normal();
  const Vector u_star = g.forward(rng.normal_vector(k));
  const Vector v_star = basis.synthesize(coeffs);
  const Vector x_star = u_star + v_star;

  const Matrix a = rng.normal_matrix(m, n, 1.0 / std::sqrt(static_cast<double>(m)));
  const Objective f = Objective::least_squares(a, a * x_star);

  const auto curv = restricted_curvature(a, minkowski_subspace(g.layers().front().weights, basis, support));
  const double mu = subspace_incoherence(g.layers().front().weights, basis, support);
  const MyopicRate rate = myopic_rate(curv.lambda_min, curv.lambda_max, mu);
  std::printf("alpha %.4f  beta %.4f  mu %.4f\n", curv.lambda_min, curv.lambda_max, mu);
  if (rate.applicable) std::printf("predicted factor %.4f\n", rate.value);
  else std::printf("predicted factor n/a: %s\n", rate.reason.c_str());

  SolverConfig sc;
  sc.mode = SolverMode::myopic;
  sc.sparsity = l;
  sc.eta = 1.0 / curv.lambda_max;
  sc.max_iters = 200;
  const IterationTrace tr = myopic_pgd(f, g, ProjectionConfig{}, &basis, sc, x_star);

  std::printf("iterations %d\n", tr.iterations());
  std::printf("||u - u*|| %.3e  ||v - v*|| %.3e  ||x - x*|| %.3e\n", (*tr.final_u - u_star).norm(),
              (*tr.final_v - v_star).norm(), *tr.records.back().dist_to_truth);
  std::printf("largest sparse support %d\n", static_cast<int>(tr.max_sparse_support));
}
