// Recover a signal in the range of a linear generator from 40 random
// measurements, then compare the observed per-step contraction with the
// factor predicted from the restricted curvature of A on span(W).

#include "gpgd/gpgd.hpp"

#include <cstdio>

using namespace gpgd;

int main()
{
  const Index n = 100, k = 5, m = 40;
  Rng rng(7);
  const GeneratorNetwork g = make_linear_generator(orthonormalize_columns(rng.normal_matrix(n, k)));
  const Vector x_star = g.forward(rng.normal_vector(k));
  const Matrix a = rng.normal_matrix(m, n, 1.0 / std::sqrt(static_cast<double>(m)));
  const Objective f = Objective::least_squares(a, a * x_star);

  const auto curv = restricted_curvature(a, g.layers().front().weights);
  std::printf("alpha %.4f  beta %.4f  beta/alpha %.3f\n", curv.lambda_min, curv.lambda_max,
              curv.lambda_max / curv.lambda_min);

  SolverConfig sc;
  sc.eta = 1.0 / curv.lambda_max;
  sc.max_iters = 300;
  sc.stop_gap = 1e-20;
  const IterationTrace tr = epsilon_pgd(f, g, ProjectionConfig{}, sc, std::nullopt, x_star);

  for (std::size_t t = 0; t < tr.records.size(); t += 10)
    std::printf("t %3d  gap %.3e  dist %.3e\n", tr.records[t].t, *tr.records[t].gap, *tr.records[t].dist_to_truth);

  ContractionOptions opt;
  opt.rho = pgd_rate(curv.lambda_min, curv.lambda_max);
  const ContractionReport rep = contraction_report(tr, opt);
  std::printf("fitted rate %.4f, bound %.4f, violations %d of %d steps\n", rep.fitted_rate.value_or(0.0), opt.rho,
              rep.violations, rep.checked_steps);
}
