// Sampled regularity constants for a small ReLU generator under a logistic
// GLM loss, next to the exact values for the linear least-squares case.

#include "gpgd/gpgd.hpp"

#include <cstdio>

using namespace gpgd;

int main()
{
  const Index n = 50, m = 30;
  Rng rng(3);
  const Matrix a = rng.normal_matrix(m, n, 1.0 / std::sqrt(static_cast<double>(m)));

  // Linear generator: sampled values converge on the eigenvalue range.
  const GeneratorNetwork lin = make_linear_generator(orthonormalize_columns(rng.normal_matrix(n, 4)));
  const Objective ls = Objective::least_squares(a, Vector::Zero(m));
  const auto exact = restricted_curvature(a, lin.layers().front().weights);
  for (int samples : {50, 500, 2000}) {
    const RscRssEstimate e = estimate_rsc_rss(ls, ConstraintSampler(lin), samples, 1);
    std::printf("linear, N %5d: alpha_hat %.4f  beta_hat %.4f   (exact %.4f, %.4f)\n", samples, e.alpha, e.beta,
                exact.lambda_min, exact.lambda_max);
  }

  // ReLU generator with a logistic loss: no closed form, only samples.
  RandomGeneratorSpec spec;
  spec.latent_dim = 4;
  spec.output_dim = n;
  spec.depth = 2;
  spec.hidden_widths = {16};
  const GeneratorNetwork relu = make_random_generator(spec, 5);
  const Vector x_star = relu.forward(rng.normal_vector(4));
  Vector y = a * x_star;
  for (Index i = 0; i < m; ++i) y(i) = 1.0 / (1.0 + std::exp(-y(i)));
  const Objective glm = Objective::glm(a, y, GlmLink::sigmoid);
  const RscRssEstimate e = estimate_rsc_rss(glm, ConstraintSampler(relu), 1000, 2);
  std::printf("relu + logistic, N 1000: alpha_hat %.4f  beta_hat %.4f\n", e.alpha, e.beta);

  const DiameterGamma dg = estimate_diameter_gamma(glm, x_star, ConstraintSampler(relu), 200, 3);
  std::printf("diameter_hat %.4f  gamma_hat %.3e\n", dg.delta, dg.gamma.value_or(0.0));

  // Incoherence between span(W) and 3-sparse vectors in a random basis.
  const OrthoBasis basis = OrthoBasis::random(n, 9);
  std::printf("mu_hat (l = 3) %.4f\n", estimate_incoherence(ConstraintSampler(lin), basis, 3, 2000, 4));
}
