#include "fracsde/selftest.hpp"

#include "fracsde/fields.hpp"
#include "fracsde/io.hpp"
#include "fracsde/noise.hpp"
#include "fracsde/sde.hpp"
#include "fracsde/train.hpp"

#include <cmath>
#include <random>

namespace fracsde {

namespace {

constexpr Eigen::Index kSteps = 12;
constexpr Eigen::Index kStride = 3;

double sample_loss(const NeuralField& field, const Sample& sample, const Eigen::MatrixXd& noise,
                   double alpha) {
  return trajectory_gradient(field, sample, noise, kStride, alpha).loss;
}

}  // namespace

GradientCheck gradient_check(std::uint64_t seed, double step) {
  Rng rng(derive_seed(seed, "gradient-check"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double dt = 0.02 + 0.08 * unit(rng);
  const double alpha = 0.1 + 0.35 * unit(rng);

  NeuralField field = init_neural_field(1, 8, rng);
  const NeuralField other = init_neural_field(1, 8, rng);
  const Eigen::MatrixXd noise = standard_normal(rng, kSteps).transpose() * std::sqrt(dt);
  const Eigen::VectorXd x0 = standard_normal(rng, 1);

  // Observations from a different field, so the loss is well away from 0.
  Sample sample;
  sample.trajectory = euler_rollout(other, x0, standard_normal(rng, kSteps).transpose() * std::sqrt(dt), dt);
  sample.observations = downsample(sample.trajectory, kStride);
  sample.observations.values.rightCols(kSteps / kStride) +=
      0.3 * standard_normal(rng, kSteps / kStride).transpose();

  const TrajectoryGradient exact = trajectory_gradient(field, sample, noise, kStride, alpha);
  Eigen::VectorXd analytic(field.drift.size() + field.diffusion.size());
  analytic << exact.gradient.drift, exact.gradient.diffusion;

  Eigen::VectorXd numeric(analytic.size());
  Eigen::Index slot = 0;
  for (MlpD* net : {&field.drift, &field.diffusion}) {
    for (Eigen::Index i = 0; i < net->size(); ++i, ++slot) {
      const double saved = net->params()[i];
      net->params()[i] = saved + step;
      const double up = sample_loss(field, sample, noise, alpha);
      net->params()[i] = saved - step;
      const double down = sample_loss(field, sample, noise, alpha);
      net->params()[i] = saved;
      numeric[slot] = (up - down) / (2.0 * step);
    }
  }
  GradientCheck check;
  check.loss = exact.loss;
  check.parameters = std::size_t(analytic.size());
  check.relative_error = (analytic - numeric).norm() / std::max(numeric.norm(), 1e-300);
  return check;
}

double covariance_z_score(double hurst, long m, long replicas, std::uint64_t seed, bool cholesky) {
  const double dt = 1.0 / double(m);
  Eigen::MatrixXd paths(replicas, m);
  if (cholesky) {
    const CholeskySampler sampler(hurst, m, dt);
    Rng rng(derive_seed(seed, "cholesky-cov"));
    for (long r = 0; r < replicas; ++r) paths.row(r) = sampler.sample(rng).values.tail(m).transpose();
  } else {
    const DaviesHarteSampler sampler(hurst, m, dt);
    Rng rng(derive_seed(seed, "davies-harte-cov"));
    for (long r = 0; r < replicas; ++r) paths.row(r) = sampler.sample(rng).values.tail(m).transpose();
  }
  const Eigen::MatrixXd empirical = (paths.transpose() * paths) / double(replicas);
  const Eigen::MatrixXd exact = fbm_covariance_matrix(hurst, m, dt);
  double worst = 0.0;
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j <= i; ++j) {
      // Isserlis: Var(B_i B_j) = S_ii S_jj + S_ij^2.
      const double var = exact(i, i) * exact(j, j) + exact(i, j) * exact(i, j);
      const double se = std::sqrt(var / double(replicas));
      worst = std::max(worst, std::abs(empirical(i, j) - exact(i, j)) / se);
    }
  }
  return worst;
}

std::vector<SelftestResult> run_selftest(std::uint64_t seed) {
  std::vector<SelftestResult> results;

  double worst_gradient = 0.0;
  for (std::uint64_t i = 0; i < 5; ++i) {
    worst_gradient = std::max(worst_gradient, gradient_check(derive_seed(seed, "selftest-grad", i)).relative_error);
  }
  results.push_back({"gradient finite differences", worst_gradient <= 1e-4,
                     "max relative error " + format_double(worst_gradient)});

  for (bool cholesky : {false, true}) {
    const double z = covariance_z_score(0.7, 16, 20000, seed, cholesky);
    results.push_back({cholesky ? "cholesky covariance" : "davies-harte covariance", z <= 4.5,
                       "max |z| " + format_double(z)});
  }

  const double self = cross_factor(0.7, 0.7);
  results.push_back({"coupling self-correlation", std::abs(self - 1.0) <= 1e-12,
                     "f(0.7, 0.7) = " + format_double(self)});
  return results;
}

}  // namespace fracsde
