#pragma once

#include "fracsde/rng.hpp"

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include <complex>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace fracsde {

/// Fractional Brownian motion sampled on the grid t_i = i * dt, i = 0..m.
struct FbmPath {
  double hurst = 0.5;
  double dt = 1.0;
  Eigen::VectorXd values;  // values[0] == 0

  Eigen::Index steps() const { return values.size() - 1; }
  Eigen::VectorXd times() const;
  Eigen::VectorXd increments() const;
};

/// Two fBm paths with different Hurst indices driven by the same white noise.
struct CoupledPair {
  FbmPath a;
  FbmPath b;
  std::uint64_t seed = 0;
};

void require_hurst(double hurst);

/// E[B_t B_s] = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2.
template <typename Scalar>
Scalar fbm_covariance(Scalar hurst, Scalar t, Scalar s) {
  using std::abs;
  using std::pow;
  require_hurst(static_cast<double>(hurst));
  const Scalar two_h = Scalar(2) * hurst;
  return Scalar(0.5) * (pow(t, two_h) + pow(s, two_h) - pow(abs(t - s), two_h));
}

/// Autocovariance of fractional Gaussian noise with step dt at lag k.
double fgn_autocovariance(double hurst, double dt, Eigen::Index lag);

/// Dense covariance of (B_{dt}, ..., B_{m dt}).
Eigen::MatrixXd fbm_covariance_matrix(double hurst, Eigen::Index m, double dt);

/// Exact sampler for fBm on a uniform grid via circulant embedding of the
/// increment covariance. The eigenvalues are computed once per sampler.
class DaviesHarteSampler {
 public:
  DaviesHarteSampler(double hurst, Eigen::Index m, double dt);

  FbmPath sample(Rng& rng) const;
  /// Increments only (length m); cheaper than building the path.
  Eigen::VectorXd sample_increments(Rng& rng) const;

  Eigen::Index steps() const { return m_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

 private:
  double hurst_;
  Eigen::Index m_;
  double dt_;
  Eigen::VectorXd eigenvalues_;  // circulant spectrum, length 2m
};

FbmPath fbm_davies_harte(double hurst, Eigen::Index m, double dt, std::uint64_t seed);

/// Dense Cholesky sampler, used as the exactness oracle for Davies-Harte.
class CholeskySampler {
 public:
  static constexpr Eigen::Index kMaxSteps = 2048;

  CholeskySampler(double hurst, Eigen::Index m, double dt);

  FbmPath sample(Rng& rng) const;

 private:
  double hurst_;
  Eigen::Index m_;
  double dt_;
  Eigen::MatrixXd lower_;
};

FbmPath fbm_cholesky(double hurst, Eigen::Index m, double dt, std::uint64_t seed);

/// C_H such that the Mandelbrot-van Ness integral has Var(B_1) = 1.
double mvn_constant(double hurst);

/// Correlation of unit-lag increments of B^{H1} and B^{H2} under the
/// shared-noise Mandelbrot-van Ness coupling.
double cross_factor(double h1, double h2);

/// E[(increment of B^{H1} - increment of B^{H2})^2] over a lag v.
double cross_increment_variance(double h1, double h2, double v);

/// Discretization of the Mandelbrot-van Ness integral.
///
/// The white noise lives on cells of width h = dt / refinement covering
/// [-(m dt), m dt] uniformly, followed by a geometrically graded far past
/// down to -horizon_factor * (m dt). Each cell contributes the exact cell
/// average of the kernel times its Gaussian increment.
struct MvnConfig {
  double horizon_factor = 1e6;
  int refinement = 8;
  double past_grading = 1.05;

  static constexpr double kMinHorizonFactor = 2.0;
  static constexpr int kMinRefinement = 1;

  void validate() const;
};

/// The shared white noise of an MvN coupling. Holds the FFT of the uniform
/// section so several Hurst indices can reuse it.
class MvnNoise {
 public:
  MvnNoise(Eigen::Index m, double dt, std::uint64_t seed, MvnConfig config = {});

  FbmPath path(double hurst) const;

  Eigen::Index steps() const { return m_; }
  double dt() const { return dt_; }
  std::uint64_t seed() const { return seed_; }
  const MvnConfig& config() const { return config_; }

 private:
  Eigen::Index m_;
  double dt_;
  std::uint64_t seed_;
  MvnConfig config_;
  Eigen::Index fft_size_;
  std::vector<std::complex<double>> uniform_spectrum_;
  Eigen::VectorXd far_near_edge_;  // distance of each far cell's edge closest to 0
  Eigen::VectorXd far_width_;
  Eigen::VectorXd far_noise_;
};

CoupledPair mvn_coupled_pair(double h1, double h2, Eigen::Index m, double dt,
                             std::uint64_t seed, const MvnConfig& config = {});

/// CSV with header `t,value`.
void write_path_csv(const std::filesystem::path& path, const FbmPath& fbm);

}  // namespace fracsde
