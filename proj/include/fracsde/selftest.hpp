#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fracsde {

struct GradientCheck {
  double relative_error = 0.0;  // |g - g_fd| / |g_fd| over all parameters
  double loss = 0.0;
  std::size_t parameters = 0;
};

/// End-to-end loss gradient (subgradient, rollout adjoint, network VJP)
/// against central differences on a random configuration: width 8, d = 1,
/// 12 fine steps observed every 3rd step.
GradientCheck gradient_check(std::uint64_t seed, double step = 1e-6);

/// Largest |empirical - exact| / standard error over the entries of the fBm
/// covariance, for Davies-Harte (`cholesky` false) or the Cholesky sampler.
double covariance_z_score(double hurst, long m, long replicas, std::uint64_t seed, bool cholesky);

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Finite-difference and covariance oracle suites at a quick size.
std::vector<SelftestResult> run_selftest(std::uint64_t seed);

}  // namespace fracsde
