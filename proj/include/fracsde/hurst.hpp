#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace fracsde {

inline constexpr double kHurstLower = 0.5 + 1e-6;
inline constexpr double kHurstUpper = 0.99;

struct HurstEstimate {
  double value = 0.0;  // clipped into [kHurstLower, kHurstUpper]
  double raw = 0.0;
  Eigen::Index samples = 0;
  bool clipped = false;
};

/// Thrown when a series has vanishing second differences.
class DegenerateSeries : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Second-order increment-ratio sums of one series: the sum of squared
/// second differences on the full grid and on its stride-2 subsample.
struct IncrementRatioSums {
  double fine = 0.0;
  double coarse = 0.0;
  double floor = 0.0;  // roundoff level below which a sum counts as zero
};

IncrementRatioSums increment_ratio_sums(const Eigen::Ref<const Eigen::VectorXd>& series);

/// H = 1/2 - log(fine / coarse) / (2 log 2), before clipping.
double raw_hurst(const IncrementRatioSums& sums);

HurstEstimate clip_hurst(double raw, Eigen::Index samples);

/// Estimate from a scalar series (length >= 9).
HurstEstimate estimate_hurst(const Eigen::Ref<const Eigen::VectorXd>& series);

/// Estimate from one component (row) of a d x L series.
HurstEstimate estimate_hurst_component(const Eigen::MatrixXd& series, Eigen::Index component);

/// Per-component raw estimates averaged, then clipped.
HurstEstimate estimate_hurst_multi(const Eigen::MatrixXd& series);

/// Pools the sums of many series (each d x L) component by component before
/// taking the ratio; the per-component raw values are averaged.
HurstEstimate estimate_hurst_pooled(const std::vector<Eigen::MatrixXd>& series);

}  // namespace fracsde
