#include "fracsde/hurst.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace fracsde {

IncrementRatioSums increment_ratio_sums(const Eigen::Ref<const Eigen::VectorXd>& series) {
  const Eigen::Index n = series.size();
  if (n < 9) {
    throw std::invalid_argument("Hurst estimation needs at least 9 points, got " + std::to_string(n));
  }
  IncrementRatioSums sums;
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * series.cwiseAbs().maxCoeff();
  sums.floor = double(n) * noise * noise;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double second = series[i + 1] - 2.0 * series[i] + series[i - 1];
    sums.fine += second * second;
  }
  // Stride-2 subsample from index 0; an odd tail is dropped.
  for (Eigen::Index i = 2; i + 2 < n; i += 2) {
    const double second = series[i + 2] - 2.0 * series[i] + series[i - 2];
    sums.coarse += second * second;
  }
  return sums;
}

double raw_hurst(const IncrementRatioSums& sums) {
  if (!(sums.fine > sums.floor) || !(sums.coarse > sums.floor)) {
    throw DegenerateSeries("degenerate series: vanishing second differences");
  }
  return 0.5 - std::log(sums.fine / sums.coarse) / (2.0 * std::numbers::ln2);
}

HurstEstimate clip_hurst(double raw, Eigen::Index samples) {
  HurstEstimate est;
  est.raw = raw;
  est.samples = samples;
  est.value = std::clamp(raw, kHurstLower, kHurstUpper);
  est.clipped = est.value != raw;
  return est;
}

HurstEstimate estimate_hurst(const Eigen::Ref<const Eigen::VectorXd>& series) {
  return clip_hurst(raw_hurst(increment_ratio_sums(series)), series.size());
}

HurstEstimate estimate_hurst_component(const Eigen::MatrixXd& series, Eigen::Index component) {
  if (component < 0 || component >= series.rows()) throw std::out_of_range("component out of range");
  const Eigen::VectorXd row = series.row(component).transpose();
  return estimate_hurst(row);
}

HurstEstimate estimate_hurst_multi(const Eigen::MatrixXd& series) {
  return estimate_hurst_pooled({series});
}

HurstEstimate estimate_hurst_pooled(const std::vector<Eigen::MatrixXd>& series) {
  if (series.empty()) throw std::invalid_argument("no series to estimate from");
  const Eigen::Index d = series.front().rows();
  double raw_sum = 0.0;
  Eigen::Index samples = 0;
  for (Eigen::Index c = 0; c < d; ++c) {
    IncrementRatioSums pooled;
    for (const auto& s : series) {
      if (s.rows() != d) throw std::invalid_argument("series dimensions differ");
      const IncrementRatioSums part = increment_ratio_sums(s.row(c).transpose());
      pooled.fine += part.fine;
      pooled.coarse += part.coarse;
      pooled.floor += part.floor;
      if (c == 0) samples += s.cols();
    }
    raw_sum += raw_hurst(pooled);
  }
  return clip_hurst(raw_sum / double(d), samples);
}

}  // namespace fracsde
