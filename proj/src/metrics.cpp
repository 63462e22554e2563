#include "fracsde/metrics.hpp"

#include "fracsde/rng.hpp"

#include <algorithm>
#include <random>

namespace fracsde {

double batch_loss(const std::vector<PathDiff>& diffs) {
  if (diffs.empty()) throw std::invalid_argument("batch_loss needs at least one trajectory");
  double sum = 0.0;
  for (const PathDiff& d : diffs) sum += frac_path_norm(d);
  return sum / double(diffs.size());
}

std::vector<EvalPoint> uniform_eval_points(Eigen::Index dim, double horizon, double box,
                                           Eigen::Index count, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> time(0.0, horizon);
  std::uniform_real_distribution<double> space(-box, box);
  std::vector<EvalPoint> points(static_cast<std::size_t>(count));
  for (auto& p : points) {
    p.t = time(rng);
    p.x.resize(dim);
    for (Eigen::Index c = 0; c < dim; ++c) p.x[c] = space(rng);
  }
  return points;
}

RecoveryReport recovery_metrics(const CoefficientField& estimate, const CoefficientField& truth,
                                const std::vector<EvalPoint>& points) {
  if (estimate.dim != truth.dim) throw std::invalid_argument("field dimensions differ");
  if (points.empty()) throw std::invalid_argument("recovery_metrics needs evaluation points");
  RecoveryReport report;
  report.samples = Eigen::Index(points.size());
  double drift_sq = 0.0, diff_sq = 0.0, rel_drift_sq = 0.0, rel_diff_sq = 0.0;
  for (const EvalPoint& p : points) {
    const Eigen::VectorXd b_true = truth.drift(p.t, p.x);
    const Eigen::VectorXd s_true = truth.diffusion(p.t, p.x);
    const double drift_err = (estimate.drift(p.t, p.x) - b_true).norm();
    const double diff_err = (estimate.diffusion(p.t, p.x) - s_true).norm();
    drift_sq += drift_err * drift_err;
    diff_sq += diff_err * diff_err;
    const double b_norm = b_true.norm();
    if (b_norm > 0.0) {
      rel_drift_sq += (drift_err / b_norm) * (drift_err / b_norm);
    } else {
      ++report.excluded_drift;
    }
    const double s_norm = s_true.norm();
    rel_diff_sq += (diff_err / s_norm) * (diff_err / s_norm);
  }
  const double n = double(points.size());
  report.l2_drift = std::sqrt(drift_sq / n);
  report.l2_diffusion = std::sqrt(diff_sq / n);
  const double kept = n - double(report.excluded_drift);
  report.rel_drift = kept > 0.0 ? std::sqrt(rel_drift_sq / kept) : 0.0;
  report.rel_diffusion = std::sqrt(rel_diff_sq / n);
  return report;
}

double holder_diff_seminorm(const FbmPath& a, const FbmPath& b, double alpha) {
  if (a.values.size() != b.values.size() || a.dt != b.dt) {
    throw std::invalid_argument("holder_diff_seminorm needs identical grids");
  }
  const Eigen::VectorXd g = a.values - b.values;
  const Eigen::Index n = g.size();
  const double dt = a.dt;
  Eigen::VectorXd increment_weight(n), integral_weight(n);
  for (Eigen::Index j = 1; j < n; ++j) {
    increment_weight[j] = 1.0 / std::pow(double(j) * dt, 1.0 - alpha);
    integral_weight[j] = dt / std::pow(double(j) * dt, 2.0 - alpha);
  }
  double best = 0.0;
  for (Eigen::Index t = 1; t < n; ++t) {
    double inner = 0.0;  // sum over s < r < t, grown as s decreases
    for (Eigen::Index s = t - 1; s >= 0; --s) {
      if (s + 1 < t) inner += std::abs(g[t] - g[s + 1]) * integral_weight[t - s - 1];
      best = std::max(best, std::abs(g[t] - g[s]) * increment_weight[t - s] + inner);
    }
  }
  return best;
}

}  // namespace fracsde
