#pragma once

#include "fracsde/fields.hpp"
#include "fracsde/noise.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fracsde {

/// Coarse-grid difference f(t_m) = simulated - realized, one column per t_m.
struct PathDiff {
  Eigen::MatrixXd values;
  double dt = 0.0;
  double alpha = 0.25;
};

/// Default fractional order: midpoint of (1 - H, 1/2).
inline double default_alpha(double hurst) { return (1.0 - hurst + 0.5) / 2.0; }

namespace detail {

// w_j = dt / (j dt)^{alpha + 1}, j = 1..count
inline Eigen::VectorXd fractional_weights(Eigen::Index count, double dt, double alpha) {
  Eigen::VectorXd w(count + 1);
  w[0] = 0.0;
  for (Eigen::Index j = 1; j <= count; ++j) w[j] = dt / std::pow(double(j) * dt, alpha + 1.0);
  return w;
}

template <typename Derived>
typename Derived::Scalar frac_term(const Eigen::MatrixBase<Derived>& f, const Eigen::VectorXd& w,
                                   Eigen::Index m) {
  typename Derived::Scalar value = f.col(m).norm();
  for (Eigen::Index k = 0; k < m; ++k) value += w[m - k] * (f.col(m) - f.col(k)).norm();
  return value;
}

inline void check_path_diff(Eigen::Index columns, double dt) {
  if (columns < 1) throw std::invalid_argument("path difference needs at least one point");
  if (!(dt > 0.0)) throw std::invalid_argument("path difference needs dt > 0");
}

}  // namespace detail

/// Discrete fractional Sobolev norm
///   max_m ( |f_m| + sum_{k<m} |f_m - f_k| / ((m-k) dt)^{alpha+1} * dt )
/// together with the maximizing index (smallest on ties).
template <typename Derived>
std::pair<typename Derived::Scalar, Eigen::Index> frac_path_norm_argmax(
    const Eigen::MatrixBase<Derived>& f, double dt, double alpha) {
  detail::check_path_diff(f.cols(), dt);
  const Eigen::VectorXd w = detail::fractional_weights(f.cols() - 1, dt, alpha);
  typename Derived::Scalar best = detail::frac_term(f, w, 0);
  Eigen::Index arg = 0;
  for (Eigen::Index m = 1; m < f.cols(); ++m) {
    const auto value = detail::frac_term(f, w, m);
    if (value > best) {
      best = value;
      arg = m;
    }
  }
  return {best, arg};
}

template <typename Derived>
typename Derived::Scalar frac_path_norm(const Eigen::MatrixBase<Derived>& f, double dt, double alpha) {
  return frac_path_norm_argmax(f, dt, alpha).first;
}

inline double frac_path_norm(const PathDiff& diff) {
  return frac_path_norm(diff.values, diff.dt, diff.alpha);
}

/// Gradient of the selected branch of frac_path_norm with respect to every
/// f(t_m). Kinks use v/|v| with 0 at v = 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> frac_norm_subgradient(
    const Eigen::MatrixBase<Derived>& f, double dt, double alpha) {
  using Scalar = typename Derived::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index m = frac_path_norm_argmax(f, dt, alpha).second;
  const Eigen::VectorXd w = detail::fractional_weights(f.cols() - 1, dt, alpha);
  const auto unit = [](const Vector& v) -> Vector {
    const Scalar n = v.norm();
    return n > Scalar(0) ? Vector(v / n) : Vector(Vector::Zero(v.size()));
  };
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> grad =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(f.rows(), f.cols());
  grad.col(m) += unit(f.col(m));
  for (Eigen::Index k = 0; k < m; ++k) {
    const Vector u = w[m - k] * unit(f.col(m) - f.col(k));
    grad.col(m) += u;
    grad.col(k) -= u;
  }
  return grad;
}

inline Eigen::MatrixXd frac_norm_subgradient(const PathDiff& diff) {
  return frac_norm_subgradient(diff.values, diff.dt, diff.alpha);
}

/// Mean of frac_path_norm over trajectories.
double batch_loss(const std::vector<PathDiff>& diffs);

struct RecoveryReport {
  double l2_drift = 0.0;
  double l2_diffusion = 0.0;
  double rel_drift = 0.0;
  double rel_diffusion = 0.0;
  Eigen::Index samples = 0;
  Eigen::Index excluded_drift = 0;  // points with zero true drift
};

struct EvalPoint {
  double t = 0.0;
  Eigen::VectorXd x;
};

/// `count` points uniform on [0, horizon] x [-box, box]^dim.
std::vector<EvalPoint> uniform_eval_points(Eigen::Index dim, double horizon, double box,
                                           Eigen::Index count, std::uint64_t seed);

RecoveryReport recovery_metrics(const CoefficientField& estimate, const CoefficientField& truth,
                                const std::vector<EvalPoint>& points);

/// Discrete |g|_{1,1-alpha} for g = a - b:
///   max_{s<t} |g_t - g_s| / (t-s)^{1-alpha} + sum_{s<r<t} |g_t - g_r| / (t-r)^{2-alpha} dt.
double holder_diff_seminorm(const FbmPath& a, const FbmPath& b, double alpha);

}  // namespace fracsde
