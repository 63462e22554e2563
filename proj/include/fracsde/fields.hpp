#pragma once

#include "fracsde/net.hpp"

#include <Eigen/Core>

#include <functional>

namespace fracsde {

/// Drift b(t, x) and diagonal diffusion sigma(t, x) of a d-dimensional SDE.
/// Diffusion is always the vector of diagonal entries.
struct CoefficientField {
  using Map = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

  Eigen::Index dim = 1;
  Map drift;
  Map diffusion;
};

/// b(t,x) = -x + tanh(x)/4, sigma(t,x) = 0.5 + 0.2 tanh(x).
CoefficientField benchmark_1d();

/// b(t,x) = diag(-0.8,-0.4) x + (0.25 sin 2 pi t, 0.2 cos 2 pi t),
/// sigma(t,x) = 0.6 + 0.15 tanh(x) componentwise.
CoefficientField benchmark_2d();

CoefficientField benchmark(Eigen::Index dim);

/// b(t,x) = -rate * x, sigma = constant (possibly zero). Used by the
/// deterministic-order controls.
CoefficientField linear_field(Eigen::Index dim, double rate, double sigma);

/// Drift and diffusion networks. The diffusion network's output passes
/// through positive_diffusion.
struct NeuralField {
  MlpD drift;
  MlpD diffusion;

  Eigen::Index dim() const { return drift.outputs(); }

  Eigen::VectorXd drift_at(double t, const Eigen::VectorXd& x) const {
    return forward(drift, time_state_input(t, x));
  }
  Eigen::VectorXd diffusion_at(double t, const Eigen::VectorXd& x) const {
    return positive_diffusion(forward(diffusion, time_state_input(t, x)));
  }

  CoefficientField as_field() const;
};

NeuralField init_neural_field(Eigen::Index dim, Eigen::Index width, Rng& rng);

}  // namespace fracsde
