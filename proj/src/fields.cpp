#include "fracsde/fields.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace fracsde {

CoefficientField benchmark_1d() {
  CoefficientField field;
  field.dim = 1;
  field.drift = [](double, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return -x.array() + 0.25 * x.array().tanh();
  };
  field.diffusion = [](double, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return 0.5 + 0.2 * x.array().tanh();
  };
  return field;
}

CoefficientField benchmark_2d() {
  CoefficientField field;
  field.dim = 2;
  field.drift = [](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const double phase = 2.0 * std::numbers::pi * t;
    return Eigen::Vector2d(-0.8 * x[0] + 0.25 * std::sin(phase),
                           -0.4 * x[1] + 0.2 * std::cos(phase));
  };
  field.diffusion = [](double, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return 0.6 + 0.15 * x.array().tanh();
  };
  return field;
}

CoefficientField benchmark(Eigen::Index dim) {
  if (dim == 1) return benchmark_1d();
  if (dim == 2) return benchmark_2d();
  throw std::invalid_argument("no benchmark field of dimension " + std::to_string(dim));
}

CoefficientField linear_field(Eigen::Index dim, double rate, double sigma) {
  CoefficientField field;
  field.dim = dim;
  field.drift = [rate](double, const Eigen::VectorXd& x) -> Eigen::VectorXd { return -rate * x; };
  field.diffusion = [dim, sigma](double, const Eigen::VectorXd&) -> Eigen::VectorXd {
    return Eigen::VectorXd::Constant(dim, sigma);
  };
  return field;
}

CoefficientField NeuralField::as_field() const {
  CoefficientField field;
  field.dim = dim();
  field.drift = [net = *this](double t, const Eigen::VectorXd& x) { return net.drift_at(t, x); };
  field.diffusion = [net = *this](double t, const Eigen::VectorXd& x) {
    return net.diffusion_at(t, x);
  };
  return field;
}

NeuralField init_neural_field(Eigen::Index dim, Eigen::Index width, Rng& rng) {
  NeuralField field;
  field.drift = init_mlp(dim + 1, width, dim, rng);
  field.diffusion = init_mlp(dim + 1, width, dim, rng);
  return field;
}

}  // namespace fracsde
