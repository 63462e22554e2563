#pragma once

#include "fracsde/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace fracsde {

/// Single-hidden-layer tanh network y = W2 tanh(W1 u + b1) + b2.
///
/// All parameters live in one flat vector (W1 column-major, b1, W2
/// column-major, b2) so that optimizers, clipping and checkpoints treat the
/// network as a single array. The accessors return Eigen maps into it.
template <typename Scalar>
class Mlp {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  Mlp() = default;
  Mlp(Eigen::Index inputs, Eigen::Index width, Eigen::Index outputs)
      : inputs_(inputs), width_(width), outputs_(outputs),
        params_(Vector::Zero(parameter_count(inputs, width, outputs))) {
    if (inputs < 1 || width < 1 || outputs < 1) {
      throw std::invalid_argument("network dimensions must be positive");
    }
  }

  static Eigen::Index parameter_count(Eigen::Index inputs, Eigen::Index width,
                                      Eigen::Index outputs) {
    return width * inputs + width + outputs * width + outputs;
  }

  Eigen::Index inputs() const { return inputs_; }
  Eigen::Index width() const { return width_; }
  Eigen::Index outputs() const { return outputs_; }
  Eigen::Index size() const { return params_.size(); }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  MatrixMap W1() { return {params_.data(), width_, inputs_}; }
  VectorMap b1() { return {params_.data() + off_b1(), width_}; }
  MatrixMap W2() { return {params_.data() + off_W2(), outputs_, width_}; }
  VectorMap b2() { return {params_.data() + off_b2(), outputs_}; }
  ConstMatrixMap W1() const { return {params_.data(), width_, inputs_}; }
  ConstVectorMap b1() const { return {params_.data() + off_b1(), width_}; }
  ConstMatrixMap W2() const { return {params_.data() + off_W2(), outputs_, width_}; }
  ConstVectorMap b2() const { return {params_.data() + off_b2(), outputs_}; }

  // Gradient vectors share the parameter layout.
  static MatrixMap W1_of(Vector& flat, const Mlp& net) { return {flat.data(), net.width_, net.inputs_}; }
  static VectorMap b1_of(Vector& flat, const Mlp& net) { return {flat.data() + net.off_b1(), net.width_}; }
  static MatrixMap W2_of(Vector& flat, const Mlp& net) {
    return {flat.data() + net.off_W2(), net.outputs_, net.width_};
  }
  static VectorMap b2_of(Vector& flat, const Mlp& net) { return {flat.data() + net.off_b2(), net.outputs_}; }

 private:
  Eigen::Index off_b1() const { return width_ * inputs_; }
  Eigen::Index off_W2() const { return off_b1() + width_; }
  Eigen::Index off_b2() const { return off_W2() + outputs_ * width_; }

  Eigen::Index inputs_ = 0;
  Eigen::Index width_ = 0;
  Eigen::Index outputs_ = 0;
  Vector params_;
};

using MlpD = Mlp<double>;

/// Entries uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
inline MlpD init_mlp(Eigen::Index inputs, Eigen::Index width, Eigen::Index outputs, Rng& rng) {
  MlpD net(inputs, width, outputs);
  std::uniform_real_distribution<double> first(-1.0 / std::sqrt(double(inputs)),
                                               1.0 / std::sqrt(double(inputs)));
  std::uniform_real_distribution<double> second(-1.0 / std::sqrt(double(width)),
                                                1.0 / std::sqrt(double(width)));
  for (Eigen::Index i = 0; i < net.W1().size(); ++i) net.W1().data()[i] = first(rng);
  for (Eigen::Index i = 0; i < width; ++i) net.b1()[i] = first(rng);
  for (Eigen::Index i = 0; i < net.W2().size(); ++i) net.W2().data()[i] = second(rng);
  for (Eigen::Index i = 0; i < outputs; ++i) net.b2()[i] = second(rng);
  return net;
}

/// Stacks (t, x_1, ..., x_d).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> time_state_input(
    typename Derived::Scalar t, const Eigen::MatrixBase<Derived>& x) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> input(x.size() + 1);
  input[0] = t;
  input.tail(x.size()) = x;
  return input;
}

template <typename Scalar, typename Derived>
void check_input(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  if (input.size() != net.inputs()) {
    throw std::invalid_argument("network expects " + std::to_string(net.inputs()) +
                                " inputs, got " + std::to_string(input.size()));
  }
}

template <typename Scalar, typename Derived>
typename Mlp<Scalar>::Vector hidden_activations(const Mlp<Scalar>& net,
                                                const Eigen::MatrixBase<Derived>& input) {
  check_input(net, input);
  return (net.W1() * input + net.b1()).array().tanh().matrix();
}

template <typename Scalar, typename Derived>
typename Mlp<Scalar>::Vector forward(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  return net.W2() * hidden_activations(net, input) + net.b2();
}

/// Reverse-mode product: accumulates d<upstream, net(input)>/d(params) into
/// param_grad and returns the gradient with respect to the input. `hidden`
/// must be hidden_activations(net, input).
template <typename Scalar, typename DerivedIn, typename DerivedUp>
typename Mlp<Scalar>::Vector vjp_accumulate(const Mlp<Scalar>& net,
                                            const Eigen::MatrixBase<DerivedIn>& input,
                                            const typename Mlp<Scalar>::Vector& hidden,
                                            const Eigen::MatrixBase<DerivedUp>& upstream,
                                            typename Mlp<Scalar>::Vector& param_grad) {
  if (upstream.size() != net.outputs() || param_grad.size() != net.size()) {
    throw std::invalid_argument("vjp shape mismatch");
  }
  check_input(net, input);
  Mlp<Scalar>::W2_of(param_grad, net).noalias() += upstream * hidden.transpose();
  Mlp<Scalar>::b2_of(param_grad, net) += upstream;
  const typename Mlp<Scalar>::Vector pre =
      ((net.W2().transpose() * upstream).array() * (Scalar(1) - hidden.array().square())).matrix();
  Mlp<Scalar>::W1_of(param_grad, net).noalias() += pre * input.transpose();
  Mlp<Scalar>::b1_of(param_grad, net) += pre;
  return net.W1().transpose() * pre;
}

template <typename Scalar>
struct MlpGradient {
  typename Mlp<Scalar>::Vector params;
  typename Mlp<Scalar>::Vector input;
};

template <typename Scalar, typename DerivedIn, typename DerivedUp>
MlpGradient<Scalar> vjp(const Mlp<Scalar>& net, const Eigen::MatrixBase<DerivedIn>& input,
                        const Eigen::MatrixBase<DerivedUp>& upstream) {
  MlpGradient<Scalar> grad;
  grad.params = Mlp<Scalar>::Vector::Zero(net.size());
  const auto hidden = hidden_activations(net, input);
  grad.input = vjp_accumulate(net, input, hidden, upstream, grad.params);
  return grad;
}

inline constexpr double kDiffusionFloor = 1e-3;

/// softplus(raw) + floor, evaluated without overflow for large |raw|.
template <typename Derived>
auto positive_diffusion(const Eigen::MatrixBase<Derived>& raw) {
  using Scalar = typename Derived::Scalar;
  return (raw.array().max(Scalar(0)) + (-raw.array().abs()).exp().log1p() + Scalar(kDiffusionFloor))
      .matrix();
}

/// d positive_diffusion / d raw = logistic(raw).
template <typename Derived>
auto positive_diffusion_slope(const Eigen::MatrixBase<Derived>& raw) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) / (Scalar(1) + (-raw.array()).exp())).matrix();
}

template <typename Scalar>
Mlp<Scalar> clip_params(Mlp<Scalar> net, Scalar bound) {
  if (!(bound > Scalar(0))) throw std::invalid_argument("clip bound must be positive");
  net.params() = net.params().cwiseMax(-bound).cwiseMin(bound);
  return net;
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(Eigen::Index size, AdamConfig cfg)
      : config(cfg), first_moment(Eigen::VectorXd::Zero(size)),
        second_moment(Eigen::VectorXd::Zero(size)) {}
};

/// Adam with decoupled weight decay:
/// p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p).
inline void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
                      const Eigen::Ref<const Eigen::VectorXd>& grad) {
  if (grad.size() != params.size() || state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step shape mismatch");
  }
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw std::runtime_error("non-finite gradient entry " + std::to_string(i) + " at Adam step " +
                               std::to_string(state.step + 1));
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * grad;
  state.second_moment = c.beta2 * state.second_moment + (1.0 - c.beta2) * grad.cwiseAbs2();
  const double correction1 = 1.0 - std::pow(c.beta1, double(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, double(state.step));
  params.array() -= c.learning_rate *
                    ((state.first_moment.array() / correction1) /
                         ((state.second_moment.array() / correction2).sqrt() + c.epsilon) +
                     c.weight_decay * params.array());
}

}  // namespace fracsde
