#include "fracsde/sde.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fracsde {

namespace {

void check_rollout_inputs(Eigen::Index dim, const Eigen::VectorXd& x0,
                          const Eigen::MatrixXd& increments, double dt) {
  if (x0.size() != dim) {
    throw std::invalid_argument("initial state has dimension " + std::to_string(x0.size()) +
                                ", field has " + std::to_string(dim));
  }
  if (increments.rows() != dim) throw std::invalid_argument("increment dimension mismatch");
  if (increments.cols() < 1) throw std::invalid_argument("rollout needs at least one increment");
  if (!(dt > 0.0)) throw std::invalid_argument("rollout needs dt > 0");
  if (!x0.allFinite()) throw std::runtime_error("non-finite initial state");
}

void check_state(const Eigen::MatrixXd& states, Eigen::Index i) {
  if (!states.col(i).allFinite()) {
    throw std::runtime_error("non-finite state at step " + std::to_string(i));
  }
}

}  // namespace

Trajectory euler_rollout(const CoefficientField& field, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& increments, double dt) {
  check_rollout_inputs(field.dim, x0, increments, dt);
  const Eigen::Index n = increments.cols();
  Trajectory traj{dt, std::numeric_limits<double>::quiet_NaN(),
                  Eigen::MatrixXd(field.dim, n + 1), increments};
  traj.states.col(0) = x0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = dt * double(i);
    const Eigen::VectorXd x = traj.states.col(i);
    traj.states.col(i + 1) =
        x + field.drift(t, x) * dt + field.diffusion(t, x).cwiseProduct(increments.col(i));
    check_state(traj.states, i + 1);
  }
  return traj;
}

Trajectory euler_rollout(const NeuralField& field, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& increments, double dt) {
  const Eigen::Index d = field.dim();
  check_rollout_inputs(d, x0, increments, dt);
  const Eigen::Index n = increments.cols();
  Trajectory traj{dt, std::numeric_limits<double>::quiet_NaN(), Eigen::MatrixXd(d, n + 1),
                  increments};
  traj.states.col(0) = x0;
  Eigen::VectorXd input(d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    input[0] = dt * double(i);
    input.tail(d) = traj.states.col(i);
    const Eigen::VectorXd drift = forward(field.drift, input);
    const Eigen::VectorXd sigma = positive_diffusion(forward(field.diffusion, input));
    traj.states.col(i + 1) =
        traj.states.col(i) + drift * dt + sigma.cwiseProduct(increments.col(i));
    check_state(traj.states, i + 1);
  }
  return traj;
}

Observations downsample(const Trajectory& trajectory, Eigen::Index k) {
  if (k < 1) throw std::invalid_argument("downsample factor must be >= 1");
  const Eigen::Index steps = trajectory.states.cols() - 1;
  if (steps % k != 0) {
    throw std::invalid_argument("trajectory with " + std::to_string(steps) +
                                " steps is not divisible by k = " + std::to_string(k));
  }
  Observations obs{trajectory.dt * double(k),
                   Eigen::MatrixXd(trajectory.states.rows(), steps / k + 1)};
  for (Eigen::Index m = 0; m < obs.values.cols(); ++m) obs.values.col(m) = trajectory.states.col(m * k);
  return obs;
}

FieldGradient rollout_vjp(const NeuralField& field, const Trajectory& trajectory,
                          const Eigen::MatrixXd& upstream) {
  const Eigen::Index d = field.dim();
  const Eigen::Index n = trajectory.steps();
  if (upstream.rows() != d || upstream.cols() != n + 1 || trajectory.dim() != d ||
      trajectory.states.cols() != n + 1) {
    throw std::invalid_argument("rollout_vjp shape mismatch");
  }
  FieldGradient grad{Eigen::VectorXd::Zero(field.drift.size()),
                     Eigen::VectorXd::Zero(field.diffusion.size())};
  const double dt = trajectory.dt;
  Eigen::VectorXd adjoint = upstream.col(n);
  Eigen::VectorXd input(d + 1);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    input[0] = dt * double(i);
    input.tail(d) = trajectory.states.col(i);

    const Eigen::VectorXd drift_hidden = hidden_activations(field.drift, input);
    const Eigen::VectorXd drift_input_grad =
        vjp_accumulate(field.drift, input, drift_hidden, dt * adjoint, grad.drift);

    const Eigen::VectorXd diff_hidden = hidden_activations(field.diffusion, input);
    const Eigen::VectorXd raw = field.diffusion.W2() * diff_hidden + field.diffusion.b2();
    const Eigen::VectorXd raw_upstream =
        adjoint.cwiseProduct(trajectory.increments.col(i)).cwiseProduct(positive_diffusion_slope(raw));
    const Eigen::VectorXd diff_input_grad =
        vjp_accumulate(field.diffusion, input, diff_hidden, raw_upstream, grad.diffusion);

    adjoint += upstream.col(i) + drift_input_grad.tail(d) + diff_input_grad.tail(d);
  }
  return grad;
}

std::string to_string(NoiseGenerator generator) {
  return generator == NoiseGenerator::Mvn ? "mvn" : "davies-harte";
}

NoiseGenerator noise_generator_from_string(const std::string& name) {
  if (name == "davies-harte") return NoiseGenerator::DaviesHarte;
  if (name == "mvn") return NoiseGenerator::Mvn;
  throw std::invalid_argument("unknown noise generator '" + name + "'");
}

void DatasetConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  require_hurst(hurst);
  if (!(coarse_dt > 0.0)) throw std::invalid_argument("coarse_dt must be positive");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (M < 1) throw std::invalid_argument("M must be >= 1");
  if (n_train < 0 || n_val < 0 || n_test < 0 || total() < 1) {
    throw std::invalid_argument("split sizes must be non-negative with a positive total");
  }
  if (!(box > 0.0)) throw std::invalid_argument("box must be positive");
  if (noise == NoiseGenerator::Mvn) mvn.validate();
}

namespace {

class IncrementSource {
 public:
  IncrementSource(const DatasetConfig& config, double hurst)
      : config_(config), hurst_(hurst) {
    if (config.noise == NoiseGenerator::DaviesHarte) {
      davies_harte_.emplace(hurst, config.k * config.M, config.fine_dt());
    }
  }

  Eigen::MatrixXd draw(std::uint64_t noise_seed) const {
    const Eigen::Index steps = config_.k * config_.M;
    Eigen::MatrixXd increments(config_.dim, steps);
    for (Eigen::Index c = 0; c < config_.dim; ++c) {
      if (davies_harte_) {
        Rng rng(derive_seed(noise_seed, "fbm", std::uint64_t(c)));
        increments.row(c) = davies_harte_->sample_increments(rng).transpose();
      } else {
        const MvnNoise noise(steps, config_.fine_dt(), derive_seed(noise_seed, "mvn", std::uint64_t(c)),
                             config_.mvn);
        increments.row(c) = noise.path(hurst_).increments().transpose();
      }
    }
    return increments;
  }

 private:
  const DatasetConfig& config_;
  double hurst_;
  std::optional<DaviesHarteSampler> davies_harte_;
};

}  // namespace

Eigen::MatrixXd sample_increments(const DatasetConfig& config, std::uint64_t noise_seed,
                                  double hurst) {
  return IncrementSource(config, hurst).draw(noise_seed);
}

Dataset generate_dataset(const CoefficientField& field, const DatasetConfig& config) {
  config.validate();
  if (field.dim != config.dim) throw std::invalid_argument("field dimension does not match config");

  Dataset dataset;
  dataset.config = config;
  const IncrementSource source(config, config.hurst);
  const Eigen::Index total = config.total();
  const Eigen::Index max_regenerations = total / 100;

  for (Eigen::Index j = 0; j < total; ++j) {
    const std::uint64_t base = derive_seed(config.seed, "trajectory", std::uint64_t(j));
    for (std::uint64_t attempt = 0;; ++attempt) {
      const std::uint64_t noise_seed = derive_seed(base, "attempt", attempt);
      Rng rng(derive_seed(noise_seed, "x0"));
      const Eigen::VectorXd x0 =
          standard_normal(rng, config.dim).cwiseMax(-config.box).cwiseMin(config.box);
      try {
        Sample sample;
        sample.noise_seed = noise_seed;
        sample.trajectory = euler_rollout(field, x0, source.draw(noise_seed), config.fine_dt());
        sample.trajectory.hurst = config.hurst;
        sample.observations = downsample(sample.trajectory, config.k);
        if (j < config.n_train) {
          dataset.train.push_back(std::move(sample));
        } else if (j < config.n_train + config.n_val) {
          dataset.validation.push_back(std::move(sample));
        } else {
          dataset.test.push_back(std::move(sample));
        }
        break;
      } catch (const std::runtime_error& err) {
        if (++dataset.regenerated > max_regenerations) {
          throw std::runtime_error("dataset generation: too many divergent trajectories (" +
                                   std::to_string(dataset.regenerated) + " of " +
                                   std::to_string(total) + "); last: " + err.what());
        }
      }
    }
  }
  dataset.box = containing_box(dataset);
  return dataset;
}

double containing_box(const Dataset& dataset) {
  std::vector<double> magnitudes;
  for (const auto* split : {&dataset.train, &dataset.validation, &dataset.test}) {
    for (const Sample& s : *split) {
      const auto& states = s.trajectory.states;
      for (Eigen::Index i = 0; i < states.size(); ++i) magnitudes.push_back(std::abs(states.data()[i]));
    }
  }
  if (magnitudes.empty()) return dataset.config.box;
  std::sort(magnitudes.begin(), magnitudes.end());
  const double n = double(magnitudes.size());
  for (double box = 0.5;; box += 0.5) {
    const auto inside =
        std::upper_bound(magnitudes.begin(), magnitudes.end(), box) - magnitudes.begin();
    if (double(inside) > 0.999 * n) return box;
  }
}

}  // namespace fracsde
