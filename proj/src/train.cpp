#include "fracsde/train.hpp"

#include "fracsde/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fracsde {

std::string to_string(NoiseMode mode) {
  return mode == NoiseMode::CoupledHurst ? "coupled" : "oracle";
}

NoiseMode noise_mode_from_string(const std::string& name) {
  if (name == "oracle") return NoiseMode::Oracle;
  if (name == "coupled") return NoiseMode::CoupledHurst;
  throw std::invalid_argument("unknown noise mode '" + name + "'");
}

void TrainConfig::validate() const {
  if (width < 1) throw std::invalid_argument("width must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
  if (group < 1) throw std::invalid_argument("group must be >= 1");
  if (!(clip > 0.0)) throw std::invalid_argument("clip must be positive");
  if (alpha && !(*alpha > 0.0 && *alpha < 0.5)) throw std::invalid_argument("alpha must lie in (0, 1/2)");
  if (!(adam.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
}

std::vector<Eigen::MatrixXd> driving_increments(const DatasetConfig& config,
                                                const std::vector<Sample>& samples,
                                                NoiseMode mode, double hurst) {
  std::vector<Eigen::MatrixXd> out(samples.size());
  if (mode == NoiseMode::Oracle) {
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].trajectory.increments;
    return out;
  }
  if (config.noise != NoiseGenerator::Mvn) {
    throw std::invalid_argument("coupled noise mode needs a dataset generated with noise=mvn");
  }
  parallel_for(samples.size(), [&](std::size_t i) {
    out[i] = sample_increments(config, samples[i].noise_seed, hurst);
  });
  return out;
}

namespace {

template <typename Field>
std::vector<PathDiff> differences(const Field& field, const std::vector<Sample>& samples,
                                  const std::vector<Eigen::MatrixXd>& increments, Eigen::Index k,
                                  double alpha) {
  if (increments.size() != samples.size()) throw std::invalid_argument("one increment set per sample");
  std::vector<PathDiff> diffs(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Sample& s = samples[i];
    const Trajectory sim =
        euler_rollout(field, s.trajectory.states.col(0), increments[i], s.trajectory.dt);
    diffs[i] = {downsample(sim, k).values - s.observations.values, s.observations.dt, alpha};
  });
  return diffs;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

}  // namespace

std::vector<PathDiff> path_differences(const NeuralField& field, const std::vector<Sample>& samples,
                                       const std::vector<Eigen::MatrixXd>& increments,
                                       Eigen::Index k, double alpha) {
  return differences(field, samples, increments, k, alpha);
}

std::vector<PathDiff> path_differences(const CoefficientField& field,
                                       const std::vector<Sample>& samples,
                                       const std::vector<Eigen::MatrixXd>& increments,
                                       Eigen::Index k, double alpha) {
  return differences(field, samples, increments, k, alpha);
}

TrajectoryGradient trajectory_gradient(const NeuralField& field, const Sample& sample,
                                       const Eigen::MatrixXd& increments, Eigen::Index k,
                                       double alpha) {
  const Trajectory sim =
      euler_rollout(field, sample.trajectory.states.col(0), increments, sample.trajectory.dt);
  const Eigen::MatrixXd diff = downsample(sim, k).values - sample.observations.values;
  const double dt_coarse = sample.observations.dt;
  TrajectoryGradient out;
  out.loss = frac_path_norm(diff, dt_coarse, alpha);
  const Eigen::MatrixXd coarse_grad = frac_norm_subgradient(diff, dt_coarse, alpha);
  Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(sim.dim(), sim.states.cols());
  for (Eigen::Index m = 0; m < coarse_grad.cols(); ++m) upstream.col(m * k) = coarse_grad.col(m);
  out.gradient = rollout_vjp(field, sim, upstream);
  return out;
}

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.train.empty() || dataset.validation.empty()) {
    throw std::invalid_argument("training needs non-empty train and validation splits");
  }
  const auto start = std::chrono::steady_clock::now();
  const DatasetConfig& data = dataset.config;

  TrainResult result;
  std::vector<Eigen::MatrixXd> train_obs;
  for (const Sample& s : dataset.train) train_obs.push_back(s.observations.values);
  result.hurst = estimate_hurst_pooled(train_obs);
  result.alpha = config.alpha.value_or(default_alpha(result.hurst.value));

  const auto train_noise = driving_increments(data, dataset.train, config.noise, result.hurst.value);
  const auto val_noise = driving_increments(data, dataset.validation, config.noise, result.hurst.value);

  Rng init_rng = make_rng(config.seed, "init");
  NeuralField field = init_neural_field(data.dim, config.width, init_rng);
  field.drift = clip_params(field.drift, config.clip);
  field.diffusion = clip_params(field.diffusion, config.clip);
  result.drift_optimizer = AdamState(field.drift.size(), config.adam);
  result.diffusion_optimizer = AdamState(field.diffusion.size(), config.adam);

  const auto validation_loss = [&](const NeuralField& f) {
    return batch_loss(path_differences(f, dataset.validation, val_noise, data.k, result.alpha));
  };

  TrainHistory& history = result.history;
  history.train_loss.push_back(
      batch_loss(path_differences(field, dataset.train, train_noise, data.k, result.alpha)));
  history.val_loss.push_back(validation_loss(field));
  double best_val = history.val_loss.back();
  result.field = field;

  const std::size_t n = dataset.train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrajectoryGradient> slots;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng = make_rng(config.seed, "shuffle", std::uint64_t(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += std::size_t(config.group)) {
      const std::size_t end = std::min(n, begin + std::size_t(config.group));
      slots.assign(end - begin, {});
      parallel_for(end - begin, [&](std::size_t j) {
        const std::size_t idx = order[begin + j];
        slots[j] = trajectory_gradient(field, dataset.train[idx], train_noise[idx], data.k, result.alpha);
      });
      FieldGradient grad{Eigen::VectorXd::Zero(field.drift.size()),
                         Eigen::VectorXd::Zero(field.diffusion.size())};
      for (std::size_t j = 0; j < slots.size(); ++j) {
        if (!std::isfinite(slots[j].loss)) {
          throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                   ", trajectory " + std::to_string(order[begin + j]));
        }
        epoch_loss += slots[j].loss;
        grad.drift += slots[j].gradient.drift;
        grad.diffusion += slots[j].gradient.diffusion;
      }
      const double scale = 1.0 / double(slots.size());
      adam_step(result.drift_optimizer, field.drift.params(), grad.drift * scale);
      adam_step(result.diffusion_optimizer, field.diffusion.params(), grad.diffusion * scale);
      field.drift = clip_params(field.drift, config.clip);
      field.diffusion = clip_params(field.diffusion, config.clip);
    }

    history.train_loss.push_back(epoch_loss / double(n));
    history.val_loss.push_back(validation_loss(field));
    if (!std::isfinite(history.val_loss.back())) {
      throw std::runtime_error("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    if (history.val_loss.back() < best_val) {
      best_val = history.val_loss.back();
      history.best_epoch = epoch;
      result.field = field;
    } else if (epoch - history.best_epoch >= config.patience) {
      break;
    }
  }
  history.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

EvalReport evaluate(const CoefficientField& estimate, const Dataset& dataset,
                    const CoefficientField& truth, const EvalOptions& options) {
  if (dataset.test.empty()) throw std::invalid_argument("evaluation needs a non-empty test split");
  const auto noise = driving_increments(dataset.config, dataset.test, options.noise, options.hurst);
  const auto diffs = path_differences(estimate, dataset.test, noise, dataset.config.k, options.alpha);
  std::vector<double> losses;
  for (const PathDiff& d : diffs) losses.push_back(frac_path_norm(d));

  EvalReport report;
  report.trajectories = Eigen::Index(losses.size());
  report.loss_mean = mean(losses);
  double var = 0.0;
  for (double l : losses) var += (l - report.loss_mean) * (l - report.loss_mean);
  report.loss_std = losses.size() > 1 ? std::sqrt(var / double(losses.size() - 1)) : 0.0;
  report.recovery = recovery_metrics(
      estimate, truth,
      uniform_eval_points(dataset.config.dim, dataset.config.horizon(), dataset.box,
                          options.eval_points, derive_seed(options.seed, "eval-points")));
  return report;
}

Json to_json(const EvalReport& report) {
  return Json{{"test_loss_mean", report.loss_mean},
              {"test_loss_std", report.loss_std},
              {"trajectories", report.trajectories},
              {"l2_drift", report.recovery.l2_drift},
              {"l2_diffusion", report.recovery.l2_diffusion},
              {"rel_l2_drift", report.recovery.rel_drift},
              {"rel_l2_diffusion", report.recovery.rel_diffusion},
              {"eval_points", report.recovery.samples},
              {"excluded_drift_points", report.recovery.excluded_drift}};
}

Json to_json(const TrainConfig& config) {
  Json json{{"width", config.width},
            {"learning_rate", config.adam.learning_rate},
            {"weight_decay", config.adam.weight_decay},
            {"beta1", config.adam.beta1},
            {"beta2", config.adam.beta2},
            {"epsilon", config.adam.epsilon},
            {"clip", config.clip},
            {"max_epochs", config.max_epochs},
            {"patience", config.patience},
            {"group", config.group},
            {"noise_mode", to_string(config.noise)},
            {"seed", config.seed}};
  json["alpha"] = config.alpha ? Json(*config.alpha) : Json("auto");
  return json;
}

}  // namespace fracsde
