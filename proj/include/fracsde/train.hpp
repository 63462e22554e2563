#pragma once

#include "fracsde/fields.hpp"
#include "fracsde/hurst.hpp"
#include "fracsde/metrics.hpp"
#include "fracsde/net.hpp"
#include "fracsde/sde.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fracsde {

/// Which noise drives the simulated rollouts during training.
///  Oracle: the recorded data-generating increments.
///  CoupledHurst: B^{H_hat} built from the same white noise (MvN datasets only).
enum class NoiseMode { Oracle, CoupledHurst };

std::string to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(const std::string& name);

struct TrainConfig {
  Eigen::Index width = 128;
  std::optional<double> alpha;  // unset: default_alpha(H_hat)
  AdamConfig adam;
  double clip = 5.0;
  int max_epochs = 500;
  int patience = 20;
  Eigen::Index group = 10;
  NoiseMode noise = NoiseMode::Oracle;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;  // index 0 is the untrained model
  std::vector<double> val_loss;
  int best_epoch = 0;
  double seconds = 0.0;

  int last_epoch() const { return int(train_loss.size()) - 1; }
};

struct TrainResult {
  NeuralField field;  // parameters of the best validation epoch
  TrainHistory history;
  AdamState drift_optimizer;
  AdamState diffusion_optimizer;
  HurstEstimate hurst;
  double alpha = 0.0;
};

/// Driving increments for each sample under the given mode.
std::vector<Eigen::MatrixXd> driving_increments(const DatasetConfig& config,
                                                const std::vector<Sample>& samples,
                                                NoiseMode mode, double hurst);

/// Pathwise coarse-grid error of `field` against each sample.
std::vector<PathDiff> path_differences(const NeuralField& field, const std::vector<Sample>& samples,
                                       const std::vector<Eigen::MatrixXd>& increments,
                                       Eigen::Index k, double alpha);
std::vector<PathDiff> path_differences(const CoefficientField& field,
                                       const std::vector<Sample>& samples,
                                       const std::vector<Eigen::MatrixXd>& increments,
                                       Eigen::Index k, double alpha);

/// Loss of one trajectory and its gradient with respect to both networks.
struct TrajectoryGradient {
  double loss = 0.0;
  FieldGradient gradient;
};

TrajectoryGradient trajectory_gradient(const NeuralField& field, const Sample& sample,
                                       const Eigen::MatrixXd& increments, Eigen::Index k,
                                       double alpha);

TrainResult train(const Dataset& dataset, const TrainConfig& config);

struct EvalReport {
  double loss_mean = 0.0;
  double loss_std = 0.0;
  Eigen::Index trajectories = 0;
  RecoveryReport recovery;
};

struct EvalOptions {
  double alpha = 0.4;
  NoiseMode noise = NoiseMode::Oracle;
  double hurst = 0.7;  // used by CoupledHurst
  Eigen::Index eval_points = 4096;
  std::uint64_t seed = 0;
};

/// Test-split fractional norm statistics plus coefficient recovery on
/// uniform points of [0, T] x [-N, N]^d with N the dataset's box.
EvalReport evaluate(const CoefficientField& estimate, const Dataset& dataset,
                    const CoefficientField& truth, const EvalOptions& options);

Json to_json(const EvalReport& report);
Json to_json(const TrainConfig& config);

}  // namespace fracsde
