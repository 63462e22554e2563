#pragma once

#include "fracsde/fields.hpp"
#include "fracsde/io.hpp"
#include "fracsde/noise.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace fracsde {

/// Fine-grid Euler path. Column i of `states` is X_i; column i of
/// `increments` is the driving increment between X_i and X_{i+1}.
struct Trajectory {
  double dt = 0.0;
  double hurst = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd states;
  Eigen::MatrixXd increments;

  Eigen::Index dim() const { return states.rows(); }
  Eigen::Index steps() const { return increments.cols(); }
  double time(Eigen::Index i) const { return dt * double(i); }
};

struct Observations {
  double dt = 0.0;
  Eigen::MatrixXd values;  // d x (M + 1)

  Eigen::Index count() const { return values.cols() - 1; }
};

/// X_{i+1} = X_i + b(t_i, X_i) dt + sigma(t_i, X_i) * dB_i (componentwise).
Trajectory euler_rollout(const CoefficientField& field, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& increments, double dt);

/// Same recursion for a neural field, without std::function dispatch.
Trajectory euler_rollout(const NeuralField& field, const Eigen::VectorXd& x0,
                         const Eigen::MatrixXd& increments, double dt);

Observations downsample(const Trajectory& trajectory, Eigen::Index k);

struct FieldGradient {
  Eigen::VectorXd drift;
  Eigen::VectorXd diffusion;
};

/// Gradient of sum_i <upstream.col(i), X_i> with respect to both networks,
/// by a backward sweep through the Euler recursion of `trajectory` (which
/// must have been produced by euler_rollout with `field`).
FieldGradient rollout_vjp(const NeuralField& field, const Trajectory& trajectory,
                          const Eigen::MatrixXd& upstream);

enum class NoiseGenerator { DaviesHarte, Mvn };

std::string to_string(NoiseGenerator generator);
NoiseGenerator noise_generator_from_string(const std::string& name);

struct DatasetConfig {
  Eigen::Index dim = 1;
  double hurst = 0.7;
  double coarse_dt = 0.05;
  Eigen::Index k = 4;
  Eigen::Index M = 20;
  Eigen::Index n_train = 100;
  Eigen::Index n_val = 28;
  Eigen::Index n_test = 32;
  double box = 4.0;
  std::uint64_t seed = 0;
  NoiseGenerator noise = NoiseGenerator::DaviesHarte;
  MvnConfig mvn;

  double fine_dt() const { return coarse_dt / double(k); }
  double horizon() const { return coarse_dt * double(M); }
  Eigen::Index total() const { return n_train + n_val + n_test; }
  void validate() const;
};

struct Sample {
  Trajectory trajectory;
  Observations observations;
  std::uint64_t noise_seed = 0;  // per-dimension MvN seeds derive from this
};

struct Dataset {
  DatasetConfig config;
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;
  double box = 4.0;              // evaluation box recomputed from the data
  Eigen::Index regenerated = 0;  // trajectories redrawn after divergence
};

/// Driving increments of one sample for one Hurst index, d x (k M).
Eigen::MatrixXd sample_increments(const DatasetConfig& config, std::uint64_t noise_seed,
                                  double hurst);

Dataset generate_dataset(const CoefficientField& field, const DatasetConfig& config);

/// Smallest multiple of 0.5 such that more than 99.9% of all fine-grid state
/// components lie in [-N, N].
double containing_box(const Dataset& dataset);

/// Directory layout: manifest.json, trajectories/traj_XXXX.csv
/// (t, x_1..x_d, dB_1..dB_d; the final row's dB columns are 0) and
/// observations/traj_XXXX.csv (t, x_1..x_d).
/// `run_info` is merged into the manifest (seed, version, ...). Returns the
/// manifest that was written.
Json save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                  const Json& run_info = Json::object());
Dataset load_dataset(const std::filesystem::path& dir);

Json to_json(const DatasetConfig& config);
DatasetConfig dataset_config_from_json(const Json& json);

}  // namespace fracsde
