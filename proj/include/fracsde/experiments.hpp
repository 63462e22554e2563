#pragma once

#include "fracsde/fields.hpp"
#include "fracsde/io.hpp"
#include "fracsde/noise.hpp"
#include "fracsde/sde.hpp"
#include "fracsde/train.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace fracsde {

struct SweepPoint {
  double control = 0.0;
  double mean = 0.0;
  double std = 0.0;
  Eigen::Index n = 0;        // replicas that contributed
  Eigen::Index dropped = 0;  // replicas discarded (degenerate Hurst estimate)
  double overlay = 0.0;      // reference curve at this control value
  std::vector<double> values;
};

struct SweepTable {
  std::string name;
  std::vector<SweepPoint> points;  // control strictly increasing
  double slope = 0.0;              // fitted log-log slope of mean vs control
  double slope_ref = 0.0;
  Json config = Json::object();
  std::vector<std::uint64_t> seeds;  // replica seeds, in replica order

  std::vector<double> controls() const;
  std::vector<double> means() const;
};

/// Called after every completed sweep point with the table so far.
using SweepProgress = std::function<void(const SweepTable&)>;

/// Least-squares slope of ln y against ln x.
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

/// Spearman rank correlation (average ranks on ties).
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

/// Number of i with mean[i+1] >= mean[i].
int count_inversions(const std::vector<SweepPoint>& points);

/// Number of inversions larger than one standard deviation of either point.
int count_inversions_beyond_std(const std::vector<SweepPoint>& points);

struct WidthSweepConfig {
  DatasetConfig data;
  TrainConfig train;
  int replicas = 3;
  std::uint64_t seed = 0;
};

/// Trains one model per (width, replica). Each replica shares its dataset
/// across widths. Records the best validation loss.
SweepTable width_sweep(const std::vector<Eigen::Index>& widths, const WidthSweepConfig& config,
                       const SweepProgress& progress = {});

struct FittingSweepConfig {
  Eigen::Index dim = 1;
  double hurst = 0.7;
  double horizon = 1.0;  // T; the coarse step is T / M
  Eigen::Index k = 4;
  double alpha = 0.4;
  double gamma = 0.51;
  int replicas = 200;
  double box = 4.0;
  MvnConfig mvn;
  std::uint64_t seed = 0;
  /// Replaces the estimated Hurst index when set (zero-error control).
  std::optional<double> hurst_override;
};

/// Hurst-fitting error: true coefficients driven by B^H versus B^{H_hat}
/// from the same white noise, compared on the coarse grid.
SweepTable fitting_sweep(const std::vector<Eigen::Index>& Ms, const FittingSweepConfig& config,
                         const SweepProgress& progress = {});

struct TimeSweepConfig {
  Eigen::Index dim = 1;
  double hurst = 0.7;
  double horizon = 1.0;
  double alpha = 0.4;
  int replicas = 200;
  int reference_refinement = 8;
  double box = 4.0;
  std::string field = "benchmark";  // benchmark | zero-diffusion
  std::uint64_t seed = 0;
};

CoefficientField time_sweep_field(const TimeSweepConfig& config);

/// Euler error at each step against a finer reference driven by the same
/// (aggregated) increments, measured on the coarsest grid.
SweepTable time_sweep(const std::vector<double>& dts, const TimeSweepConfig& config,
                      const SweepProgress& progress = {});

Json to_json(const WidthSweepConfig& config);
Json to_json(const FittingSweepConfig& config);
Json to_json(const TimeSweepConfig& config);
Json to_json(const MvnConfig& config);

/// Writes sweep_<name>.csv (control,mean,std,n,slope_ref,overlay) and
/// sweep_<name>.json into `dir`. `run_info` is merged into the manifest.
void write_sweep(const SweepTable& table, const std::filesystem::path& dir,
                 const Json& run_info = Json::object());

}  // namespace fracsde
