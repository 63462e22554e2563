#include "fracsde/experiments.hpp"

#include "fracsde/hurst.hpp"
#include "fracsde/metrics.hpp"
#include "fracsde/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fracsde {

std::vector<double> SweepTable::controls() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.control);
  return out;
}

std::vector<double> SweepTable::means() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.mean);
  return out;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("loglog_slope: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("loglog_slope needs at least 2 points");
  const std::size_t n = xs.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw std::invalid_argument("loglog_slope: entries must be positive (index " +
                                  std::to_string(i) + ")");
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / double(n);
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / double(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("loglog_slope: x values are all equal");
  return sxy / sxx;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

void summarize(SweepPoint& point) {
  point.n = Eigen::Index(point.values.size());
  if (point.values.empty()) {
    point.mean = point.std = 0.0;
    return;
  }
  point.mean = std::accumulate(point.values.begin(), point.values.end(), 0.0) / double(point.n);
  double ss = 0.0;
  for (double v : point.values) ss += (v - point.mean) * (v - point.mean);
  point.std = point.n > 1 ? std::sqrt(ss / double(point.n - 1)) : 0.0;
}

// Overlay c * shape(control) with c matched to the first point's mean.
template <typename Shape>
void finish(SweepTable& table, Shape shape) {
  if (table.points.empty()) return;
  const double c = table.points.front().mean / shape(table.points.front().control);
  for (auto& p : table.points) p.overlay = c * shape(p.control);
  std::vector<double> xs, ys;
  for (const auto& p : table.points) {
    if (p.mean > 0.0) {
      xs.push_back(p.control);
      ys.push_back(p.mean);
    }
  }
  table.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : std::nan("");
}

void report(const SweepProgress& progress, const SweepTable& table) {
  if (progress) progress(table);
}

void check_replicas(int replicas) {
  // Two replicas are the minimum that still yields a spread.
  if (replicas < 2) throw std::invalid_argument("replicas must be >= 2");
}

template <typename T>
void check_increasing(const std::vector<T>& controls, const char* what) {
  if (controls.empty()) throw std::invalid_argument(std::string(what) + " list is empty");
  for (std::size_t i = 0; i + 1 < controls.size(); ++i) {
    if (!(controls[i] < controls[i + 1])) {
      throw std::invalid_argument(std::string(what) + " values must be strictly increasing");
    }
  }
}

Eigen::VectorXd initial_state(std::uint64_t seed, Eigen::Index dim, double box) {
  Rng rng(derive_seed(seed, "x0"));
  return standard_normal(rng, dim).cwiseMax(-box).cwiseMin(box);
}

Eigen::MatrixXd every(const Eigen::MatrixXd& states, Eigen::Index stride) {
  const Eigen::Index cols = (states.cols() - 1) / stride + 1;
  Eigen::MatrixXd out(states.rows(), cols);
  for (Eigen::Index m = 0; m < cols; ++m) out.col(m) = states.col(m * stride);
  return out;
}

}  // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("spearman needs two equal-length lists of at least 2 values");
  }
  return pearson(ranks(xs), ranks(ys));
}

int count_inversions(const std::vector<SweepPoint>& points) {
  int count = 0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) count += points[i + 1].mean >= points[i].mean;
  return count;
}

int count_inversions_beyond_std(const std::vector<SweepPoint>& points) {
  int count = 0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double rise = points[i + 1].mean - points[i].mean;
    count += rise >= 0.0 && rise > std::max(points[i].std, points[i + 1].std);
  }
  return count;
}

SweepTable width_sweep(const std::vector<Eigen::Index>& widths, const WidthSweepConfig& config,
                       const SweepProgress& progress) {
  check_increasing(widths, "width");
  check_replicas(config.replicas);
  for (Eigen::Index w : widths) {
    if (w < 1) throw std::invalid_argument("widths must be >= 1");
  }
  config.data.validate();
  config.train.validate();

  SweepTable table;
  table.name = "width";
  table.slope_ref = -0.5;
  table.config = to_json(config);
  std::vector<Dataset> datasets;
  for (int r = 0; r < config.replicas; ++r) {
    DatasetConfig data = config.data;
    data.seed = derive_seed(config.seed, "width-data", std::uint64_t(r));
    table.seeds.push_back(data.seed);
    datasets.push_back(generate_dataset(benchmark(data.dim), data));
  }
  for (Eigen::Index width : widths) {
    SweepPoint point;
    point.control = double(width);
    for (int r = 0; r < config.replicas; ++r) {
      TrainConfig train_config = config.train;
      train_config.width = width;
      train_config.seed = derive_seed(config.seed, "width-train", std::uint64_t(r));
      const TrainResult result = train(datasets[std::size_t(r)], train_config);
      point.values.push_back(result.history.val_loss[std::size_t(result.history.best_epoch)]);
    }
    summarize(point);
    table.points.push_back(std::move(point));
    finish(table, [](double n) { return 1.0 / std::sqrt(n); });
    report(progress, table);
  }
  return table;
}

SweepTable fitting_sweep(const std::vector<Eigen::Index>& Ms, const FittingSweepConfig& config,
                         const SweepProgress& progress) {
  check_increasing(Ms, "M");
  check_replicas(config.replicas);
  require_hurst(config.hurst);
  if (config.hurst <= 0.5) throw std::invalid_argument("fitting sweep needs H in (1/2, 1)");
  if (config.dim < 1 || config.k < 1) throw std::invalid_argument("dim and k must be >= 1");
  if (!(config.horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (!(config.alpha > 0.0 && config.alpha < 0.5)) throw std::invalid_argument("alpha must lie in (0, 1/2)");
  if (config.hurst_override) require_hurst(*config.hurst_override);
  config.mvn.validate();
  for (Eigen::Index M : Ms) {
    if (M < 8) throw std::invalid_argument("M must be >= 8 for Hurst estimation");
  }

  SweepTable table;
  table.name = "fitting";
  table.slope_ref = -config.gamma / 4.0;
  table.config = to_json(config);
  for (int r = 0; r < config.replicas; ++r) {
    table.seeds.push_back(derive_seed(config.seed, "fitting", std::uint64_t(r)));
  }
  const CoefficientField field = benchmark(config.dim);

  for (Eigen::Index M : Ms) {
    const Eigen::Index steps = config.k * M;
    const double dt = config.horizon / double(steps);
    const double coarse_dt = config.horizon / double(M);
    std::vector<double> errors(std::size_t(config.replicas), 0.0);
    std::vector<char> dropped(std::size_t(config.replicas), 0);

    parallel_for(std::size_t(config.replicas), [&](std::size_t r) {
      const std::uint64_t seed = derive_seed(table.seeds[r], "M", std::uint64_t(M));
      std::vector<MvnNoise> noise;
      Eigen::MatrixXd truth_noise(config.dim, steps);
      for (Eigen::Index c = 0; c < config.dim; ++c) {
        noise.emplace_back(steps, dt, derive_seed(seed, "mvn", std::uint64_t(c)), config.mvn);
        truth_noise.row(c) = noise.back().path(config.hurst).increments().transpose();
      }
      const Eigen::VectorXd x0 = initial_state(seed, config.dim, config.box);
      const Observations truth = downsample(euler_rollout(field, x0, truth_noise, dt), config.k);

      double hurst = 0.0;
      if (config.hurst_override) {
        hurst = *config.hurst_override;
      } else {
        try {
          hurst = estimate_hurst_multi(truth.values).value;
        } catch (const DegenerateSeries&) {
          dropped[r] = 1;
          return;
        }
      }
      Eigen::MatrixXd fitted_noise(config.dim, steps);
      for (Eigen::Index c = 0; c < config.dim; ++c) {
        fitted_noise.row(c) = noise[std::size_t(c)].path(hurst).increments().transpose();
      }
      const Observations fitted = downsample(euler_rollout(field, x0, fitted_noise, dt), config.k);
      errors[r] = frac_path_norm(fitted.values - truth.values, coarse_dt, config.alpha);
    });

    SweepPoint point;
    point.control = double(M);
    for (std::size_t r = 0; r < errors.size(); ++r) {
      if (dropped[r]) {
        ++point.dropped;
      } else {
        point.values.push_back(errors[r]);
      }
    }
    summarize(point);
    table.points.push_back(std::move(point));
    const double gamma = config.gamma;
    finish(table, [gamma](double m) { return std::pow(std::log(m) / m, gamma / 4.0); });
    report(progress, table);
  }
  return table;
}

CoefficientField time_sweep_field(const TimeSweepConfig& config) {
  if (config.field == "benchmark") return benchmark(config.dim);
  if (config.field == "zero-diffusion") return linear_field(config.dim, 1.0, 0.0);
  throw std::invalid_argument("unknown time sweep field '" + config.field + "'");
}

SweepTable time_sweep(const std::vector<double>& dts, const TimeSweepConfig& config,
                      const SweepProgress& progress) {
  check_increasing(dts, "dt");
  check_replicas(config.replicas);
  require_hurst(config.hurst);
  if (config.dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (config.reference_refinement < 1) throw std::invalid_argument("reference_refinement must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 0.5)) throw std::invalid_argument("alpha must lie in (0, 1/2)");
  if (!(dts.front() > 0.0)) throw std::invalid_argument("dt values must be positive");
  const CoefficientField field = time_sweep_field(config);

  const double dt_ref = dts.front() / double(config.reference_refinement);
  const double steps_real = config.horizon / dt_ref;
  const Eigen::Index ref_steps = Eigen::Index(std::llround(steps_real));
  if (std::abs(steps_real - double(ref_steps)) > 1e-6 * steps_real) {
    throw std::invalid_argument("horizon is not a multiple of the reference step");
  }
  // Each dt must be a power-of-two multiple of the reference step.
  std::vector<Eigen::Index> factors;
  for (double dt : dts) {
    const double ratio = dt / dt_ref;
    const double level = std::round(std::log2(ratio));
    if (std::abs(ratio - std::exp2(level)) > 1e-9 * ratio) {
      throw std::invalid_argument("dt grid is not dyadically nested: " + format_double(dt));
    }
    factors.push_back(Eigen::Index(std::llround(std::exp2(level))));
    if (ref_steps % factors.back() != 0) {
      throw std::invalid_argument("horizon is not a multiple of dt = " + format_double(dt));
    }
  }
  const Eigen::Index coarse_stride = factors.back();
  const double coarse_dt = dts.back();

  SweepTable table;
  table.name = "time";
  table.slope_ref = config.field == "zero-diffusion" ? 1.0 : 2.0 * config.hurst - 1.0;
  table.config = to_json(config);
  for (int r = 0; r < config.replicas; ++r) {
    table.seeds.push_back(derive_seed(config.seed, "time", std::uint64_t(r)));
  }

  const DaviesHarteSampler sampler(config.hurst, ref_steps, dt_ref);
  std::vector<std::vector<double>> errors(dts.size(), std::vector<double>(std::size_t(config.replicas)));
  parallel_for(std::size_t(config.replicas), [&](std::size_t r) {
    Eigen::MatrixXd fine(config.dim, ref_steps);
    for (Eigen::Index c = 0; c < config.dim; ++c) {
      Rng rng(derive_seed(table.seeds[r], "fbm", std::uint64_t(c)));
      fine.row(c) = sampler.sample_increments(rng).transpose();
    }
    const Eigen::VectorXd x0 = initial_state(table.seeds[r], config.dim, config.box);
    const Eigen::MatrixXd reference = every(euler_rollout(field, x0, fine, dt_ref).states, coarse_stride);
    for (std::size_t j = 0; j < dts.size(); ++j) {
      const Eigen::Index f = factors[j];
      Eigen::MatrixXd increments(config.dim, ref_steps / f);
      for (Eigen::Index i = 0; i < increments.cols(); ++i) {
        increments.col(i) = fine.middleCols(i * f, f).rowwise().sum();
      }
      const Eigen::MatrixXd states =
          every(euler_rollout(field, x0, increments, dts[j]).states, coarse_stride / f);
      errors[j][r] = frac_path_norm(states - reference, coarse_dt, config.alpha);
    }
  });

  const double slope_ref = table.slope_ref;
  for (std::size_t j = 0; j < dts.size(); ++j) {
    SweepPoint point;
    point.control = dts[j];
    point.values = errors[j];
    summarize(point);
    table.points.push_back(std::move(point));
    finish(table, [slope_ref](double dt) { return std::pow(dt, slope_ref); });
    report(progress, table);
  }
  return table;
}

Json to_json(const MvnConfig& config) {
  return Json{{"horizon_factor", config.horizon_factor},
              {"refinement", config.refinement},
              {"past_grading", config.past_grading}};
}

Json to_json(const WidthSweepConfig& config) {
  return Json{{"data", to_json(config.data)},
              {"train", to_json(config.train)},
              {"replicas", config.replicas},
              {"seed", config.seed}};
}

Json to_json(const FittingSweepConfig& config) {
  Json json{{"dim", config.dim},         {"hurst", config.hurst},
            {"horizon", config.horizon}, {"k", config.k},
            {"alpha", config.alpha},     {"gamma", config.gamma},
            {"replicas", config.replicas}, {"box", config.box},
            {"mvn", to_json(config.mvn)}, {"seed", config.seed}};
  json["hurst_override"] = config.hurst_override ? Json(*config.hurst_override) : Json(nullptr);
  return json;
}

Json to_json(const TimeSweepConfig& config) {
  return Json{{"dim", config.dim},
              {"hurst", config.hurst},
              {"horizon", config.horizon},
              {"alpha", config.alpha},
              {"replicas", config.replicas},
              {"reference_refinement", config.reference_refinement},
              {"box", config.box},
              {"field", config.field},
              {"seed", config.seed}};
}

void write_sweep(const SweepTable& table, const std::filesystem::path& dir, const Json& run_info) {
  std::filesystem::create_directories(dir);
  const std::string csv_name = "sweep_" + table.name + ".csv";
  CsvTable csv{{"control", "mean", "std", "n", "slope_ref", "overlay"}, {}};
  for (const auto& p : table.points) {
    csv.rows.push_back({p.control, p.mean, p.std, double(p.n), table.slope_ref, p.overlay});
  }
  write_csv(dir / csv_name, csv);

  Json points = Json::array();
  for (const auto& p : table.points) {
    points.push_back(Json{{"control", p.control},
                          {"mean", p.mean},
                          {"std", p.std},
                          {"n", p.n},
                          {"dropped", p.dropped},
                          {"overlay", p.overlay},
                          {"values", p.values}});
  }
  Json manifest = run_info;
  manifest["sweep"] = table.name;
  manifest["config"] = table.config;
  manifest["seeds"] = table.seeds;
  manifest["slope"] = std::isfinite(table.slope) ? Json(table.slope) : Json(nullptr);
  manifest["slope_ref"] = table.slope_ref;
  manifest["points"] = points;
  manifest["git_describe"] = build_version();
  manifest["files"] = Json::array({csv_name});
  write_text(dir / ("sweep_" + table.name + ".json"), dump_json(manifest) + "\n");
}

}  // namespace fracsde
