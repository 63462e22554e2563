#include "fracsde/cli.hpp"

#include "fracsde/checkpoint.hpp"
#include "fracsde/experiments.hpp"
#include "fracsde/hurst.hpp"
#include "fracsde/io.hpp"
#include "fracsde/selftest.hpp"
#include "fracsde/sde.hpp"
#include "fracsde/train.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace fracsde::cli {

namespace fs = std::filesystem;

Settings parse_settings(const std::string& text, const std::string& origin) {
  Settings settings;
  std::istringstream in(text);
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line.substr(first), origin + ":" + std::to_string(number) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("", origin + ":" + std::to_string(number) + ": empty key");
    settings[key] = trim(line.substr(eq + 1));
  }
  return settings;
}

namespace {

// Reads typed values out of Settings and remembers which keys were used.
class Reader {
 public:
  explicit Reader(Settings settings) : settings_(std::move(settings)) {}

  std::optional<std::string> find(const std::string& key) {
    used_.insert(key);
    const auto it = settings_.find(key);
    if (it == settings_.end()) return std::nullopt;
    return it->second;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    return find(key).value_or(fallback);
  }

  std::string required(const std::string& key) {
    const auto value = find(key);
    if (!value || value->empty()) {
      missing_.push_back(key);
      return {};
    }
    return *value;
  }

  double real(const std::string& key, double fallback) {
    const auto value = find(key);
    return value ? parse_real(key, *value) : fallback;
  }

  std::optional<double> real_or_auto(const std::string& key) {
    const auto value = find(key);
    if (!value || *value == "auto") return std::nullopt;
    return parse_real(key, *value);
  }

  long long integer(const std::string& key, long long fallback) {
    const auto value = find(key);
    return value ? parse_integer(key, *value) : fallback;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const auto value = find(key);
    if (!value) return fallback;
    errno = 0;
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(value->c_str(), &end, 10);
    if (value->empty() || *end != '\0' || errno != 0 || (*value)[0] == '-') {
      throw ConfigError(key, "expected an unsigned 64-bit integer, got '" + *value + "'");
    }
    return parsed;
  }

  std::vector<double> reals(const std::string& key, const std::vector<double>& fallback) {
    const auto value = find(key);
    if (!value) return fallback;
    std::vector<double> out;
    for (const std::string& item : split(*value)) out.push_back(parse_real(key, item));
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

  std::vector<Eigen::Index> integers(const std::string& key, const std::vector<Eigen::Index>& fallback) {
    const auto value = find(key);
    if (!value) return fallback;
    std::vector<Eigen::Index> out;
    for (const std::string& item : split(*value)) out.push_back(Eigen::Index(parse_integer(key, item)));
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

  /// Unknown keys first, then missing required ones.
  void finish() const {
    for (const auto& [key, value] : settings_) {
      if (!used_.count(key)) throw ConfigError(key, "unknown key for this command");
    }
    if (!missing_.empty()) throw ConfigError(missing_.front(), "required");
  }

  const Settings& settings() const { return settings_; }

 private:
  static std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  static double parse_real(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const double parsed = std::strtod(value.c_str(), &end);
    if (value.empty() || *end != '\0' || errno != 0 || !std::isfinite(parsed)) {
      throw ConfigError(key, "expected a finite number, got '" + value + "'");
    }
    return parsed;
  }

  static long long parse_integer(const std::string& key, const std::string& value) {
    errno = 0;
    char* end = nullptr;
    const long long parsed = std::strtoll(value.c_str(), &end, 10);
    if (value.empty() || *end != '\0' || errno != 0) {
      throw ConfigError(key, "expected an integer, got '" + value + "'");
    }
    return parsed;
  }

  Settings settings_;
  std::set<std::string> used_;
  std::vector<std::string> missing_;
};

// Output directory written as <out>.partial and renamed on success.
class RunDir {
 public:
  explicit RunDir(const std::string& out) : final_(out) {
    if (out.empty()) throw ConfigError("out", "required");
    if (fs::exists(final_)) throw ConfigError("out", "'" + out + "' already exists");
    partial_ = final_;
    partial_ += ".partial";
  }

  const fs::path& open() {
    fs::remove_all(partial_);
    fs::create_directories(partial_);
    return partial_;
  }

  const fs::path& path() const { return partial_; }

  void commit() const { fs::rename(partial_, final_); }

  const fs::path& final_path() const { return final_; }

 private:
  fs::path final_;
  fs::path partial_;
};

template <typename Fn>
auto as_config_error(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

Json settings_json(const Settings& settings) {
  Json json = Json::object();
  for (const auto& [key, value] : settings) json[key] = value;
  return json;
}

Json run_manifest(const std::string& command, const Json& config, std::uint64_t seed,
                  const Settings& settings, const std::vector<std::string>& files) {
  return Json{{"command", command},
              {"config", config},
              {"seed", seed},
              {"version", build_version()},
              {"settings", settings_json(settings)},
              {"files", files}};
}

void write_manifest(const fs::path& dir, const Json& manifest) {
  write_text(dir / "manifest.json", dump_json(manifest) + "\n");
}

DatasetConfig read_dataset_config(Reader& r, DatasetConfig c = {}) {
  c.dim = Eigen::Index(r.integer("dim", c.dim));
  c.hurst = r.real("hurst", c.hurst);
  c.coarse_dt = r.real("coarse_dt", c.coarse_dt);
  c.k = Eigen::Index(r.integer("k", c.k));
  c.M = Eigen::Index(r.integer("M", c.M));
  c.n_train = Eigen::Index(r.integer("n_train", c.n_train));
  c.n_val = Eigen::Index(r.integer("n_val", c.n_val));
  c.n_test = Eigen::Index(r.integer("n_test", c.n_test));
  c.box = r.real("box", c.box);
  const std::string noise = r.text("noise", to_string(c.noise));
  c.noise = as_config_error("noise", [&] { return noise_generator_from_string(noise); });
  c.mvn.horizon_factor = r.real("mvn_horizon_factor", c.mvn.horizon_factor);
  c.mvn.refinement = int(r.integer("mvn_refinement", c.mvn.refinement));
  c.mvn.past_grading = r.real("mvn_past_grading", c.mvn.past_grading);
  return c;
}

TrainConfig read_train_config(Reader& r, bool with_width) {
  TrainConfig c;
  if (with_width) c.width = Eigen::Index(r.integer("width", c.width));
  c.alpha = r.real_or_auto("alpha");
  c.adam.learning_rate = r.real("learning_rate", c.adam.learning_rate);
  c.adam.weight_decay = r.real("weight_decay", c.adam.weight_decay);
  c.adam.beta1 = r.real("beta1", c.adam.beta1);
  c.adam.beta2 = r.real("beta2", c.adam.beta2);
  c.adam.epsilon = r.real("epsilon", c.adam.epsilon);
  c.clip = r.real("clip", c.clip);
  c.max_epochs = int(r.integer("max_epochs", c.max_epochs));
  c.patience = int(r.integer("patience", c.patience));
  c.group = Eigen::Index(r.integer("group", c.group));
  const std::string mode = r.text("noise_mode", to_string(c.noise));
  c.noise = as_config_error("noise_mode", [&] { return noise_mode_from_string(mode); });
  return c;
}

// Validation messages start with the offending key.
ConfigError validation_error(const std::logic_error& e) {
  const std::string what = e.what();
  std::string key = what.substr(0, what.find(' '));
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return ConfigError(key, what);
}

void validate_train(const TrainConfig& c) {
  try {
    c.validate();
  } catch (const std::logic_error& e) {
    throw validation_error(e);
  }
}

void validate_dataset(const DatasetConfig& c) {
  try {
    c.validate();
  } catch (const std::logic_error& e) {
    throw validation_error(e);
  }
}

std::string hex(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

// ---- subcommands --------------------------------------------------------

int cmd_simulate(Reader& r, std::ostream& out) {
  DatasetConfig config = read_dataset_config(r);
  config.seed = r.seed("seed", 0);
  RunDir dir(r.text("out", ""));
  r.finish();
  validate_dataset(config);

  const Dataset dataset = generate_dataset(benchmark(config.dim), config);
  Json info{{"command", "simulate"},
            {"seed", config.seed},
            {"version", build_version()},
            {"settings", settings_json(r.settings())}};
  save_dataset(dataset, dir.open(), info);
  dir.commit();
  out << "wrote " << config.total() << " trajectories to " << dir.final_path().string() << "\n";
  return kExitOk;
}

int cmd_estimate_hurst(Reader& r, std::ostream& out) {
  const std::string input = r.text("input", "");
  const std::string dataset_dir = r.text("dataset", "");
  const std::string out_dir = r.text("out", "");
  r.finish();
  if (input.empty() == dataset_dir.empty()) throw ConfigError("input", "give exactly one of input= or dataset=");
  std::optional<RunDir> dir;
  if (!out_dir.empty()) dir.emplace(out_dir);

  HurstEstimate estimate;
  if (!input.empty()) {
    const CsvTable table = read_csv(input);
    std::vector<std::size_t> columns;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (table.header[c] != "t") columns.push_back(c);
    }
    if (columns.empty()) throw std::runtime_error("no value columns in " + input);
    Eigen::MatrixXd series(Eigen::Index(columns.size()), Eigen::Index(table.rows.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      for (std::size_t c = 0; c < columns.size(); ++c) series(Eigen::Index(c), Eigen::Index(i)) = table.rows[i][columns[c]];
    }
    estimate = estimate_hurst_multi(series);
  } else {
    const Dataset dataset = load_dataset(dataset_dir);
    std::vector<Eigen::MatrixXd> series;
    for (const Sample& s : dataset.train) series.push_back(s.observations.values);
    estimate = estimate_hurst_pooled(series);
  }
  const Json result{{"hurst", estimate.value},
                    {"raw", estimate.raw},
                    {"n", estimate.samples},
                    {"clipped", estimate.clipped}};
  out << dump_json(result) << "\n";
  if (dir) {
    const fs::path& path = dir->open();
    write_text(path / "hurst.json", dump_json(result) + "\n");
    write_manifest(path, run_manifest("estimate-hurst", Json{{"input", input}, {"dataset", dataset_dir}}, 0,
                                      r.settings(), {"hurst.json"}));
    dir->commit();
  }
  return kExitOk;
}

int cmd_train(Reader& r, std::ostream& out) {
  const std::string dataset_dir = r.required("dataset");
  TrainConfig config = read_train_config(r, true);
  config.seed = r.seed("seed", 0);
  const auto eval_points = Eigen::Index(r.integer("eval_points", 4096));
  RunDir dir(r.text("out", ""));
  r.finish();
  validate_train(config);
  if (eval_points < 1) throw ConfigError("eval_points", "must be >= 1");

  const Dataset dataset = load_dataset(dataset_dir);
  const TrainResult result = train(dataset, config);

  EvalOptions options;
  options.alpha = result.alpha;
  options.noise = config.noise;
  options.hurst = result.hurst.value;
  options.eval_points = eval_points;
  options.seed = derive_seed(config.seed, "evaluate");
  const EvalReport report = evaluate(result.field.as_field(), dataset, benchmark(dataset.config.dim), options);

  const fs::path& path = dir.open();
  Checkpoint checkpoint{result.field, config.clip, result.drift_optimizer, result.diffusion_optimizer,
                        hex(fnv1a(dump_json(to_json(config), -1)))};
  save_checkpoint(checkpoint, path / "checkpoint.json");

  CsvTable history{{"epoch", "train_loss", "val_loss"}, {}};
  for (std::size_t e = 0; e < result.history.train_loss.size(); ++e) {
    history.rows.push_back({double(e), result.history.train_loss[e], result.history.val_loss[e]});
  }
  write_csv(path / "history.csv", history);

  Json report_json = to_json(report);
  report_json["hurst"] = result.hurst.value;
  report_json["hurst_raw"] = result.hurst.raw;
  report_json["alpha"] = result.alpha;
  report_json["best_epoch"] = result.history.best_epoch;
  report_json["epochs"] = result.history.last_epoch();
  report_json["best_val_loss"] = result.history.val_loss[std::size_t(result.history.best_epoch)];
  write_text(path / "report.json", dump_json(report_json) + "\n");

  Json config_json = to_json(config);
  config_json["dataset"] = dataset_dir;
  config_json["eval_points"] = eval_points;
  write_manifest(path, run_manifest("train", config_json, config.seed, r.settings(),
                                    {"checkpoint.json", "history.csv", "report.json"}));
  dir.commit();
  out << "best epoch " << result.history.best_epoch << ", test loss " << format_double(report.loss_mean)
      << ", L2(b) " << format_double(report.recovery.l2_drift) << ", L2(sigma) "
      << format_double(report.recovery.l2_diffusion) << "\n";
  return kExitOk;
}

int cmd_evaluate(Reader& r, std::ostream& out) {
  const std::string dataset_dir = r.required("dataset");
  const std::string checkpoint_path = r.required("checkpoint");
  const auto alpha = r.real_or_auto("alpha");
  const std::string mode = r.text("noise_mode", "oracle");
  const NoiseMode noise = as_config_error("noise_mode", [&] { return noise_mode_from_string(mode); });
  const auto eval_points = Eigen::Index(r.integer("eval_points", 4096));
  const std::uint64_t seed = r.seed("seed", 0);
  RunDir dir(r.text("out", ""));
  r.finish();
  if (alpha && !(*alpha > 0.0 && *alpha < 0.5)) throw ConfigError("alpha", "must lie in (0, 1/2)");
  if (eval_points < 1) throw ConfigError("eval_points", "must be >= 1");

  const Dataset dataset = load_dataset(dataset_dir);
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  std::vector<Eigen::MatrixXd> series;
  for (const Sample& s : dataset.train) series.push_back(s.observations.values);
  const HurstEstimate hurst = estimate_hurst_pooled(series);

  EvalOptions options;
  options.alpha = alpha.value_or(default_alpha(hurst.value));
  options.noise = noise;
  options.hurst = hurst.value;
  options.eval_points = eval_points;
  options.seed = derive_seed(seed, "evaluate");
  const EvalReport report =
      evaluate(checkpoint.field.as_field(), dataset, benchmark(dataset.config.dim), options);

  const fs::path& path = dir.open();
  Json report_json = to_json(report);
  report_json["hurst"] = hurst.value;
  report_json["alpha"] = options.alpha;
  write_text(path / "report.json", dump_json(report_json) + "\n");
  const Json config{{"dataset", dataset_dir},       {"checkpoint", checkpoint_path},
                    {"alpha", options.alpha},       {"noise_mode", to_string(noise)},
                    {"eval_points", eval_points}};
  write_manifest(path, run_manifest("evaluate", config, seed, r.settings(), {"report.json"}));
  dir.commit();
  out << dump_json(report_json) << "\n";
  return kExitOk;
}

template <typename Sweep>
int run_sweep(const std::string& command, RunDir& dir, std::uint64_t seed, const Reader& r,
              std::ostream& out, Sweep&& sweep) {
  const fs::path& path = dir.open();
  const SweepProgress progress = [&](const SweepTable& table) {
    write_sweep(table, path);
    out << table.name << ": control " << format_double(table.points.back().control) << " mean "
        << format_double(table.points.back().mean) << " std " << format_double(table.points.back().std)
        << "\n";
  };
  const SweepTable table = sweep(progress);
  write_sweep(table, path);
  write_manifest(path, run_manifest(command, table.config, seed, r.settings(),
                                    {"sweep_" + table.name + ".json"}));
  dir.commit();
  out << "slope " << (std::isfinite(table.slope) ? format_double(table.slope) : "nan") << " (reference "
      << format_double(table.slope_ref) << ")\n";
  return kExitOk;
}

int cmd_sweep_width(Reader& r, std::ostream& out) {
  WidthSweepConfig config;
  config.data = read_dataset_config(r);
  config.train = read_train_config(r, false);
  config.replicas = int(r.integer("replicas", config.replicas));
  config.seed = r.seed("seed", 0);
  const auto widths = r.integers("widths", {8, 16, 32, 64, 128});
  RunDir dir(r.text("out", ""));
  r.finish();
  validate_dataset(config.data);
  validate_train(config.train);
  if (config.replicas < 2) throw ConfigError("replicas", "must be >= 2");
  for (auto w : widths) {
    if (w < 4 || w > 1024) throw ConfigError("widths", "each width must lie in [4, 1024]");
  }
  return run_sweep("sweep-width", dir, config.seed, r, out,
                   [&](const SweepProgress& p) { return width_sweep(widths, config, p); });
}

int cmd_sweep_fitting(Reader& r, std::ostream& out) {
  FittingSweepConfig config;
  config.dim = Eigen::Index(r.integer("dim", config.dim));
  config.hurst = r.real("hurst", config.hurst);
  config.horizon = r.real("horizon", config.horizon);
  config.k = Eigen::Index(r.integer("k", config.k));
  config.alpha = r.real("alpha", config.alpha);
  config.gamma = r.real("gamma", config.gamma);
  config.replicas = int(r.integer("replicas", config.replicas));
  config.box = r.real("box", config.box);
  config.mvn.horizon_factor = r.real("mvn_horizon_factor", config.mvn.horizon_factor);
  config.mvn.refinement = int(r.integer("mvn_refinement", config.mvn.refinement));
  config.mvn.past_grading = r.real("mvn_past_grading", config.mvn.past_grading);
  if (const auto h = r.find("hurst_override"); h && *h != "none") {
    config.hurst_override = as_config_error("hurst_override", [&] { return std::stod(*h); });
  }
  config.seed = r.seed("seed", 0);
  const auto Ms = r.integers("Ms", {250, 500, 1000, 2000, 4000});
  RunDir dir(r.text("out", ""));
  r.finish();
  if (config.replicas < 2) throw ConfigError("replicas", "must be >= 2");
  if (!(config.hurst > 0.5 && config.hurst < 1.0)) throw ConfigError("hurst", "must lie in (1/2, 1)");
  if (!(config.alpha > 0.0 && config.alpha < 0.5)) throw ConfigError("alpha", "must lie in (0, 1/2)");
  return run_sweep("sweep-fitting", dir, config.seed, r, out,
                   [&](const SweepProgress& p) { return fitting_sweep(Ms, config, p); });
}

int cmd_sweep_time(Reader& r, std::ostream& out) {
  TimeSweepConfig config;
  config.dim = Eigen::Index(r.integer("dim", config.dim));
  config.hurst = r.real("hurst", config.hurst);
  config.horizon = r.real("horizon", config.horizon);
  config.alpha = r.real("alpha", config.alpha);
  config.replicas = int(r.integer("replicas", config.replicas));
  config.reference_refinement = int(r.integer("reference_refinement", config.reference_refinement));
  config.box = r.real("box", config.box);
  config.field = r.text("field", config.field);
  config.seed = r.seed("seed", 0);
  const auto dts = r.reals("dts", {0.003125, 0.00625, 0.0125, 0.025, 0.05});
  RunDir dir(r.text("out", ""));
  r.finish();
  if (config.replicas < 2) throw ConfigError("replicas", "must be >= 2");
  as_config_error("field", [&] { return time_sweep_field(config); });
  std::vector<double> sorted = dts;
  std::sort(sorted.begin(), sorted.end());
  return run_sweep("sweep-time", dir, config.seed, r, out,
                   [&](const SweepProgress& p) { return time_sweep(sorted, config, p); });
}

int cmd_selftest(Reader& r, std::ostream& out) {
  const std::uint64_t seed = r.seed("seed", 0);
  r.finish();
  bool ok = true;
  for (const SelftestResult& result : run_selftest(seed)) {
    out << (result.passed ? "PASS " : "FAIL ") << result.name << ": " << result.detail << "\n";
    ok = ok && result.passed;
  }
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning fractional SDEs from coarse observations", "fracsde"};
  app.set_version_flag("--version", build_version());
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(Reader&, std::ostream&);
  };
  const Command commands[] = {
      {"simulate", "generate a dataset from the benchmark field", cmd_simulate},
      {"estimate-hurst", "estimate H from a CSV series or a dataset", cmd_estimate_hurst},
      {"train", "fit drift and diffusion networks", cmd_train},
      {"evaluate", "evaluate a checkpoint on a dataset's test split", cmd_evaluate},
      {"sweep-width", "validation loss against network width", cmd_sweep_width},
      {"sweep-fitting", "Hurst-fitting error against observation count", cmd_sweep_fitting},
      {"sweep-time", "Euler error against step size", cmd_sweep_time},
      {"selftest", "finite-difference and covariance oracles", cmd_selftest},
  };
  std::string config_file;
  std::vector<std::string> overrides;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_file, "key=value file");
    sub->add_option("settings", overrides, "key=value overrides (later wins)");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForVersion&) {
    out << build_version() << "\n";
    return kExitOk;
  } catch (const CLI::Success&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const auto command = std::find_if(std::begin(commands), std::end(commands),
                                    [&](const Command& c) { return chosen->get_name() == c.name; });
  try {
    Settings settings;
    if (!config_file.empty()) {
      std::string text;
      try {
        text = read_text(config_file);
      } catch (const std::exception& e) {
        throw ConfigError("--config", e.what());
      }
      settings = parse_settings(text, config_file);
    }
    for (const std::string& item : overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError(item, "expected key=value");
      settings[item.substr(0, eq)] = item.substr(eq + 1);
    }
    Reader reader(std::move(settings));
    return command->fn(reader, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << chosen->get_name() << " failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace fracsde::cli
