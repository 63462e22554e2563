#include "fracsde/sde.hpp"

#include <cstdio>
#include <stdexcept>

namespace fracsde {

namespace {

std::string trajectory_name(std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof(name), "traj_%04zu.csv", index);
  return name;
}

CsvTable fine_table(const Trajectory& traj) {
  const Eigen::Index d = traj.dim();
  CsvTable table;
  table.header.push_back("t");
  for (Eigen::Index c = 0; c < d; ++c) table.header.push_back("x_" + std::to_string(c + 1));
  for (Eigen::Index c = 0; c < d; ++c) table.header.push_back("dB_" + std::to_string(c + 1));
  for (Eigen::Index i = 0; i < traj.states.cols(); ++i) {
    std::vector<double> row{traj.time(i)};
    for (Eigen::Index c = 0; c < d; ++c) row.push_back(traj.states(c, i));
    for (Eigen::Index c = 0; c < d; ++c) {
      row.push_back(i < traj.steps() ? traj.increments(c, i) : 0.0);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable coarse_table(const Observations& obs) {
  const Eigen::Index d = obs.values.rows();
  CsvTable table;
  table.header.push_back("t");
  for (Eigen::Index c = 0; c < d; ++c) table.header.push_back("x_" + std::to_string(c + 1));
  for (Eigen::Index m = 0; m < obs.values.cols(); ++m) {
    std::vector<double> row{obs.dt * double(m)};
    for (Eigen::Index c = 0; c < d; ++c) row.push_back(obs.values(c, m));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

Json to_json(const DatasetConfig& config) {
  return Json{{"dim", config.dim},
              {"hurst", config.hurst},
              {"coarse_dt", config.coarse_dt},
              {"k", config.k},
              {"M", config.M},
              {"n_train", config.n_train},
              {"n_val", config.n_val},
              {"n_test", config.n_test},
              {"box", config.box},
              {"seed", config.seed},
              {"noise", to_string(config.noise)},
              {"mvn_horizon_factor", config.mvn.horizon_factor},
              {"mvn_refinement", config.mvn.refinement},
              {"mvn_past_grading", config.mvn.past_grading}};
}

DatasetConfig dataset_config_from_json(const Json& json) {
  DatasetConfig config;
  config.dim = json.at("dim").get<Eigen::Index>();
  config.hurst = json.at("hurst").get<double>();
  config.coarse_dt = json.at("coarse_dt").get<double>();
  config.k = json.at("k").get<Eigen::Index>();
  config.M = json.at("M").get<Eigen::Index>();
  config.n_train = json.at("n_train").get<Eigen::Index>();
  config.n_val = json.at("n_val").get<Eigen::Index>();
  config.n_test = json.at("n_test").get<Eigen::Index>();
  config.box = json.at("box").get<double>();
  config.seed = json.at("seed").get<std::uint64_t>();
  config.noise = noise_generator_from_string(json.at("noise").get<std::string>());
  config.mvn.horizon_factor = json.at("mvn_horizon_factor").get<double>();
  config.mvn.refinement = json.at("mvn_refinement").get<int>();
  config.mvn.past_grading = json.at("mvn_past_grading").get<double>();
  return config;
}

Json save_dataset(const Dataset& dataset, const std::filesystem::path& dir, const Json& run_info) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "trajectories");
  fs::create_directories(dir / "observations");

  Json manifest = run_info;
  manifest["kind"] = "dataset";
  manifest["config"] = to_json(dataset.config);
  manifest["box"] = dataset.box;
  manifest["regenerated"] = dataset.regenerated;

  Json splits = Json::object();
  Json seeds = Json::array();
  Json files = Json::array();
  std::size_t index = 0;
  const std::pair<const char*, const std::vector<Sample>*> parts[] = {
      {"train", &dataset.train}, {"validation", &dataset.validation}, {"test", &dataset.test}};
  for (const auto& [name, samples] : parts) {
    Json ids = Json::array();
    for (const Sample& s : *samples) {
      const std::string file = trajectory_name(index);
      write_csv(dir / "trajectories" / file, fine_table(s.trajectory));
      write_csv(dir / "observations" / file, coarse_table(s.observations));
      files.push_back("trajectories/" + file);
      files.push_back("observations/" + file);
      seeds.push_back(s.noise_seed);
      ids.push_back(index++);
    }
    splits[name] = ids;
  }
  manifest["splits"] = splits;
  manifest["noise_seeds"] = seeds;
  manifest["files"] = files;
  write_text(dir / "manifest.json", dump_json(manifest));
  return manifest;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const Json manifest = Json::parse(read_text(dir / "manifest.json"));
  Dataset dataset;
  dataset.config = dataset_config_from_json(manifest.at("config"));
  dataset.box = manifest.at("box").get<double>();
  dataset.regenerated = manifest.at("regenerated").get<Eigen::Index>();
  const Json& seeds = manifest.at("noise_seeds");
  const Eigen::Index d = dataset.config.dim;

  auto load = [&](std::size_t index) {
    const std::string file = trajectory_name(index);
    const CsvTable fine = read_csv(dir / "trajectories" / file);
    const CsvTable coarse = read_csv(dir / "observations" / file);
    if (fine.header.size() != std::size_t(1 + 2 * d) || coarse.header.size() != std::size_t(1 + d) ||
        fine.rows.size() < 2) {
      throw std::runtime_error("malformed trajectory files for " + file);
    }
    Sample s;
    s.noise_seed = seeds.at(index).get<std::uint64_t>();
    const Eigen::Index n = Eigen::Index(fine.rows.size()) - 1;
    s.trajectory.dt = dataset.config.fine_dt();
    s.trajectory.hurst = dataset.config.hurst;
    s.trajectory.states.resize(d, n + 1);
    s.trajectory.increments.resize(d, n);
    for (Eigen::Index i = 0; i <= n; ++i) {
      for (Eigen::Index c = 0; c < d; ++c) {
        s.trajectory.states(c, i) = fine.rows[i][1 + c];
        if (i < n) s.trajectory.increments(c, i) = fine.rows[i][1 + d + c];
      }
    }
    s.observations.dt = dataset.config.coarse_dt;
    s.observations.values.resize(d, Eigen::Index(coarse.rows.size()));
    for (std::size_t m = 0; m < coarse.rows.size(); ++m) {
      for (Eigen::Index c = 0; c < d; ++c) s.observations.values(c, Eigen::Index(m)) = coarse.rows[m][1 + c];
    }
    return s;
  };

  for (const auto& id : manifest.at("splits").at("train")) dataset.train.push_back(load(id.get<std::size_t>()));
  for (const auto& id : manifest.at("splits").at("validation")) {
    dataset.validation.push_back(load(id.get<std::size_t>()));
  }
  for (const auto& id : manifest.at("splits").at("test")) dataset.test.push_back(load(id.get<std::size_t>()));
  return dataset;
}

}  // namespace fracsde
