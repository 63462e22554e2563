#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fracsde/sde.hpp"

#include <cmath>
#include <filesystem>

using namespace fracsde;

namespace {

double sum_states(const Trajectory& t, const Eigen::MatrixXd& weights) {
  return (t.states.array() * weights.array()).sum();
}

}  // namespace

TEST_CASE("euler_rollout on closed-form fields") {
  const Eigen::MatrixXd inc = Eigen::MatrixXd::Random(2, 10);
  const Eigen::Vector2d x0(1.5, -0.5);

  const Trajectory still = euler_rollout(linear_field(2, 0.0, 0.0), x0, inc, 0.1);
  CHECK(still.states.cols() == 11);
  for (Eigen::Index i = 0; i <= 10; ++i) CHECK(still.states.col(i) == Eigen::VectorXd(x0));

  const Trajectory decay = euler_rollout(linear_field(2, 1.0, 0.0), x0, inc, 0.1);
  for (Eigen::Index i = 0; i <= 10; ++i) {
    CHECK(decay.states(0, i) == doctest::Approx(std::pow(0.9, double(i)) * 1.5).epsilon(1e-14));
  }

  // Pure noise with sigma = 1 reproduces the cumulative sum.
  const Trajectory walk = euler_rollout(linear_field(2, 0.0, 1.0), x0, inc, 0.1);
  CHECK(walk.states.col(10).isApprox(x0 + inc.rowwise().sum(), 1e-14));
  CHECK(walk.increments == inc);
}

TEST_CASE("single Euler step by hand") {
  const CoefficientField f = benchmark_1d();
  Eigen::MatrixXd inc(1, 1);
  inc << 0.3;
  const Trajectory t = euler_rollout(f, Eigen::VectorXd::Constant(1, 1.0), inc, 0.25);
  const double expected = 1.0 + (-1.0 + std::tanh(1.0) / 4.0) * 0.25 + (0.5 + 0.2 * std::tanh(1.0)) * 0.3;
  CHECK(t.states(0, 1) == doctest::Approx(expected).epsilon(1e-15));

  CHECK_THROWS_AS(euler_rollout(f, Eigen::VectorXd::Zero(2), inc, 0.25), std::invalid_argument);
  CHECK_THROWS_AS(euler_rollout(f, Eigen::VectorXd::Zero(1), inc, 0.0), std::invalid_argument);

  Eigen::MatrixXd huge(1, 3);
  huge << 1e300, 1e300, 1e300;
  CHECK_THROWS_AS(euler_rollout(linear_field(1, 0.0, 1e10), Eigen::VectorXd::Ones(1), huge, 0.1),
                  std::runtime_error);
}

TEST_CASE("neural rollout agrees with its CoefficientField view") {
  Rng rng(6);
  const NeuralField net = init_neural_field(2, 8, rng);
  const Eigen::MatrixXd inc = 0.1 * Eigen::MatrixXd::Random(2, 12);
  const Eigen::Vector2d x0(0.2, -0.4);
  const Trajectory a = euler_rollout(net, x0, inc, 0.05);
  const Trajectory b = euler_rollout(net.as_field(), x0, inc, 0.05);
  CHECK((a.states - b.states).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("downsample") {
  Trajectory t;
  t.dt = 0.1;
  t.states = Eigen::MatrixXd(1, 13);
  for (Eigen::Index i = 0; i < 13; ++i) t.states(0, i) = double(i);
  t.increments = Eigen::MatrixXd::Zero(1, 12);
  const Observations o = downsample(t, 4);
  CHECK(o.count() == 3);
  CHECK(o.dt == doctest::Approx(0.4));
  CHECK(o.values(0, 0) == 0.0);
  CHECK(o.values(0, 1) == 4.0);
  CHECK(o.values(0, 3) == 12.0);
  CHECK(downsample(t, 1).values == t.states);
  CHECK_THROWS_AS(downsample(t, 5), std::invalid_argument);
  CHECK_THROWS_AS(downsample(t, 0), std::invalid_argument);
}

TEST_CASE("rollout_vjp") {
  Rng rng(13);
  const NeuralField net = init_neural_field(1, 6, rng);
  const Eigen::MatrixXd inc = 0.2 * Eigen::MatrixXd::Random(1, 8);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 0.7);
  const Trajectory t = euler_rollout(net, x0, inc, 0.1);

  const FieldGradient zero = rollout_vjp(net, t, Eigen::MatrixXd::Zero(1, 9));
  CHECK(zero.drift.isZero());
  CHECK(zero.diffusion.isZero());

  const Trajectory still = euler_rollout(net, x0, Eigen::MatrixXd::Zero(1, 8), 0.1);
  const FieldGradient no_noise = rollout_vjp(net, still, Eigen::MatrixXd::Ones(1, 9));
  CHECK(no_noise.diffusion.isZero());
  CHECK_FALSE(no_noise.drift.isZero());
  CHECK_THROWS_AS(rollout_vjp(net, t, Eigen::MatrixXd::Zero(1, 8)), std::invalid_argument);

  // Central finite differences on a random linear functional of the path.
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    Rng r(derive_seed(21, "vjp", trial));
    NeuralField field = init_neural_field(2, 5, r);
    const Eigen::MatrixXd noise = 0.3 * Eigen::MatrixXd::Random(2, 6);
    const Eigen::VectorXd start = standard_normal(r, 2);
    Eigen::MatrixXd w(2, 7);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = standard_normal(r, 1)[0];
    const FieldGradient g = rollout_vjp(field, euler_rollout(field, start, noise, 0.08), w);
    const double h = 1e-6;
    for (MlpD* mlp : {&field.drift, &field.diffusion}) {
      const Eigen::VectorXd& analytic = mlp == &field.drift ? g.drift : g.diffusion;
      Eigen::VectorXd fd(mlp->size());
      for (Eigen::Index i = 0; i < mlp->size(); ++i) {
        const double saved = mlp->params()[i];
        mlp->params()[i] = saved + h;
        const double a = sum_states(euler_rollout(field, start, noise, 0.08), w);
        mlp->params()[i] = saved - h;
        const double b = sum_states(euler_rollout(field, start, noise, 0.08), w);
        mlp->params()[i] = saved;
        fd[i] = (a - b) / (2.0 * h);
      }
      CHECK((analytic - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("dataset generation") {
  DatasetConfig cfg;
  cfg.seed = 3;
  cfg.n_train = 10;
  cfg.n_val = 3;
  cfg.n_test = 4;
  const Dataset a = generate_dataset(benchmark_1d(), cfg);
  CHECK(a.train.size() == 10);
  CHECK(a.validation.size() == 3);
  CHECK(a.test.size() == 4);
  const Sample& s = a.train.front();
  CHECK(s.trajectory.states.cols() == 81);
  CHECK(s.observations.values.cols() == 21);
  CHECK(s.observations.dt == doctest::Approx(0.05));
  CHECK(s.trajectory.dt == doctest::Approx(0.0125));
  CHECK(s.trajectory.hurst == 0.7);
  CHECK(s.observations.values.col(20) == s.trajectory.states.col(80));

  const Dataset b = generate_dataset(benchmark_1d(), cfg);
  CHECK(b.test.back().trajectory.states == a.test.back().trajectory.states);
  cfg.seed = 4;
  CHECK(generate_dataset(benchmark_1d(), cfg).train[0].trajectory.states != s.trajectory.states);

  // Recorded increments replay the path exactly.
  const Trajectory replay = euler_rollout(benchmark_1d(), s.trajectory.states.col(0),
                                          s.trajectory.increments, s.trajectory.dt);
  CHECK(replay.states == s.trajectory.states);
  cfg.seed = 3;
  CHECK(sample_increments(cfg, s.noise_seed, cfg.hurst) == s.trajectory.increments);

  CHECK_THROWS_AS(generate_dataset(benchmark_2d(), cfg), std::invalid_argument);
  cfg.k = 0;
  CHECK_THROWS_AS(generate_dataset(benchmark_1d(), cfg), std::invalid_argument);
}

TEST_CASE("default dataset sizes and range") {
  DatasetConfig cfg;
  cfg.seed = 1;
  const Dataset d = generate_dataset(benchmark_1d(), cfg);
  CHECK(d.train.size() == 100);
  CHECK(d.validation.size() == 28);
  CHECK(d.test.size() == 32);
  long inside = 0, total = 0;
  for (const auto* split : {&d.train, &d.validation, &d.test}) {
    for (const Sample& s : *split) {
      inside += (s.trajectory.states.array().abs() <= 4.0).count();
      total += s.trajectory.states.size();
    }
  }
  CHECK(double(inside) > 0.99 * double(total));
  CHECK(d.box >= 0.5);
  CHECK(d.box <= 4.0);
  CHECK(std::fmod(d.box, 0.5) == 0.0);
}

TEST_CASE("MvN-driven dataset") {
  DatasetConfig cfg;
  cfg.dim = 2;
  cfg.noise = NoiseGenerator::Mvn;
  cfg.n_train = 3;
  cfg.n_val = 1;
  cfg.n_test = 1;
  const Dataset d = generate_dataset(benchmark_2d(), cfg);
  const Sample& s = d.train[1];
  CHECK(sample_increments(cfg, s.noise_seed, cfg.hurst) == s.trajectory.increments);
  CHECK(noise_generator_from_string(to_string(NoiseGenerator::Mvn)) == NoiseGenerator::Mvn);
  CHECK_THROWS_AS(noise_generator_from_string("gauss"), std::invalid_argument);
}

TEST_CASE("dataset save and load") {
  DatasetConfig cfg;
  cfg.dim = 2;
  cfg.seed = 8;
  cfg.n_train = 2;
  cfg.n_val = 1;
  cfg.n_test = 2;
  const Dataset d = generate_dataset(benchmark_2d(), cfg);
  const auto dir = std::filesystem::temp_directory_path() / "fracsde_dataset_test";
  std::filesystem::remove_all(dir);
  const Json manifest = save_dataset(d, dir, Json{{"seed", 8}});
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "trajectories" / "traj_0000.csv"));
  CHECK(std::filesystem::exists(dir / "observations" / "traj_0004.csv"));
  CHECK(manifest["seed"] == 8);

  const Dataset back = load_dataset(dir);
  CHECK(back.config.dim == 2);
  CHECK(back.config.seed == 8);
  REQUIRE(back.train.size() == 2);
  REQUIRE(back.test.size() == 2);
  CHECK(back.test[1].trajectory.states == d.test[1].trajectory.states);
  CHECK(back.test[1].trajectory.increments == d.test[1].trajectory.increments);
  CHECK(back.train[0].observations.values == d.train[0].observations.values);
  CHECK(back.train[0].observations.dt == d.train[0].observations.dt);
  CHECK(back.box == d.box);
  std::filesystem::remove_all(dir);
}
