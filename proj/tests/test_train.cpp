#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fracsde/train.hpp"

#include <algorithm>
#include <cmath>

using namespace fracsde;

namespace {

Dataset small_dataset(NoiseGenerator noise = NoiseGenerator::DaviesHarte, std::uint64_t seed = 2) {
  DatasetConfig cfg;
  cfg.seed = seed;
  cfg.n_train = 12;
  cfg.n_val = 4;
  cfg.n_test = 5;
  cfg.noise = noise;
  return generate_dataset(benchmark_1d(), cfg);
}

TrainConfig small_train() {
  TrainConfig cfg;
  cfg.width = 8;
  cfg.max_epochs = 6;
  cfg.patience = 3;
  cfg.group = 4;
  cfg.seed = 5;
  cfg.adam.learning_rate = 1e-2;
  return cfg;
}

}  // namespace

TEST_CASE("noise mode names and config validation") {
  CHECK(noise_mode_from_string(to_string(NoiseMode::Oracle)) == NoiseMode::Oracle);
  CHECK(noise_mode_from_string(to_string(NoiseMode::CoupledHurst)) == NoiseMode::CoupledHurst);
  CHECK_THROWS_AS(noise_mode_from_string("fresh"), std::invalid_argument);

  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 0.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.alpha = 0.3;
  cfg.width = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.width = 4;
  cfg.patience = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("driving increments") {
  const Dataset dh = small_dataset();
  const auto oracle = driving_increments(dh.config, dh.train, NoiseMode::Oracle, 0.62);
  REQUIRE(oracle.size() == dh.train.size());
  CHECK(oracle[3] == dh.train[3].trajectory.increments);
  CHECK_THROWS_AS(driving_increments(dh.config, dh.train, NoiseMode::CoupledHurst, 0.62),
                  std::invalid_argument);

  const Dataset mvn = small_dataset(NoiseGenerator::Mvn);
  const auto same = driving_increments(mvn.config, mvn.train, NoiseMode::CoupledHurst, 0.7);
  CHECK((same[2] - mvn.train[2].trajectory.increments).cwiseAbs().maxCoeff() < 1e-12);
  const auto other = driving_increments(mvn.config, mvn.train, NoiseMode::CoupledHurst, 0.75);
  CHECK(other[2] != mvn.train[2].trajectory.increments);
}

TEST_CASE("true field has zero path difference under oracle noise") {
  const Dataset d = small_dataset();
  const auto inc = driving_increments(d.config, d.test, NoiseMode::Oracle, 0.7);
  const auto diffs = path_differences(benchmark_1d(), d.test, inc, d.config.k, 0.4);
  REQUIRE(diffs.size() == d.test.size());
  CHECK(batch_loss(diffs) == 0.0);
  CHECK(diffs[0].values.cols() == d.config.M + 1);
  CHECK(diffs[0].dt == doctest::Approx(d.config.coarse_dt));
}

TEST_CASE("trajectory_gradient matches finite differences") {
  const Dataset d = small_dataset();
  Rng rng(3);
  NeuralField field = init_neural_field(1, 6, rng);
  const Sample& s = d.train[0];
  const TrajectoryGradient g = trajectory_gradient(field, s, s.trajectory.increments, d.config.k, 0.35);
  const auto loss = [&]() {
    return batch_loss(path_differences(field, {s}, {s.trajectory.increments}, d.config.k, 0.35));
  };
  CHECK(g.loss == doctest::Approx(loss()).epsilon(1e-14));
  const double h = 1e-6;
  for (MlpD* mlp : {&field.drift, &field.diffusion}) {
    const Eigen::VectorXd& analytic = mlp == &field.drift ? g.gradient.drift : g.gradient.diffusion;
    Eigen::VectorXd fd(mlp->size());
    for (Eigen::Index i = 0; i < mlp->size(); ++i) {
      const double saved = mlp->params()[i];
      mlp->params()[i] = saved + h;
      const double a = loss();
      mlp->params()[i] = saved - h;
      const double b = loss();
      mlp->params()[i] = saved;
      fd[i] = (a - b) / (2.0 * h);
    }
    CHECK((analytic - fd).norm() <= 1e-4 * std::max(1e-8, fd.norm()));
  }
}

TEST_CASE("train bookkeeping") {
  const Dataset d = small_dataset();
  const TrainConfig cfg = small_train();
  const TrainResult r = train(d, cfg);
  const TrainHistory& h = r.history;
  CHECK(h.train_loss.size() == h.val_loss.size());
  CHECK(h.last_epoch() <= cfg.max_epochs);
  CHECK(h.last_epoch() >= 1);
  const auto best = std::min_element(h.val_loss.begin(), h.val_loss.end());
  CHECK(h.best_epoch == int(best - h.val_loss.begin()));
  CHECK(r.alpha == doctest::Approx(default_alpha(r.hurst.value)));
  CHECK(r.hurst.value >= kHurstLower);
  CHECK(r.field.drift.width() == 8);
  CHECK(r.field.drift.params().cwiseAbs().maxCoeff() <= cfg.clip);
  CHECK(r.drift_optimizer.step > 0);

  // The returned field reproduces the best validation loss.
  const auto inc = driving_increments(d.config, d.validation, NoiseMode::Oracle, r.hurst.value);
  CHECK(batch_loss(path_differences(r.field, d.validation, inc, d.config.k, r.alpha)) ==
        doctest::Approx(*best).epsilon(1e-12));

  // Deterministic for a fixed seed.
  const TrainResult again = train(d, cfg);
  CHECK(again.field.drift.params() == r.field.drift.params());
  CHECK(again.history.val_loss == h.val_loss);

  TrainConfig fixed = cfg;
  fixed.alpha = 0.3;
  CHECK(train(d, fixed).alpha == 0.3);

  TrainConfig none = cfg;
  none.max_epochs = 0;
  const TrainResult untrained = train(d, none);
  CHECK(untrained.history.val_loss.size() == 1);
  CHECK(untrained.history.best_epoch == 0);
}

TEST_CASE("training reduces the loss") {
  const Dataset d = small_dataset(NoiseGenerator::DaviesHarte, 9);
  TrainConfig cfg = small_train();
  cfg.max_epochs = 40;
  cfg.patience = 40;
  const TrainResult r = train(d, cfg);
  CHECK(r.history.val_loss[std::size_t(r.history.best_epoch)] < 0.5 * r.history.val_loss.front());
  CHECK(r.history.train_loss.back() < r.history.train_loss.front());
}

TEST_CASE("evaluate") {
  const Dataset d = small_dataset();
  EvalOptions opt;
  opt.eval_points = 300;
  const EvalReport exact = evaluate(benchmark_1d(), d, benchmark_1d(), opt);
  CHECK(exact.loss_mean == 0.0);
  CHECK(exact.loss_std == 0.0);
  CHECK(exact.trajectories == 5);
  CHECK(exact.recovery.l2_drift == 0.0);
  CHECK(exact.recovery.samples == 300);

  const EvalReport off = evaluate(linear_field(1, 1.0, 0.5), d, benchmark_1d(), opt);
  CHECK(off.loss_mean > 0.0);
  CHECK(off.loss_std > 0.0);
  CHECK(off.recovery.l2_drift > 0.0);

  const Json j = to_json(off);
  for (const char* key : {"test_loss_mean", "test_loss_std", "trajectories", "l2_drift", "l2_diffusion",
                          "rel_l2_drift", "rel_l2_diffusion", "eval_points", "excluded_drift_points"}) {
    CHECK(j.contains(key));
  }
  CHECK(to_json(TrainConfig{})["alpha"] == "auto");
}
