#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fracsde/checkpoint.hpp"
#include "fracsde/net.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace fracsde;

namespace {

Eigen::VectorXd input_of(double t, double x) {
  Eigen::VectorXd u(2);
  u << t, x;
  return u;
}

}  // namespace

TEST_CASE("forward") {
  MlpD net(2, 4, 1);
  net.params().setZero();
  CHECK(forward(net, input_of(0.3, -2.0))[0] == 0.0);
  net.b2()[0] = 0.5;
  CHECK(forward(net, input_of(0.3, -2.0))[0] == 0.5);
  CHECK(forward(net, input_of(9.0, 7.0))[0] == 0.5);
  CHECK_THROWS_AS(forward(net, Eigen::VectorXd::Zero(3)), std::invalid_argument);

  // Hand evaluation with one hidden unit.
  MlpD one(2, 1, 1);
  one.W1() << 0.5, -1.0;
  one.b1() << 0.25;
  one.W2() << 2.0;
  one.b2() << -0.1;
  CHECK(forward(one, input_of(1.0, 0.5))[0] == doctest::Approx(2.0 * std::tanh(0.25) - 0.1));
}

TEST_CASE("output bound from tanh") {
  Rng rng(3);
  const MlpD net = init_mlp(3, 16, 2, rng);
  const double bound = net.W2().cwiseAbs().rowwise().sum().maxCoeff() + net.b2().cwiseAbs().maxCoeff();
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 10000; ++i) {
    Eigen::VectorXd in(3);
    in << u(rng), u(rng), u(rng);
    CHECK(forward(net, in).cwiseAbs().maxCoeff() <= bound + 1e-12);
  }
}

TEST_CASE("init is uniform within 1/sqrt(fan_in)") {
  Rng rng(8);
  const MlpD net = init_mlp(2, 128, 1, rng);
  CHECK(net.W1().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(2.0));
  CHECK(net.W2().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(128.0));
  CHECK(net.size() == 128 * 2 + 128 + 128 + 1);
}

TEST_CASE("vjp") {
  Rng rng(11);
  const MlpD net = init_mlp(2, 8, 1, rng);
  const Eigen::VectorXd in = input_of(0.4, -0.7);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  const MlpGradient<double> g0 = vjp(net, in, zero);
  CHECK(g0.params.isZero());
  CHECK(g0.input.isZero());

  Eigen::VectorXd up(1);
  up << 0.8;
  const MlpGradient<double> g1 = vjp(net, in, up);
  const MlpGradient<double> g2 = vjp(net, in, Eigen::VectorXd(2.0 * up));
  CHECK((g2.params - 2.0 * g1.params).norm() <= 1e-14 * g1.params.norm());
  CHECK((g2.input - 2.0 * g1.input).norm() <= 1e-14 * g1.input.norm());
  CHECK_THROWS_AS(vjp(net, in, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("vjp matches central finite differences on 100 random configurations") {
  const double h = 1e-5;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(99, "net-fd", trial));
    const Eigen::Index d = 1 + Eigen::Index(trial % 3), out = 1 + Eigen::Index(trial % 2);
    MlpD net = init_mlp(d + 1, 8, out, rng);
    const Eigen::VectorXd in = standard_normal(rng, d + 1);
    const Eigen::VectorXd up = standard_normal(rng, out);
    const MlpGradient<double> g = vjp(net, in, up);
    const auto objective = [&](const MlpD& n, const Eigen::VectorXd& u) { return up.dot(forward(n, u)); };

    Eigen::VectorXd fd(net.size());
    for (Eigen::Index i = 0; i < net.size(); ++i) {
      const double saved = net.params()[i];
      net.params()[i] = saved + h;
      const double a = objective(net, in);
      net.params()[i] = saved - h;
      const double b = objective(net, in);
      net.params()[i] = saved;
      fd[i] = (a - b) / (2.0 * h);
    }
    CHECK((g.params - fd).norm() <= 1e-4 * fd.norm());

    Eigen::VectorXd fd_in(in.size());
    for (Eigen::Index i = 0; i < in.size(); ++i) {
      Eigen::VectorXd p = in, m = in;
      p[i] += h;
      m[i] -= h;
      fd_in[i] = (objective(net, p) - objective(net, m)) / (2.0 * h);
    }
    CHECK((g.input - fd_in).norm() <= 1e-4 * fd_in.norm());
  }
}

TEST_CASE("positive_diffusion") {
  Eigen::VectorXd raw(3);
  raw << 0.0, -100.0, 100.0;
  const Eigen::VectorXd s = positive_diffusion(raw);
  CHECK(s[0] == doctest::Approx(std::log(2.0) + 1e-3).epsilon(1e-15));
  CHECK(s[0] == doctest::Approx(0.69415).epsilon(1e-5));
  CHECK(s[1] == doctest::Approx(1e-3).epsilon(1e-12));
  // exp(-100) vanishes against the floor in double precision.
  CHECK(s[1] >= kDiffusionFloor);
  Eigen::VectorXd moderate(1);
  moderate << -30.0;
  CHECK(positive_diffusion(moderate)[0] > kDiffusionFloor);
  CHECK(s[2] == doctest::Approx(100.001).epsilon(1e-14));
  Eigen::VectorXd huge(2);
  huge << 1000.0, -1000.0;
  CHECK(positive_diffusion(huge).allFinite());

  // Slope is the derivative of the transform.
  for (double x : {-3.0, -0.2, 0.0, 1.5, 20.0}) {
    Eigen::VectorXd p(1), m(1), v(1);
    p << x + 1e-6;
    m << x - 1e-6;
    v << x;
    const double fd = (positive_diffusion(p)[0] - positive_diffusion(m)[0]) / 2e-6;
    CHECK(positive_diffusion_slope(v)[0] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("clip_params") {
  MlpD net(2, 2, 1);
  net.params().setConstant(1.0);
  CHECK(clip_params(net, 5.0).params() == net.params());
  net.params()[3] = 7.3;
  net.params()[4] = -9.0;
  const MlpD once = clip_params(net, 5.0);
  CHECK(once.params()[3] == 5.0);
  CHECK(once.params()[4] == -5.0);
  CHECK(clip_params(once, 5.0).params() == once.params());
  CHECK_THROWS_AS(clip_params(net, 0.0), std::invalid_argument);
}

TEST_CASE("clipped networks are Lipschitz in x with c^2 n sqrt(d)") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> big(-20.0, 20.0);
  const double c = 1.5;
  const Eigen::Index n = 6, d = 2;
  for (int trial = 0; trial < 20; ++trial) {
    MlpD net(d + 1, n, 1);
    for (Eigen::Index i = 0; i < net.size(); ++i) net.params()[i] = big(rng);
    net = clip_params(net, c);
    for (int i = 0; i < 200; ++i) {
      Eigen::VectorXd u(d + 1);
      u << big(rng), big(rng), big(rng);
      Eigen::VectorXd v = u;
      v.tail(d) += 1e-3 * Eigen::VectorXd::Random(d);
      const double ratio = (forward(net, u) - forward(net, v)).norm() / (u - v).norm();
      CHECK(ratio <= c * c * double(n) * std::sqrt(double(d)));
    }
  }
}

TEST_CASE("adam_step") {
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  AdamState state(3, cfg);
  Eigen::VectorXd p(3);
  p << 1.0, -2.0, 3.0;
  const Eigen::VectorXd before = p;
  adam_step(state, p, Eigen::VectorXd::Zero(3));
  CHECK(p == before);
  CHECK(state.step == 1);

  // First step moves by -lr * sign(g).
  AdamState fresh(3, cfg);
  Eigen::VectorXd g(3);
  g << 0.3, -7.0, 1e-3;
  Eigen::VectorXd q = before;
  adam_step(fresh, q, g);
  for (int i = 0; i < 3; ++i) {
    CHECK(q[i] - before[i] == doctest::Approx(-cfg.learning_rate * (g[i] > 0 ? 1.0 : -1.0)).epsilon(1e-4));
  }

  // Decoupled decay with zero gradients shrinks by (1 - lr * wd).
  AdamConfig decay;
  decay.weight_decay = 0.1;
  decay.learning_rate = 0.01;
  AdamState ds(3, decay);
  Eigen::VectorXd r = before;
  for (int k = 0; k < 5; ++k) adam_step(ds, r, Eigen::VectorXd::Zero(3));
  CHECK(r.isApprox(before * std::pow(1.0 - 0.01 * 0.1, 5), 1e-14));
  CHECK(ds.step == 5);

  Eigen::VectorXd bad = g;
  bad[1] = std::nan("");
  CHECK_THROWS_AS(adam_step(ds, r, bad), std::runtime_error);
  CHECK(ds.step == 5);
  CHECK_THROWS_AS(adam_step(ds, r, Eigen::VectorXd::Zero(2)), std::invalid_argument);

  // Deterministic.
  AdamState a(3, cfg), b(3, cfg);
  Eigen::VectorXd pa = before, pb = before;
  for (int k = 0; k < 3; ++k) {
    adam_step(a, pa, g * double(k + 1));
    adam_step(b, pb, g * double(k + 1));
  }
  CHECK(pa == pb);
}

TEST_CASE("checkpoint round trip") {
  Rng rng(2);
  Checkpoint cp;
  cp.field = init_neural_field(2, 5, rng);
  cp.clip = 4.0;
  cp.drift_optimizer = AdamState(cp.field.drift.size(), AdamConfig{});
  cp.diffusion_optimizer = AdamState(cp.field.diffusion.size(), AdamConfig{});
  adam_step(*cp.drift_optimizer, cp.field.drift.params(), Eigen::VectorXd::Ones(cp.field.drift.size()));
  cp.config_hash = "abc";
  const auto file = std::filesystem::temp_directory_path() / "fracsde_cp_test.json";
  save_checkpoint(cp, file);
  const Checkpoint back = load_checkpoint(file);
  CHECK(back.field.drift.params() == cp.field.drift.params());
  CHECK(back.field.diffusion.params() == cp.field.diffusion.params());
  CHECK(back.field.drift.width() == 5);
  CHECK(back.clip == 4.0);
  CHECK(back.config_hash == "abc");
  REQUIRE(back.drift_optimizer);
  CHECK(back.drift_optimizer->step == 1);
  CHECK(back.drift_optimizer->second_moment == cp.drift_optimizer->second_moment);
  std::filesystem::remove(file);
}
