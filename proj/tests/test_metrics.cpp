#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fracsde/fields.hpp"
#include "fracsde/metrics.hpp"
#include "fracsde/noise.hpp"

#include <cmath>

using namespace fracsde;

namespace {

Eigen::MatrixXd row(std::initializer_list<double> v) {
  Eigen::MatrixXd out(1, Eigen::Index(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(0, i++) = x;
  return out;
}

// Direct transcription of the double sum.
double reference_norm(const Eigen::MatrixXd& f, double dt, double alpha) {
  double best = 0.0;
  for (Eigen::Index m = 0; m < f.cols(); ++m) {
    double v = f.col(m).norm();
    for (Eigen::Index k = 0; k < m; ++k) {
      v += (f.col(m) - f.col(k)).norm() / std::pow(double(m - k) * dt, alpha + 1.0) * dt;
    }
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

TEST_CASE("frac_path_norm examples") {
  CHECK(frac_path_norm(Eigen::MatrixXd::Zero(2, 5), 0.1, 0.3) == 0.0);
  CHECK(frac_path_norm(row({0.0, 1.0}), 1.0, 0.3) == doctest::Approx(2.0));
  CHECK(frac_path_norm(PathDiff{row({0.0, 1.0}), 1.0, 0.3}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(frac_path_norm(Eigen::MatrixXd(1, 0), 0.1, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(frac_path_norm(row({1.0}), 0.0, 0.3), std::invalid_argument);

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd f = Eigen::MatrixXd::Random(2, 15);
    CHECK(frac_path_norm(f, 0.05, 0.35) == doctest::Approx(reference_norm(f, 0.05, 0.35)).epsilon(1e-13));
  }
}

TEST_CASE("frac_path_norm is a norm") {
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd f = Eigen::MatrixXd::Random(2, 12);
    const Eigen::MatrixXd g = Eigen::MatrixXd::Random(2, 12);
    const double nf = frac_path_norm(f, 0.05, 0.3);
    CHECK(frac_path_norm(Eigen::MatrixXd(-2.5 * f), 0.05, 0.3) == doctest::Approx(2.5 * nf).epsilon(1e-13));
    CHECK(frac_path_norm(Eigen::MatrixXd(f + g), 0.05, 0.3) <= nf + frac_path_norm(g, 0.05, 0.3) + 1e-12);
  }
}

TEST_CASE("subgradient") {
  CHECK(frac_norm_subgradient(Eigen::MatrixXd::Zero(1, 4), 0.1, 0.3).isZero());
  const Eigen::MatrixXd g = frac_norm_subgradient(row({0.0, 1.0}), 1.0, 0.3);
  CHECK(g(0, 1) == doctest::Approx(2.0));
  CHECK(g(0, 0) == doctest::Approx(-1.0));

  // Ties in the outer max go to the smallest index: (1, 1) has terms 1 and 1.
  const auto [value, arg] = frac_path_norm_argmax(row({1.0, 1.0}), 1.0, 0.3);
  CHECK(value == 1.0);
  CHECK(arg == 0);

  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    Rng rng(derive_seed(5, "subgrad", trial));
    Eigen::MatrixXd f(2, 10);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = standard_normal(rng, 1)[0];
    const Eigen::MatrixXd grad = frac_norm_subgradient(f, 0.05, 0.4);
    const double h = 1e-7;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      Eigen::MatrixXd p = f, m = f;
      p.data()[i] += h;
      m.data()[i] -= h;
      const double fd = (frac_path_norm(p, 0.05, 0.4) - frac_path_norm(m, 0.05, 0.4)) / (2.0 * h);
      CHECK(std::abs(grad.data()[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("batch_loss") {
  const PathDiff a{row({0.0, 1.0}), 1.0, 0.3};
  const PathDiff b{row({0.0, 2.0}), 1.0, 0.3};
  CHECK(batch_loss({a}) == doctest::Approx(2.0));
  CHECK(batch_loss({a, b}) == doctest::Approx(3.0));
  CHECK(batch_loss({b, a}) == batch_loss({a, b}));
  CHECK(batch_loss({PathDiff{Eigen::MatrixXd::Zero(1, 3), 1.0, 0.3}}) == 0.0);
  CHECK_THROWS_AS(batch_loss({}), std::invalid_argument);
}

TEST_CASE("default alpha is the midpoint of (1 - H, 1/2)") {
  CHECK(default_alpha(0.7) == doctest::Approx(0.4));
  CHECK(default_alpha(0.9) == doctest::Approx(0.3));
}

TEST_CASE("uniform evaluation points") {
  const auto pts = uniform_eval_points(2, 1.5, 3.0, 500, 9);
  REQUIRE(pts.size() == 500);
  for (const auto& p : pts) {
    CHECK(p.t >= 0.0);
    CHECK(p.t <= 1.5);
    CHECK(p.x.size() == 2);
    CHECK(p.x.cwiseAbs().maxCoeff() <= 3.0);
  }
  const auto again = uniform_eval_points(2, 1.5, 3.0, 500, 9);
  CHECK(again[17].x == pts[17].x);
  CHECK(again[17].t == pts[17].t);
}

TEST_CASE("recovery metrics") {
  const CoefficientField truth = benchmark_1d();
  const auto pts = uniform_eval_points(1, 1.0, 4.0, 1000, 3);
  const RecoveryReport same = recovery_metrics(truth, truth, pts);
  CHECK(same.l2_drift == 0.0);
  CHECK(same.l2_diffusion == 0.0);
  CHECK(same.rel_drift == 0.0);
  CHECK(same.rel_diffusion == 0.0);
  CHECK(same.samples == 1000);

  CoefficientField offset = truth;
  offset.drift = [truth](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return truth.drift(t, x).array() + 0.1;
  };
  const RecoveryReport r = recovery_metrics(offset, truth, pts);
  CHECK(r.l2_drift == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.l2_diffusion == 0.0);
  CHECK(r.rel_drift > 0.0);

  // Zero true drift at x = 0 is excluded from the relative average.
  std::vector<EvalPoint> at_zero{{0.5, Eigen::VectorXd::Zero(1)}, {0.5, Eigen::VectorXd::Ones(1)}};
  const RecoveryReport z = recovery_metrics(offset, truth, at_zero);
  CHECK(z.excluded_drift == 1);
  CHECK(z.rel_drift == doctest::Approx(0.1 / std::abs(truth.drift(0.5, Eigen::VectorXd::Ones(1))[0])));
}

TEST_CASE("holder_diff_seminorm") {
  const CoupledPair p = mvn_coupled_pair(0.7, 0.8, 32, 1.0 / 32, 3);
  CHECK(holder_diff_seminorm(p.a, p.a, 0.4) == 0.0);
  const double base = holder_diff_seminorm(p.a, p.b, 0.4);
  CHECK(base > 0.0);
  FbmPath a2 = p.a, b2 = p.b;
  a2.values *= 3.0;
  b2.values *= 3.0;
  CHECK(holder_diff_seminorm(a2, b2, 0.4) == doctest::Approx(3.0 * base).epsilon(1e-12));

  // Hand value: g = (0, 1, 0), dt = 1, alpha = 0.5.
  FbmPath x{0.7, 1.0, Eigen::Vector3d(0.0, 1.0, 0.0)};
  FbmPath zero{0.7, 1.0, Eigen::Vector3d::Zero()};
  // pairs: (0,1): 1/1 = 1; (1,2): 1/1 = 1; (0,2): 0/2^{0.5} + |g2 - g1|/1^{1.5} = 1. max = 1.
  CHECK(holder_diff_seminorm(x, zero, 0.5) == doctest::Approx(1.0));

  FbmPath other = p.b;
  other.dt *= 2.0;
  CHECK_THROWS_AS(holder_diff_seminorm(p.a, other, 0.4), std::invalid_argument);
  FbmPath shorter = p.b;
  shorter.values.conservativeResize(10);
  CHECK_THROWS_AS(holder_diff_seminorm(p.a, shorter, 0.4), std::invalid_argument);
}
