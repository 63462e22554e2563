#include "fracsde/noise.hpp"

#include "fracsde/io.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <string>

namespace fracsde {

namespace {

using Complex = std::complex<double>;

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

// x^q - (x - 1)^q for x >= 1 without cancellation.
double unit_power_difference(double x, double q) {
  return -std::pow(x, q) * std::expm1(q * std::log1p(-1.0 / x));
}

void require_coupling_hurst(double hurst) {
  if (!(hurst > 0.5 && hurst < 1.0)) {
    throw std::domain_error("coupled Hurst index must lie in (1/2, 1), got " +
                            std::to_string(hurst));
  }
}

}  // namespace

void require_hurst(double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0)) {
    throw std::domain_error("Hurst index must lie in (0, 1), got " + std::to_string(hurst));
  }
}

Eigen::VectorXd FbmPath::times() const {
  return Eigen::VectorXd::NullaryExpr(values.size(), [this](Eigen::Index i) { return dt * double(i); });
}

Eigen::VectorXd FbmPath::increments() const {
  const Eigen::Index m = steps();
  return values.tail(m) - values.head(m);
}

double fgn_autocovariance(double hurst, double dt, Eigen::Index lag) {
  const double k = static_cast<double>(std::abs(lag));
  const double two_h = 2.0 * hurst;
  return 0.5 * std::pow(dt, two_h) *
         (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) + std::pow(std::abs(k - 1.0), two_h));
}

Eigen::MatrixXd fbm_covariance_matrix(double hurst, Eigen::Index m, double dt) {
  Eigen::MatrixXd cov(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      cov(i, j) = cov(j, i) = fbm_covariance(hurst, dt * double(i + 1), dt * double(j + 1));
    }
  }
  return cov;
}

DaviesHarteSampler::DaviesHarteSampler(double hurst, Eigen::Index m, double dt)
    : hurst_(hurst), m_(m), dt_(dt) {
  require_hurst(hurst);
  if (m < 1) throw std::invalid_argument("Davies-Harte needs m >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("Davies-Harte needs dt > 0");

  const Eigen::Index n = 2 * m;
  std::vector<Complex> row(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k <= m; ++k) row[k] = fgn_autocovariance(hurst, dt, k);
  for (Eigen::Index k = 1; k < m; ++k) row[n - k] = row[k];

  Eigen::FFT<double> fft;
  std::vector<Complex> spectrum;
  fft.fwd(spectrum, row);

  eigenvalues_.resize(n);
  double scale = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) scale = std::max(scale, std::abs(spectrum[k].real()));
  // Zero only round-off; a genuinely negative eigenvalue means the
  // embedding is not a valid covariance.
  const double roundoff = 1e-12 * scale;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lambda = spectrum[k].real();
    if (lambda < -roundoff) {
      throw std::runtime_error(
          "Davies-Harte circulant embedding has a negative eigenvalue (" + std::to_string(lambda) +
          " at index " + std::to_string(k) +
          "); increase m or use the Cholesky sampler");
    }
    eigenvalues_[k] = std::max(lambda, 0.0);
  }
}

Eigen::VectorXd DaviesHarteSampler::sample_increments(Rng& rng) const {
  const Eigen::Index n = 2 * m_;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Complex> weighted(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    weighted[k] = std::sqrt(eigenvalues_[k] / double(n)) * Complex(re, im);
  }
  Eigen::FFT<double> fft;
  std::vector<Complex> mixed;
  fft.fwd(mixed, weighted);
  Eigen::VectorXd increments(m_);
  for (Eigen::Index i = 0; i < m_; ++i) increments[i] = mixed[i].real();
  return increments;
}

FbmPath DaviesHarteSampler::sample(Rng& rng) const {
  FbmPath path{hurst_, dt_, Eigen::VectorXd::Zero(m_ + 1)};
  const Eigen::VectorXd dB = sample_increments(rng);
  for (Eigen::Index i = 0; i < m_; ++i) path.values[i + 1] = path.values[i] + dB[i];
  return path;
}

FbmPath fbm_davies_harte(double hurst, Eigen::Index m, double dt, std::uint64_t seed) {
  Rng rng(seed);
  return DaviesHarteSampler(hurst, m, dt).sample(rng);
}

CholeskySampler::CholeskySampler(double hurst, Eigen::Index m, double dt)
    : hurst_(hurst), m_(m), dt_(dt) {
  require_hurst(hurst);
  if (m < 1) throw std::invalid_argument("Cholesky sampler needs m >= 1");
  if (m > kMaxSteps) {
    throw std::invalid_argument("Cholesky sampler limited to m <= " + std::to_string(kMaxSteps));
  }
  if (!(dt > 0.0)) throw std::invalid_argument("Cholesky sampler needs dt > 0");
  Eigen::LLT<Eigen::MatrixXd> llt(fbm_covariance_matrix(hurst, m, dt));
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("fBm covariance matrix is numerically not positive definite");
  }
  lower_ = llt.matrixL();
}

FbmPath CholeskySampler::sample(Rng& rng) const {
  FbmPath path{hurst_, dt_, Eigen::VectorXd::Zero(m_ + 1)};
  path.values.tail(m_).noalias() = lower_.triangularView<Eigen::Lower>() * standard_normal(rng, m_);
  return path;
}

FbmPath fbm_cholesky(double hurst, Eigen::Index m, double dt, std::uint64_t seed) {
  Rng rng(seed);
  return CholeskySampler(hurst, m, dt).sample(rng);
}

double mvn_constant(double hurst) {
  require_hurst(hurst);
  return std::sqrt(2.0 * hurst * std::tgamma(1.5 - hurst) /
                   (std::tgamma(hurst + 0.5) * std::tgamma(2.0 - 2.0 * hurst)));
}

double cross_factor(double h1, double h2) {
  require_coupling_hurst(h1);
  require_coupling_hurst(h2);
  return -std::tgamma(-h1 - h2) * mvn_constant(h1) * mvn_constant(h2) *
         (std::tgamma(0.5 + h1) / std::tgamma(0.5 - h2) +
          std::tgamma(0.5 + h2) / std::tgamma(0.5 - h1));
}

double cross_increment_variance(double h1, double h2, double v) {
  if (!(v >= 0.0)) throw std::domain_error("lag must be non-negative");
  const double f = cross_factor(h1, h2);
  if (h1 == h2) return 0.0;
  return std::pow(v, 2.0 * h1) + std::pow(v, 2.0 * h2) - 2.0 * std::pow(v, h1 + h2) * f;
}

void MvnConfig::validate() const {
  if (!(horizon_factor >= kMinHorizonFactor)) {
    throw std::invalid_argument("MvN truncation horizon factor " + std::to_string(horizon_factor) +
                                " below floor " + std::to_string(kMinHorizonFactor));
  }
  if (refinement < kMinRefinement) {
    throw std::invalid_argument("MvN refinement " + std::to_string(refinement) + " below floor " +
                                std::to_string(kMinRefinement));
  }
  if (!(past_grading >= 1.0)) throw std::invalid_argument("MvN past grading must be >= 1");
}

MvnNoise::MvnNoise(Eigen::Index m, double dt, std::uint64_t seed, MvnConfig config)
    : m_(m), dt_(dt), seed_(seed), config_(config) {
  config_.validate();
  if (m < 1) throw std::invalid_argument("MvN noise needs m >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("MvN noise needs dt > 0");

  Rng rng(seed);
  const Eigen::Index cells = m * config_.refinement;  // per unit of horizon T = m dt
  const double h = dt / config_.refinement;
  const double horizon = m * dt;

  fft_size_ = next_pow2(4 * cells);
  std::vector<Complex> uniform(static_cast<std::size_t>(fft_size_), Complex(0.0, 0.0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double cell_sd = std::sqrt(h);
  for (Eigen::Index u = 0; u < 2 * cells; ++u) uniform[u] = cell_sd * gauss(rng);
  Eigen::FFT<double> fft;
  fft.fwd(uniform_spectrum_, uniform);

  // Far past: widths grow geometrically from h until the horizon.
  const double limit = config_.horizon_factor * horizon;
  std::vector<double> edges, widths;
  double edge = horizon;
  double width = h;
  while (edge < limit * (1.0 - 1e-12)) {
    width *= config_.past_grading;
    const double w = std::min(width, limit - edge);
    edges.push_back(edge);
    widths.push_back(w);
    edge += w;
  }
  far_near_edge_ = from_vector(edges);
  far_width_ = from_vector(widths);
  far_noise_.resize(far_width_.size());
  for (Eigen::Index i = 0; i < far_noise_.size(); ++i) {
    far_noise_[i] = std::sqrt(far_width_[i]) * gauss(rng);
  }
}

FbmPath MvnNoise::path(double hurst) const {
  require_hurst(hurst);
  const double p = hurst - 0.5;
  const double q = hurst + 0.5;
  const Eigen::Index r = config_.refinement;
  const Eigen::Index cells = m_ * r;
  const double h = dt_ / double(r);

  // Cell-averaged kernel (t - s)^p at lag l cells: h^p (l^q - (l-1)^q) / q.
  std::vector<Complex> kernel(static_cast<std::size_t>(fft_size_), Complex(0.0, 0.0));
  const double hp = std::pow(h, p);
  for (Eigen::Index l = 1; l <= 2 * cells; ++l) {
    kernel[l] = hp * unit_power_difference(double(l), q) / q;
  }
  Eigen::FFT<double> fft;
  std::vector<Complex> spectrum;
  fft.fwd(spectrum, kernel);
  for (Eigen::Index i = 0; i < fft_size_; ++i) spectrum[i] *= uniform_spectrum_[i];
  std::vector<Complex> conv;
  fft.inv(conv, spectrum);

  FbmPath out{hurst, dt_, Eigen::VectorXd::Zero(m_ + 1)};
  const double c_h = mvn_constant(hurst);
  const double origin = conv[cells].real();
  const Eigen::Index far = far_noise_.size();
  Eigen::VectorXd anchored(far), weight(far);
  for (Eigen::Index i = 0; i < far; ++i) {
    const double d = far_near_edge_[i];
    const double w = far_width_[i];
    anchored[i] = std::pow(d + w, q) - std::pow(d, q);
    weight[i] = far_noise_[i] / (q * w);
  }
  for (Eigen::Index j = 1; j <= m_; ++j) {
    const double t = dt_ * double(j);
    double value = conv[cells + j * r].real() - origin;
    for (Eigen::Index i = 0; i < far; ++i) {
      const double d = far_near_edge_[i] + t;
      value += (std::pow(d + far_width_[i], q) - std::pow(d, q) - anchored[i]) * weight[i];
    }
    out.values[j] = c_h * value;
  }
  return out;
}

CoupledPair mvn_coupled_pair(double h1, double h2, Eigen::Index m, double dt,
                             std::uint64_t seed, const MvnConfig& config) {
  require_coupling_hurst(h1);
  require_coupling_hurst(h2);
  const MvnNoise noise(m, dt, seed, config);
  return {noise.path(h1), noise.path(h2), seed};
}

void write_path_csv(const std::filesystem::path& path, const FbmPath& fbm) {
  CsvTable table{{"t", "value"}, {}};
  const Eigen::VectorXd t = fbm.times();
  for (Eigen::Index i = 0; i < fbm.values.size(); ++i) table.rows.push_back({t[i], fbm.values[i]});
  write_csv(path, table);
}

}  // namespace fracsde
