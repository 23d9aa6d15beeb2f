#include "lcdf/spectral.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "lcdf/detail/parallel.hpp"
#include "lcdf/kernels.hpp"
#include "lcdf/quadrature.hpp"
#include "lcdf/truncexp.hpp"

namespace lcdf {

namespace {

double sgn_plus(double v) { return v >= 0.0 ? 1.0 : -1.0; }  // sgn(0) -> +1

void check_config(const SpikedMatrixConfig& config) {
  if (config.n < 2) throw std::invalid_argument("spiked matrix: need n >= 2");
  if (config.lambda < 0.0) throw std::invalid_argument("spiked matrix: lambda must be >= 0");
  if (config.corruption == Corruption::censored && !(config.eta >= 0.0 && config.eta <= 1.0))
    throw std::domain_error("spiked matrix: eta must lie in [0, 1]");
  if (!config.density.pdf) throw std::invalid_argument("spiked matrix: density required");
}

}  // namespace

MatrixSample sample_spiked_matrix(const SpikedMatrixConfig& config, std::uint64_t seed,
                                  std::uint64_t trial) {
  check_config(config);
  const std::size_t n = config.n;
  // disjoint substreams: spike, noise, censor mask
  RngStream spike_rng(seed, 3 * trial);
  RngStream noise_rng(seed, 3 * trial + 1);
  RngStream mask_rng(seed, 3 * trial + 2);

  std::vector<double> x(n);
  for (auto& v : x) v = config.spike.sample(spike_rng);
  const double a = config.lambda / std::sqrt(static_cast<double>(n));

  MatrixSample sample;
  sample.n = n;
  sample.y = Eigen::MatrixXd::Zero(n, n);
  const bool censoring = config.corruption == Corruption::censored;
  if (censoring) sample.censored.assign(n * n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double value = a * x[i] * x[j] + config.density.draw(noise_rng);
      if (config.corruption == Corruption::quantized) value = sgn_plus(value);
      if (censoring && mask_rng.next_bernoulli(config.eta)) {
        sample.censored[i * n + j] = sample.censored[j * n + i] = 1;
        value = 0.0;
      }
      sample.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
      sample.y(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = value;
    }
  }
  if (!config.zero_diagonal)
    for (std::size_t i = 0; i < n; ++i)
      sample.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) =
          config.density.draw(noise_rng);
  return sample;
}

Eigen::MatrixXd apply_score_transform(const MatrixSample& sample, const DensitySpec& density) {
  const std::size_t n = sample.n;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double f = 0.0;
      if (!sample.is_censored(i, j)) {
        double y = sample.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        f = -density.derivative(y) / density.density(y);
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f;
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = f;
    }
  }
  return out;
}

Eigen::MatrixXd detection_matrix(const MatrixSample& sample, const SpikedMatrixConfig& config) {
  if (config.corruption == Corruption::quantized) return sample.y;
  return apply_score_transform(sample, config.density);
}

double top_eigenvalue(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("top_eigenvalue: matrix must be square");
  if (n > 4000) throw std::invalid_argument("top_eigenvalue: n > 4000 unsupported");
  if (n <= 64) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().maxCoeff();
  }

  // Lanczos with full reorthogonalization; deterministic internal start
  const int k_max = std::min<Eigen::Index>(n, 300);
  Eigen::MatrixXd basis(n, k_max);
  Eigen::VectorXd alpha(k_max), beta(k_max);
  RngStream rng(0x1A2C705EEDULL, 0);  // fixed start vector keeps runs bit-reproducible
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.next_gaussian();
  v.normalize();
  basis.col(0) = v;

  double theta_prev = 0.0;
  Eigen::VectorXd w;
  for (int k = 0; k < k_max; ++k) {
    w = m * basis.col(k);
    alpha(k) = basis.col(k).dot(w);
    w -= alpha(k) * basis.col(k);
    if (k > 0) w -= beta(k - 1) * basis.col(k - 1);
    // full reorthogonalization, twice for safety
    for (int pass = 0; pass < 2; ++pass)
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    beta(k) = w.norm();

    const bool basis_exhausted = beta(k) < 1e-13 * std::fabs(alpha.head(k + 1).cwiseAbs().maxCoeff() + 1e-300);
    const bool checkpoint = basis_exhausted || k == k_max - 1 || (k >= 20 && k % 10 == 0);
    if (checkpoint) {
      Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(k + 1, k + 1);
      for (int i = 0; i <= k; ++i) {
        tri(i, i) = alpha(i);
        if (i > 0) tri(i, i - 1) = tri(i - 1, i) = beta(i - 1);
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(tri);
      int top;
      solver.eigenvalues().maxCoeff(&top);
      double theta = solver.eigenvalues()(top);
      double residual = std::fabs(beta(k) * solver.eigenvectors()(k, top));
      double tol = 1e-9 * std::max(std::fabs(theta), 1e-12);
      if (residual <= tol || basis_exhausted) return theta;
      if (k >= 40 && std::fabs(theta - theta_prev) <= 0.1 * tol) return theta;
      theta_prev = theta;
    }
    if (basis_exhausted) break;
    basis.col(k + 1) = w / beta(k);
  }

  if (n <= 1200) {  // dense fallback
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().maxCoeff();
  }
  throw NumericalError("top_eigenvalue: Lanczos did not converge", 0.0);
}

double effective_fisher(const SpikedMatrixConfig& config) {
  const DensitySpec& density = config.density;
  double p0 = density.density(0.0);
  switch (config.corruption) {
    case Corruption::quantized:
      return 4.0 * p0 * p0;
    case Corruption::censored:
    case Corruption::none: {
      double base = integrate(
          [&](double y) {
            double p = density.density(y);
            double dp = density.derivative(y);
            return dp * dp / p;
          },
          -density.tail_halfwidth, density.tail_halfwidth, 1e-12, 1e-10);
      return config.corruption == Corruption::censored ? (1.0 - config.eta) * base : base;
    }
  }
  return 0.0;
}

double eigenvalue_test_threshold(double lambda, const SpikedMatrixConfig& config) {
  if (!(lambda > 0.0)) throw std::domain_error("eigenvalue_test: lambda must be positive");
  double fisher = effective_fisher(config);
  return std::sqrt(fisher) + 0.5 * lambda * fisher + 0.5 / lambda;
}

Verdict eigenvalue_test(const MatrixSample& sample, double lambda,
                        const SpikedMatrixConfig& config) {
  double stat = top_eigenvalue(detection_matrix(sample, config)) /
                std::sqrt(static_cast<double>(sample.n));
  return stat >= eigenvalue_test_threshold(lambda, config) ? Verdict::planted
                                                           : Verdict::null_model;
}

double trace_power_statistic(const Eigen::MatrixXd& m, int degree) {
  if (degree < 2 || degree % 2 != 0)
    throw std::domain_error("trace_power_statistic: degree must be even and >= 2");
  if (degree > m.rows())
    throw std::domain_error("trace_power_statistic: degree must not exceed n");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  const double root_n = std::sqrt(static_cast<double>(m.rows()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    total += std::pow(solver.eigenvalues()(i) / root_n, degree);
  return total;
}

std::vector<PhaseScanPoint> phase_scan(const SpikedMatrixConfig& base,
                                       std::span<const double> lambda_grid, std::size_t trials,
                                       std::uint64_t seed, int threads) {
  if (lambda_grid.empty()) throw std::invalid_argument("phase_scan: empty grid");
  if (trials == 0) throw std::invalid_argument("phase_scan: need trials >= 1");
  std::vector<PhaseScanPoint> points;
  const double bulk = 2.0 * std::sqrt(effective_fisher(base));
  for (std::size_t g = 0; g < lambda_grid.size(); ++g) {
    SpikedMatrixConfig config = base;
    config.lambda = lambda_grid[g];
    auto values = detail::run_indexed(trials, threads, [&, g](std::size_t t) {
      MatrixSample sample = sample_spiked_matrix(config, seed, g * trials + t);
      return top_eigenvalue(detection_matrix(sample, config)) /
             std::sqrt(static_cast<double>(config.n));
    });
    double mean = kernels::sum_comp(values.data(), values.size()) / values.size();
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var = values.size() > 1 ? var / (static_cast<double>(values.size()) * (values.size() - 1)) : 0.0;
    PhaseScanPoint point;
    point.lambda = config.lambda;
    point.eta = config.corruption == Corruption::censored ? config.eta : 0.0;
    point.n = config.n;
    point.trials = trials;
    point.mean_lmax = mean;
    point.stderr_lmax = std::sqrt(var);
    point.bulk_edge_estimate = bulk;
    points.push_back(point);
  }
  return points;
}

namespace {
std::string shortest(double v) {
  char buffer[32];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, end);
}
}  // namespace

std::string phase_scan_csv(std::span<const PhaseScanPoint> points) {
  std::string out = "lambda,eta,n,trials,mean_lmax,stderr_lmax,bulk_edge_estimate\n";
  for (const PhaseScanPoint& p : points) {
    out += shortest(p.lambda) + ',' + shortest(p.eta) + ',' + std::to_string(p.n) + ',' +
           std::to_string(p.trials) + ',' + shortest(p.mean_lmax) + ',' +
           shortest(p.stderr_lmax) + ',' + shortest(p.bulk_edge_estimate) + '\n';
  }
  return out;
}

}  // namespace lcdf
