#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lcdf/channels.hpp"
#include "lcdf/priors.hpp"

namespace lcdf {

enum class Corruption { none, censored, quantized };

struct SpikedMatrixConfig {
  std::size_t n = 100;
  double lambda = 0.0;
  DensitySpec density;
  SpikeLaw spike = SpikeLaw::rademacher();
  Corruption corruption = Corruption::none;
  double eta = 0.0;  // censoring probability
  bool zero_diagonal = true;
};

struct MatrixSample {
  Eigen::MatrixXd y;
  // censoring pattern, symmetric; empty unless the config censors. Kept as an
  // explicit mask so the score transform can send erased entries to exact 0.
  std::vector<std::uint8_t> censored;
  std::size_t n = 0;

  bool is_censored(std::size_t i, std::size_t j) const {
    return !censored.empty() && censored[i * n + j] != 0;
  }
};

// Symmetric zero-diagonal draw: upper triangle carries spike plus iid noise,
// censoring erases a symmetric pattern, quantization takes entrywise signs
// (sgn(0) maps to +1). Noise, spike and mask derive from disjoint substreams
// of (seed, trial).
MatrixSample sample_spiked_matrix(const SpikedMatrixConfig& config, std::uint64_t seed,
                                  std::uint64_t trial = 0);

// Entrywise -p'/p with censored entries pinned to exact zero. For quantized
// samples the conjecture statistic is the raw sign matrix, not a transform.
Eigen::MatrixXd apply_score_transform(const MatrixSample& sample, const DensitySpec& density);

// Matrix the detection statistic looks at: score transform for plain and
// censored samples, the raw sign matrix for quantized ones.
Eigen::MatrixXd detection_matrix(const MatrixSample& sample, const SpikedMatrixConfig& config);

// Largest eigenvalue of a symmetric matrix to 1e-8 relative accuracy:
// Lanczos with full reorthogonalization, falling back to a dense
// eigendecomposition for n <= 1200. Deterministic for a fixed input.
double top_eigenvalue(const Eigen::MatrixXd& m);

enum class Verdict { planted, null_model };

// Threshold test: planted iff n^{-1/2} lambda_max of the detection matrix
// exceeds sqrt(F) + lambda F / 2 + 1/(2 lambda), with F the Fisher
// information of the corrupted channel.
Verdict eigenvalue_test(const MatrixSample& sample, double lambda,
                        const SpikedMatrixConfig& config);
double eigenvalue_test_threshold(double lambda, const SpikedMatrixConfig& config);

// Fisher information of the effective per-entry channel after corruption.
double effective_fisher(const SpikedMatrixConfig& config);

// Tr((M / sqrt(n))^D) for even D via a dense eigendecomposition.
double trace_power_statistic(const Eigen::MatrixXd& m, int degree);

struct PhaseScanPoint {
  double lambda = 0.0;
  double eta = 0.0;
  std::size_t n = 0;
  std::size_t trials = 0;
  double mean_lmax = 0.0;    // of n^{-1/2} lambda_max
  double stderr_lmax = 0.0;
  double bulk_edge_estimate = 0.0;  // 2 sqrt(effective Fisher information)
};

std::vector<PhaseScanPoint> phase_scan(const SpikedMatrixConfig& base,
                                       std::span<const double> lambda_grid, std::size_t trials,
                                       std::uint64_t seed, int threads = 1);

std::string phase_scan_csv(std::span<const PhaseScanPoint> points);

}  // namespace lcdf
