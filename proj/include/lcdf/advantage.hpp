#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "lcdf/channels.hpp"
#include "lcdf/priors.hpp"

namespace lcdf {

// Prefix sum of elementary symmetric polynomials, sum_{d=0}^{degree} e_d(r).
// degree > r.size() clamps exactly (e_d vanishes beyond the length).
double esp_prefix_sum(std::span<const double> r, int degree);

struct AdvantageEstimate {
  std::string estimator;  // subset_formula | exp_bound | univ
  int degree = 0;
  std::size_t trials = 0;
  double mean = 0.0;
  double std_error = 0.0;
  // mean with the top 0.1% of trials removed; flags estimator instability
  // when it disagrees with the full mean by more than 20%
  double trimmed_mean = 0.0;
  bool heavy_tail_flagged = false;
};

// Monte-Carlo estimate of the squared coordinate advantage via the exact
// subset-product formula: averages sum_{|T| <= D} prod_{i in T} R(x1_i, x2_i)
// over independent signal pairs. Trial t draws its pair from streams
// (2t, 2t+1) of the master seed, so different estimators with the same seed
// see identical pairs.
AdvantageEstimate cadv_mc(const Prior& prior, const Channel& channel, int degree,
                          std::size_t trials, std::uint64_t seed, int threads = 1);

// Truncated-exponential upper bound: averages exp^{<=D}(sum_i R_i) over the
// same pair stream. Requires even degree.
AdvantageEstimate cadv_exp_bound_mc(const Prior& prior, const Channel& channel, int degree,
                                    std::size_t trials, std::uint64_t seed, int threads = 1);

// Gaussian-surrogate functional: averages exp^{<=D}(<x1, x2> / sigma2).
// Requires even degree.
AdvantageEstimate univ_mc(const Prior& prior, double sigma2, int degree, std::size_t trials,
                          std::uint64_t seed, int threads = 1);

struct UniversalityReport {
  AdvantageEstimate cadv;       // subset formula for the channel
  AdvantageEstimate univ_d;     // surrogate at degree D, sigma2 = 1/F
  AdvantageEstimate univ_dm2;   // surrogate at degree D - 2
  double fisher_information = 0.0;
  double ratio = 0.0;           // cadv.mean / univ_d.mean
  bool assumptions_pass = true;
  AssumptionReport assumption_report;
};

// Paired-stream comparison of the channel advantage against the Gaussian
// surrogate at matched Fisher information. The ratio is the readable signal;
// the surrogate at D-2 supports lower-bound style combinations.
UniversalityReport universality_report(const Prior& prior, const Channel& channel, int degree,
                                       std::size_t trials, std::uint64_t seed, int threads = 1);

}  // namespace lcdf
