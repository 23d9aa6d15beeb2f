#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcdf/rng.hpp"

namespace lcdf {

// Scalar spike law with mean 0 and variance 1, enforced analytically.
struct SpikeLaw {
  enum class Kind { rademacher, sparse_rademacher, uniform_pm, two_point };

  Kind kind = Kind::rademacher;
  double sparsity = 1.0;  // sparse_rademacher: P(nonzero)
  double p = 0.5;         // two_point: P(positive atom)

  static SpikeLaw rademacher() { return {}; }
  static SpikeLaw sparse_rademacher(double s);
  // continuous uniform on [-sqrt(3), sqrt(3)]
  static SpikeLaw uniform_pm() { return {Kind::uniform_pm, 1.0, 0.5}; }
  // atoms sqrt((1-p)/p) w.p. p and -sqrt(p/(1-p)) w.p. 1-p
  static SpikeLaw two_point(double p);

  double sample(RngStream& rng) const;
  double sup_bound() const;
  bool discrete() const { return kind != Kind::uniform_pm; }
  std::string name() const;
};

namespace detail {
class PriorImpl;
struct PriorAccess;
}

// Immutable signal-vector prior. Sampling is deterministic given the caller's
// stream; the prior holds no generator state of its own.
class Prior {
 public:
  std::size_t dim() const;
  void sample_into(RngStream& rng, std::span<double> out) const;
  std::vector<double> sample(RngStream& rng) const;

  // Analytic assumption constants when the structure supplies them:
  // sup-norm bound A, and the N-independent constants B_k for k-norms scaled
  // by N^{1/4 - 1/k}. iid priors of O(1) entries have no valid B_k.
  std::optional<double> declared_sup_bound() const;
  std::optional<double> declared_norm_bound(int k) const;

  const std::string& structure() const;

  explicit Prior(std::shared_ptr<const detail::PriorImpl> impl);

 private:
  friend struct detail::PriorAccess;
  std::shared_ptr<const detail::PriorImpl> impl_;
};

Prior iid_prior(SpikeLaw pi, std::size_t n, double scale = 1.0);
// Law of the strict upper triangle of (lambda/sqrt(n)) x x^T, x ~ pi^n,
// coordinates in lexicographic (i, j) order, i < j.
Prior spiked_matrix_prior(std::size_t n, double lambda, SpikeLaw pi);
// Law of lambda n^{-q/4} prod_j x_{i_j} over lexicographic q-tuples
// i_1 < ... < i_q.
Prior spiked_tensor_prior(std::size_t n, int q, double lambda, SpikeLaw pi);
// Each coordinate repeated k times at scale 1/sqrt(k).
Prior dilute(const Prior& inner, std::size_t k);
// Conditioning wrapper: samples violating the declared bounds are zeroed,
// mirroring the truncation reduction for priors that only satisfy the
// assumptions with high probability.
Prior truncate_to_bounds(const Prior& inner, double sup_bound,
                         std::span<const double> norm_bounds_2_to_12 = {});

enum class AssumptionVerdict { pass, fail, not_declared };

struct AssumptionReport {
  std::size_t dim = 0;
  std::size_t samples = 0;
  double empirical_sup = 0.0;                 // max ||x||_inf
  double empirical_norm_stat[6] = {0};        // max ||x||_k N^{1/4-1/k}, k = 2,4,...,12
  AssumptionVerdict sup_verdict = AssumptionVerdict::not_declared;
  AssumptionVerdict low_norm_verdict = AssumptionVerdict::not_declared;   // k in {2,4,6}
  AssumptionVerdict high_norm_verdict = AssumptionVerdict::not_declared;  // k in {8,10,12}
  bool all_pass() const;
};

AssumptionReport check_assumptions(const Prior& prior, std::size_t samples, std::uint64_t seed);

}  // namespace lcdf
