#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "lcdf/rng.hpp"

namespace lcdf {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool closed = false;  // Bernoulli channels admit the boundary signals
  bool contains(double x) const {
    return closed ? (x >= lo && x <= hi) : (x > lo && x < hi);
  }
};

// Formal null symbol produced by censoring. Carried as a quiet NaN so channel
// outputs stay plain doubles; the spectral module tracks censoring with an
// explicit mask instead and never relies on this encoding.
double censored_symbol();
bool is_censored_symbol(double y);

// Additive-noise density: symmetric, positive, C^4. The derivative and CDF
// may be analytic; otherwise a 5-point stencil (step 1e-5 * scale) and
// quadrature stand in, with correspondingly degraded Fisher accuracy.
struct DensitySpec {
  std::string name;
  std::function<double(double)> pdf;
  std::function<double(double)> dpdf;        // optional
  std::function<double(double)> cdf;         // optional
  std::function<double(RngStream&)> sampler; // optional; needed by simulators
  double tail_halfwidth = 40.0;  // |y| beyond this contributes < 1e-14 of mass
  double scale = 1.0;            // characteristic width, used for FD steps

  double density(double y) const { return pdf(y); }
  double derivative(double y) const;
  double cumulative(double y) const;  // falls back to symmetric quadrature
  double draw(RngStream& rng) const;  // throws when no sampler is attached
};

DensitySpec gaussian_density(double sigma);
// Laplace(rate 2c) convolved with a N(0, eps^2) kernel; closed erfc forms.
DensitySpec smoothed_laplace_density(double c, double eps);

// Natural exponential family generated by a base measure with cumulant
// generating function psi, parametrized by the mean displacement x.
struct CgfSpec {
  std::string name;
  std::function<double(double)> psi;
  std::function<double(double)> dpsi;
  std::function<double(double)> d2psi;
  // analytic inverse of psi' shifted by mu, i.e. theta(x); when absent,
  // theta_of_x falls back to bracketed bisection
  std::function<double(double)> theta_inverse;
  double mu = 0.0;
  double sigma2 = 1.0;
  Interval theta_domain;
};

CgfSpec gaussian_cgf(double sigma2);
CgfSpec bernoulli_cgf(double c);
CgfSpec poisson_cgf(double mean);

// theta(x): the unique root of psi'(theta) = mu + x, bracketed geometrically
// from zero and bisected to width 1e-14 with two Newton polish steps.
double theta_of_x(const CgfSpec& spec, double x);

namespace detail {
class ChannelImpl;
struct ChannelAccess;
}

// Immutable scalar channel: null measure P_0 plus the family P_x. Evaluators
// are pure; instances are safe to share across threads.
class Channel {
 public:
  const std::string& kind() const;
  const std::string& description() const;
  Interval signal_domain() const;

  // dP_x/dP_0 at the output y
  double likelihood_ratio(double x, double y) const;
  // R(x1, x2) = E_{P_0}(L_{x1} - 1)(L_{x2} - 1)
  double overlap(double x1, double x2) const;
  double fisher_information() const;
  bool degenerate() const;  // censoring with eta = 1 wipes out all information

  // (1/F) dL_x(y)/dx at x = 0, and its unnormalized variant (-p'/p for
  // additive channels)
  double local_fisher_score(double y) const;
  double score_unnormalized(double y) const;

  // true when overlap evaluation is closed-form (no quadrature)
  bool cheap_overlap() const;

  const DensitySpec* additive_density() const;  // null unless kind is additive

  explicit Channel(std::shared_ptr<const detail::ChannelImpl> impl);

 private:
  friend struct detail::ChannelAccess;
  std::shared_ptr<const detail::ChannelImpl> impl_;
};

Channel make_additive(DensitySpec spec);
Channel make_exponential_family(CgfSpec spec);
Channel make_bernoulli(double c);
Channel censor(const Channel& inner, double eta);
Channel quantize(const Channel& inner);

// Central second mixed difference of the overlap at the origin,
// [R(h,h) - R(h,-h) - R(-h,h) + R(-h,-h)] / (4 h^2), O(h^2) accurate.
double fisher_information_fd(const Channel& channel, double h);
// Same with one Richardson step (h and h/2), O(h^4).
double fisher_information_fd_rich(const Channel& channel, double h);
// Third mixed difference d^3 R / dx1^2 dx2 at the origin with one Richardson
// step; should vanish for channels obeying the symmetry assumption.
double third_mixed_derivative_fd(const Channel& channel, double h);

}  // namespace lcdf
