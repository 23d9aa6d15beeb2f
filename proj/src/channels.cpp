#include "lcdf/channels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lcdf/quadrature.hpp"

namespace lcdf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// scaled complementary error function exp(u^2) erfc(u) for u >= 0
double erfcx_pos(double u) {
  if (u < 25.0) return std::exp(u * u) * std::erfc(u);
  // asymptotic series 1/(u sqrt(pi)) * sum (-1)^k (2k-1)!!/(2u^2)^k
  double inv2u2 = 1.0 / (2.0 * u * u);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 10; ++k) {
    term *= -(2.0 * k - 1.0) * inv2u2;
    sum += term;
  }
  return sum / (u * std::sqrt(M_PI));
}

}  // namespace

double censored_symbol() { return std::numeric_limits<double>::quiet_NaN(); }
bool is_censored_symbol(double y) { return std::isnan(y); }

double DensitySpec::derivative(double y) const {
  if (dpdf) return dpdf(y);
  const double h = 1e-5 * scale;
  return (-pdf(y + 2 * h) + 8 * pdf(y + h) - 8 * pdf(y - h) + pdf(y - 2 * h)) / (12 * h);
}

double DensitySpec::draw(RngStream& rng) const {
  if (!sampler)
    throw std::invalid_argument("DensitySpec::draw: no sampler attached to " + name);
  return sampler(rng);
}

double DensitySpec::cumulative(double y) const {
  if (cdf) return cdf(y);
  if (y <= -tail_halfwidth) return 0.0;
  if (y >= tail_halfwidth) return 1.0;
  double lo = std::min(0.0, y), hi = std::max(0.0, y);
  double half = integrate(pdf, lo, hi, 1e-13, 1e-12);
  return y >= 0.0 ? 0.5 + half : 0.5 - half;
}

DensitySpec gaussian_density(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_density: sigma must be positive");
  DensitySpec spec;
  spec.name = "gaussian(sigma=" + std::to_string(sigma) + ")";
  const double inv_norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
  const double inv_s2 = 1.0 / (sigma * sigma);
  spec.pdf = [=](double y) { return inv_norm * std::exp(-0.5 * y * y * inv_s2); };
  spec.dpdf = [=](double y) { return -y * inv_s2 * inv_norm * std::exp(-0.5 * y * y * inv_s2); };
  spec.cdf = [=](double y) { return 0.5 * std::erfc(-y / (sigma * std::sqrt(2.0))); };
  spec.sampler = [=](RngStream& rng) { return sigma * rng.next_gaussian(); };
  spec.tail_halfwidth = 14.0 * sigma;
  spec.scale = sigma;
  return spec;
}

DensitySpec smoothed_laplace_density(double c, double eps) {
  if (!(c > 0.0) || !(eps > 0.0))
    throw std::invalid_argument("smoothed_laplace_density: c and eps must be positive");
  DensitySpec spec;
  spec.name = "smoothed_laplace(c=" + std::to_string(c) + ",eps=" + std::to_string(eps) + ")";
  const double s2e = std::sqrt(2.0) * eps;
  // For y >= 0 both bracket terms stay bounded:
  //   p(y) = (c/2) [ exp(2c^2 eps^2 - 2cy) erfc((2c eps^2 - y)/(sqrt2 eps))
  //                 + exp(-y^2/(2 eps^2)) erfcx((2c eps^2 + y)/(sqrt2 eps)) ]
  auto half_terms = [=](double ay, double* t_minus, double* t_plus) {
    double um = (2.0 * c * eps * eps - ay) / s2e;
    double up = (2.0 * c * eps * eps + ay) / s2e;
    *t_minus = std::exp(2.0 * c * c * eps * eps - 2.0 * c * ay) *
               (um >= 0.0 ? std::exp(-um * um) * erfcx_pos(um) : std::erfc(um));
    *t_plus = std::exp(-0.5 * ay * ay / (eps * eps)) * erfcx_pos(up);
  };
  spec.pdf = [=](double y) {
    double ay = std::fabs(y), tm, tp;
    half_terms(ay, &tm, &tp);
    return 0.5 * c * (tm + tp);
  };
  spec.dpdf = [=](double y) {
    double ay = std::fabs(y), tm, tp;
    half_terms(ay, &tm, &tp);
    double mag = c * c * (tp - tm);  // derivative at |y|; Gaussian kernels cancel
    return y >= 0.0 ? mag : -mag;
  };
  spec.sampler = [=](RngStream& rng) {
    // Laplace(rate 2c) by inverse CDF, plus the gaussian smoothing kernel
    double u = rng.next_double_nonzero();
    if (u == 1.0) u = 1.0 - 1e-17;
    double laplace = u <= 0.5 ? std::log(2.0 * u) / (2.0 * c)
                              : -std::log(2.0 * (1.0 - u)) / (2.0 * c);
    return laplace + eps * rng.next_gaussian();
  };
  spec.tail_halfwidth = 22.0 / c + 12.0 * eps + 4.0;
  spec.scale = std::min(1.0 / (2.0 * c), eps);
  return spec;
}

CgfSpec gaussian_cgf(double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("gaussian_cgf: sigma2 must be positive");
  CgfSpec spec;
  spec.name = "gaussian_cgf(sigma2=" + std::to_string(sigma2) + ")";
  spec.psi = [=](double t) { return 0.5 * sigma2 * t * t; };
  spec.dpsi = [=](double t) { return sigma2 * t; };
  spec.d2psi = [=](double) { return sigma2; };
  spec.theta_inverse = [=](double x) { return x / sigma2; };
  spec.mu = 0.0;
  spec.sigma2 = sigma2;
  return spec;
}

CgfSpec bernoulli_cgf(double c) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("bernoulli_cgf: c must be in (0,1)");
  CgfSpec spec;
  spec.name = "bernoulli_cgf(c=" + std::to_string(c) + ")";
  spec.psi = [=](double t) {
    // log(1 - c + c e^t), stable on both sides
    return t > 0.0 ? t + std::log(c + (1.0 - c) * std::exp(-t))
                   : std::log1p(c * std::expm1(t));
  };
  spec.dpsi = [=](double t) { return c / (c + (1.0 - c) * std::exp(-t)); };
  spec.d2psi = [=](double t) {
    double m = c / (c + (1.0 - c) * std::exp(-t));
    return m * (1.0 - m);
  };
  spec.theta_inverse = [=](double x) {
    return std::log(((c + x) * (1.0 - c)) / ((1.0 - c - x) * c));
  };
  spec.mu = c;
  spec.sigma2 = c * (1.0 - c);
  return spec;
}

CgfSpec poisson_cgf(double mean) {
  if (!(mean > 0.0)) throw std::invalid_argument("poisson_cgf: mean must be positive");
  CgfSpec spec;
  spec.name = "poisson_cgf(mean=" + std::to_string(mean) + ")";
  spec.psi = [=](double t) { return mean * std::expm1(t); };
  spec.dpsi = [=](double t) { return mean * std::exp(t); };
  spec.d2psi = [=](double t) { return mean * std::exp(t); };
  spec.theta_inverse = [=](double x) { return std::log1p(x / mean); };
  spec.mu = mean;
  spec.sigma2 = mean;
  return spec;
}

double theta_of_x(const CgfSpec& spec, double x) {
  const double target = spec.mu + x;
  if (x == 0.0) return 0.0;
  if (spec.theta_inverse) return spec.theta_inverse(x);
  auto residual = [&](double t) { return spec.dpsi(t) - target; };
  // geometric bracket expansion from zero; psi' is strictly increasing
  double dir = x > 0.0 ? 1.0 : -1.0;
  double step = 0.5;
  double lo = 0.0, hi = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    double cand = dir * step;
    cand = std::clamp(cand, spec.theta_domain.lo + 1e-12, spec.theta_domain.hi - 1e-12);
    if (residual(cand) * dir >= 0.0) {
      hi = cand;
      break;
    }
    lo = cand;
    step *= 2.0;
    if (iter == 199 || (cand == spec.theta_domain.lo + 1e-12 && dir < 0) ||
        (cand == spec.theta_domain.hi - 1e-12 && dir > 0))
      throw std::domain_error("theta_of_x: bracketing failed on [" + std::to_string(lo) + ", " +
                              std::to_string(cand) + "] for x=" + std::to_string(x));
  }
  if (dir < 0.0) std::swap(lo, hi);
  // bisect to width 1e-14, then polish with Newton
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(lo)); ++iter) {
    double mid = 0.5 * (lo + hi);
    if (residual(mid) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double theta = 0.5 * (lo + hi);
  for (int polish = 0; polish < 2; ++polish) {
    double d2 = spec.d2psi ? spec.d2psi(theta) : 0.0;
    if (d2 > 0.0) theta -= residual(theta) / d2;
  }
  if (std::fabs(residual(theta)) > 1e-12 * std::max(1.0, std::fabs(target)))
    throw std::domain_error("theta_of_x: could not meet residual tolerance for x=" +
                            std::to_string(x));
  return theta;
}

namespace detail {

class ChannelImpl {
 public:
  virtual ~ChannelImpl() = default;
  virtual const std::string& kind() const = 0;
  virtual const std::string& description() const = 0;
  virtual Interval signal_domain() const = 0;
  virtual double likelihood_ratio(double x, double y) const = 0;
  virtual double overlap(double x1, double x2) const = 0;
  virtual double fisher() const = 0;
  virtual bool degenerate() const { return false; }
  virtual double score_unnormalized(double y) const = 0;  // dL_x(y)/dx at x = 0
  virtual bool cheap_overlap() const = 0;
  virtual const DensitySpec* additive_density() const { return nullptr; }

 protected:
  void check_signal(double x) const {
    if (!signal_domain().contains(x) || !std::isfinite(x))
      throw std::domain_error(kind() + ": signal " + std::to_string(x) +
                              " outside the channel domain");
  }
};

namespace {

const std::string kAdditive = "additive";
const std::string kExpFam = "exponential_family";
const std::string kBernoulli = "bernoulli";
const std::string kCensored = "censored";
const std::string kQuantized = "quantized";

class AdditiveChannel final : public ChannelImpl {
 public:
  explicit AdditiveChannel(DensitySpec spec) : spec_(std::move(spec)) {
    validate();
    fisher_ = integrate(
        [&](double y) {
          double p = spec_.density(y);
          double dp = spec_.derivative(y);
          return dp * dp / p;
        },
        -spec_.tail_halfwidth, spec_.tail_halfwidth, 1e-12, 1e-10);
    if (!(fisher_ > 0.0))
      throw std::invalid_argument("make_additive: Fisher information must be positive");
    description_ = kAdditive + "(" + spec_.name + ")";
  }

  const std::string& kind() const override { return kAdditive; }
  const std::string& description() const override { return description_; }
  Interval signal_domain() const override { return {}; }

  double likelihood_ratio(double x, double y) const override {
    check_signal(x);
    return spec_.density(y - x) / spec_.density(y);
  }

  double overlap(double x1, double x2) const override {
    check_signal(x1);
    check_signal(x2);
    if (x1 == 0.0 || x2 == 0.0) return 0.0;
    double lo = std::min({0.0, x1, x2, x1 + x2}) - spec_.tail_halfwidth;
    double hi = std::max({0.0, x1, x2, x1 + x2}) + spec_.tail_halfwidth;
    double raw = integrate(
        [&](double y) {
          return spec_.density(y - x1) * spec_.density(y - x2) / spec_.density(y);
        },
        lo, hi, 1e-12, 5e-11);
    return raw - 1.0;
  }

  double fisher() const override { return fisher_; }

  double score_unnormalized(double y) const override {
    return -spec_.derivative(y) / spec_.density(y);
  }

  bool cheap_overlap() const override { return false; }
  const DensitySpec* additive_density() const override { return &spec_; }

 private:
  void validate() const {
    const double w = spec_.tail_halfwidth;
    double mass = integrate(spec_.pdf, -w, w, 1e-12, 1e-10);
    if (std::fabs(mass - 1.0) > 1e-8)
      throw std::invalid_argument("make_additive: density mass " + std::to_string(mass) +
                                  " is not 1 within 1e-8 on [-" + std::to_string(w) + ", " +
                                  std::to_string(w) + "]");
    double p0 = spec_.pdf(0.0);
    for (int i = 0; i <= 64; ++i) {
      double y = w * i / 64.0;
      double a = spec_.pdf(y), b = spec_.pdf(-y);
      if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("make_additive: density must be strictly positive");
      if (std::fabs(a - b) > 1e-12 * std::max(p0, a))
        throw std::invalid_argument("make_additive: density must be symmetric");
    }
  }

  DensitySpec spec_;
  double fisher_;
  std::string description_;
};

class ExpFamilyChannel final : public ChannelImpl {
 public:
  explicit ExpFamilyChannel(CgfSpec spec) : spec_(std::move(spec)) {
    validate();
    // reachable means under bounded natural parameters give the signal domain
    double t_lo = std::max(spec_.theta_domain.lo, -40.0);
    double t_hi = std::min(spec_.theta_domain.hi, 40.0);
    domain_ = {spec_.dpsi(t_lo) - spec_.mu, spec_.dpsi(t_hi) - spec_.mu};
    description_ = kExpFam + "(" + spec_.name + ")";
  }

  const std::string& kind() const override { return kExpFam; }
  const std::string& description() const override { return description_; }
  Interval signal_domain() const override { return domain_; }

  double likelihood_ratio(double x, double y) const override {
    check_signal(x);
    double theta = theta_of_x(spec_, x);
    return std::exp(theta * y - spec_.psi(theta));
  }

  double overlap(double x1, double x2) const override {
    check_signal(x1);
    check_signal(x2);
    double t1 = theta_of_x(spec_, x1);
    double t2 = theta_of_x(spec_, x2);
    if (!spec_.theta_domain.contains(t1 + t2) && t1 + t2 != 0.0)
      throw std::domain_error("exponential_family overlap: theta1+theta2 leaves the domain");
    return std::expm1(spec_.psi(t1 + t2) - spec_.psi(t1) - spec_.psi(t2));
  }

  double fisher() const override { return 1.0 / spec_.sigma2; }

  double score_unnormalized(double y) const override { return (y - spec_.mu) / spec_.sigma2; }

  bool cheap_overlap() const override { return true; }

 private:
  void validate() const {
    if (std::fabs(spec_.psi(0.0)) > 1e-12)
      throw std::invalid_argument("make_exponential_family: psi(0) must be 0");
    if (std::fabs(spec_.dpsi(0.0) - spec_.mu) > 1e-9 * std::max(1.0, std::fabs(spec_.mu)))
      throw std::invalid_argument("make_exponential_family: psi'(0) must equal mu");
    if (!(spec_.sigma2 > 0.0) ||
        std::fabs(spec_.d2psi(0.0) - spec_.sigma2) > 1e-9 * spec_.sigma2)
      throw std::invalid_argument("make_exponential_family: psi''(0) must equal sigma2 > 0");
    double prev = spec_.dpsi(-2.0);
    for (double t = -1.5; t <= 2.0; t += 0.5) {
      double cur = spec_.dpsi(t);
      if (!(cur > prev))
        throw std::invalid_argument("make_exponential_family: psi' must be strictly increasing");
      prev = cur;
    }
  }

  CgfSpec spec_;
  Interval domain_;
  std::string description_;
};

class BernoulliChannel final : public ChannelImpl {
 public:
  explicit BernoulliChannel(double c) : c_(c) {
    if (!(c > 0.0 && c < 1.0))
      throw std::invalid_argument("make_bernoulli: c must be in (0,1)");
    description_ = kBernoulli + "(c=" + std::to_string(c) + ")";
  }

  const std::string& kind() const override { return kBernoulli; }
  const std::string& description() const override { return description_; }
  Interval signal_domain() const override { return {-c_, 1.0 - c_, true}; }

  double likelihood_ratio(double x, double y) const override {
    check_signal(x);
    if (y == 1.0) return (c_ + x) / c_;
    if (y == 0.0) return (1.0 - c_ - x) / (1.0 - c_);
    throw std::domain_error("bernoulli: output must be 0 or 1");
  }

  double overlap(double x1, double x2) const override {
    check_signal(x1);
    check_signal(x2);
    return x1 * x2 / (c_ * (1.0 - c_));
  }

  double fisher() const override { return 1.0 / (c_ * (1.0 - c_)); }

  double score_unnormalized(double y) const override {
    if (y == 1.0) return 1.0 / c_;
    if (y == 0.0) return -1.0 / (1.0 - c_);
    throw std::domain_error("bernoulli: output must be 0 or 1");
  }

  bool cheap_overlap() const override { return true; }

 private:
  double c_;
  std::string description_;
};

class CensoredChannel final : public ChannelImpl {
 public:
  CensoredChannel(std::shared_ptr<const ChannelImpl> inner, double eta)
      : inner_(std::move(inner)), eta_(eta) {
    if (!(eta >= 0.0 && eta <= 1.0))
      throw std::domain_error("censor: eta must lie in [0, 1]");
    description_ = kCensored + "(eta=" + std::to_string(eta) + ", " + inner_->description() + ")";
  }

  const std::string& kind() const override { return kCensored; }
  const std::string& description() const override { return description_; }
  Interval signal_domain() const override { return inner_->signal_domain(); }

  double likelihood_ratio(double x, double y) const override {
    if (is_censored_symbol(y)) {
      check_signal(x);
      return 1.0;  // the null symbol carries no information about x
    }
    return inner_->likelihood_ratio(x, y);
  }

  double overlap(double x1, double x2) const override {
    return (1.0 - eta_) * inner_->overlap(x1, x2);
  }

  double fisher() const override { return (1.0 - eta_) * inner_->fisher(); }
  bool degenerate() const override { return eta_ == 1.0; }

  double score_unnormalized(double y) const override {
    if (is_censored_symbol(y)) return 0.0;
    return inner_->score_unnormalized(y);
  }

  bool cheap_overlap() const override { return inner_->cheap_overlap(); }
  const DensitySpec* additive_density() const override { return inner_->additive_density(); }

 private:
  std::shared_ptr<const ChannelImpl> inner_;
  double eta_;
  std::string description_;
};

class QuantizedChannel final : public ChannelImpl {
 public:
  explicit QuantizedChannel(std::shared_ptr<const ChannelImpl> inner) : inner_(std::move(inner)) {
    const DensitySpec* density = inner_->additive_density();
    if (density == nullptr)
      throw std::invalid_argument("quantize: only additive channels can be quantized");
    density_ = *density;
    p0_ = density_.density(0.0);
    cheap_ = static_cast<bool>(density_.cdf);
    description_ = kQuantized + "(" + inner_->description() + ")";
  }

  const std::string& kind() const override { return kQuantized; }
  const std::string& description() const override { return description_; }
  Interval signal_domain() const override { return inner_->signal_domain(); }

  double likelihood_ratio(double x, double y) const override {
    check_signal(x);
    // sign outputs only; sgn(0) is mapped to +1
    double g = density_.cumulative(x);
    if (y == 1.0) return 2.0 * g;
    if (y == -1.0) return 2.0 * (1.0 - g);
    throw std::domain_error("quantized: output must be -1 or +1");
  }

  double overlap(double x1, double x2) const override {
    check_signal(x1);
    check_signal(x2);
    double g1 = density_.cumulative(x1);
    double g2 = density_.cumulative(x2);
    return 2.0 * g1 * g2 + 2.0 * (1.0 - g1) * (1.0 - g2) - 1.0;
  }

  double fisher() const override { return 4.0 * p0_ * p0_; }

  double score_unnormalized(double y) const override {
    if (y == 1.0) return 2.0 * p0_;
    if (y == -1.0) return -2.0 * p0_;
    throw std::domain_error("quantized: output must be -1 or +1");
  }

  bool cheap_overlap() const override { return cheap_; }

 private:
  std::shared_ptr<const ChannelImpl> inner_;
  DensitySpec density_;
  double p0_;
  bool cheap_;
  std::string description_;
};

}  // namespace
}  // namespace detail

Channel::Channel(std::shared_ptr<const detail::ChannelImpl> impl) : impl_(std::move(impl)) {}

const std::string& Channel::kind() const { return impl_->kind(); }
const std::string& Channel::description() const { return impl_->description(); }
Interval Channel::signal_domain() const { return impl_->signal_domain(); }
double Channel::likelihood_ratio(double x, double y) const {
  return impl_->likelihood_ratio(x, y);
}
double Channel::overlap(double x1, double x2) const { return impl_->overlap(x1, x2); }
double Channel::fisher_information() const { return impl_->fisher(); }
bool Channel::degenerate() const { return impl_->degenerate(); }

double Channel::local_fisher_score(double y) const {
  if (impl_->degenerate())
    throw std::domain_error("local_fisher_score: channel has zero Fisher information");
  return impl_->score_unnormalized(y) / impl_->fisher();
}

double Channel::score_unnormalized(double y) const { return impl_->score_unnormalized(y); }
bool Channel::cheap_overlap() const { return impl_->cheap_overlap(); }
const DensitySpec* Channel::additive_density() const { return impl_->additive_density(); }

Channel make_additive(DensitySpec spec) {
  return Channel(std::make_shared<detail::AdditiveChannel>(std::move(spec)));
}

Channel make_exponential_family(CgfSpec spec) {
  return Channel(std::make_shared<detail::ExpFamilyChannel>(std::move(spec)));
}

Channel make_bernoulli(double c) {
  return Channel(std::make_shared<detail::BernoulliChannel>(c));
}

namespace detail {
// access to the impl pointer for the wrappers
struct ChannelAccess {
  static std::shared_ptr<const ChannelImpl> impl(const Channel& channel) {
    return channel.impl_;
  }
};
}  // namespace detail

Channel censor(const Channel& inner, double eta) {
  return Channel(std::make_shared<detail::CensoredChannel>(detail::ChannelAccess::impl(inner), eta));
}

Channel quantize(const Channel& inner) {
  return Channel(std::make_shared<detail::QuantizedChannel>(detail::ChannelAccess::impl(inner)));
}

double fisher_information_fd(const Channel& channel, double h) {
  if (!(h > 0.0)) throw std::domain_error("fisher_information_fd: h must be positive");
  double rpp = channel.overlap(h, h);
  double rpm = channel.overlap(h, -h);
  double rmp = channel.overlap(-h, h);
  double rmm = channel.overlap(-h, -h);
  return (rpp - rpm - rmp + rmm) / (4.0 * h * h);
}

double fisher_information_fd_rich(const Channel& channel, double h) {
  double coarse = fisher_information_fd(channel, h);
  double fine = fisher_information_fd(channel, 0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

namespace {
double third_mixed_fd_once(const Channel& channel, double h) {
  // d^3 R / dx1^2 dx2 at (0,0); uses R(0, +-h) = 0
  double rpp = channel.overlap(h, h);
  double rmp = channel.overlap(-h, h);
  double rpm = channel.overlap(h, -h);
  double rmm = channel.overlap(-h, -h);
  return (rpp + rmp - rpm - rmm) / (2.0 * h * h * h);
}
}  // namespace

double third_mixed_derivative_fd(const Channel& channel, double h) {
  double coarse = third_mixed_fd_once(channel, h);
  double fine = third_mixed_fd_once(channel, 0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace lcdf
