#include "doctest.h"

#include <cmath>

#include "lcdf/channels.hpp"
#include "lcdf/quadrature.hpp"
#include "lcdf/rng.hpp"

using namespace lcdf;

namespace {

double expectation_p0(const Channel& channel, const DensitySpec& density,
                      const std::function<double(double)>& g) {
  double w = density.tail_halfwidth;
  return integrate([&](double y) { return g(y) * density.density(y); }, -w, w, 1e-12, 1e-10);
}

}  // namespace

TEST_CASE("gaussian additive channel: quadrature fisher and overlap") {
  Channel gauss = make_additive(gaussian_density(1.0));
  CHECK(gauss.fisher_information() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(gauss.overlap(0.5, 0.2) == doctest::Approx(std::expm1(0.1)).epsilon(1e-8));
  CHECK(gauss.overlap(0.7, 0.0) == 0.0);
  CHECK(gauss.likelihood_ratio(0.0, 1.234) == doctest::Approx(1.0).epsilon(1e-14));
  // score for the standard gaussian is the identity
  CHECK(gauss.score_unnormalized(1.7) == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(gauss.local_fisher_score(-0.4) == doctest::Approx(-0.4).epsilon(1e-7));
}

TEST_CASE("overlap symmetry, zero rows, non-negative diagonal") {
  Channel channels[] = {make_additive(gaussian_density(1.0)),
                        make_bernoulli(0.5),
                        make_exponential_family(poisson_cgf(2.0)),
                        quantize(make_additive(gaussian_density(1.0))),
                        censor(make_exponential_family(gaussian_cgf(1.0)), 0.3)};
  RngStream rng(5, 0);
  for (const Channel& channel : channels) {
    for (int i = 0; i < 40; ++i) {
      double x1 = 0.8 * (rng.next_double() - 0.5);
      double x2 = 0.8 * (rng.next_double() - 0.5);
      CHECK(std::fabs(channel.overlap(x1, x2) - channel.overlap(x2, x1)) < 1e-10);
      CHECK(channel.overlap(x1, x1) >= -1e-10);
      CHECK(std::fabs(channel.overlap(x1, 0.0)) < 1e-10);
    }
  }
}

TEST_CASE("bernoulli channel closed forms") {
  Channel ber = make_bernoulli(0.5);
  CHECK(ber.likelihood_ratio(0.25, 1.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(ber.overlap(0.1, 0.3) == doctest::Approx(0.12).epsilon(1e-15));
  CHECK(ber.fisher_information() == doctest::Approx(4.0).epsilon(1e-15));
  CHECK_THROWS_AS(ber.likelihood_ratio(0.7, 1.0), std::domain_error);  // outside (-c, 1-c)
  CHECK_THROWS_AS(ber.likelihood_ratio(0.1, 0.5), std::domain_error);
  // Cramer-Rao saturation holds exactly on two atoms
  double f1 = ber.local_fisher_score(1.0), f0 = ber.local_fisher_score(0.0);
  CHECK(0.5 * f1 + 0.5 * f0 == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(0.5 * f1 * f1 + 0.5 * f0 * f0 == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("exponential family: gaussian cgf reproduces the product overlap") {
  Channel gauss = make_exponential_family(gaussian_cgf(1.0));
  CHECK(theta_of_x(gaussian_cgf(1.0), 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  RngStream rng(8, 0);
  for (int i = 0; i < 50; ++i) {
    double x1 = 2.0 * rng.next_double() - 1.0;
    double x2 = 2.0 * rng.next_double() - 1.0;
    CHECK(gauss.overlap(x1, x2) == doctest::Approx(std::expm1(x1 * x2)).epsilon(1e-12));
  }
  CHECK(gauss.fisher_information() == doctest::Approx(1.0));
}

TEST_CASE("exponential family: bernoulli cgf matches the two-point channel algebra") {
  Channel nef = make_exponential_family(bernoulli_cgf(0.5));
  Channel direct = make_bernoulli(0.5);
  RngStream rng(9, 0);
  for (int i = 0; i < 50; ++i) {
    double x1 = 0.9 * (rng.next_double() - 0.5);
    double x2 = 0.9 * (rng.next_double() - 0.5);
    CHECK(nef.overlap(x1, x2) == doctest::Approx(direct.overlap(x1, x2)).epsilon(1e-11));
  }
  CHECK(nef.fisher_information() == doctest::Approx(4.0));
  CHECK(nef.likelihood_ratio(0.25, 1.0) == doctest::Approx(1.5).epsilon(1e-11));
}

TEST_CASE("exponential family: poisson") {
  CgfSpec spec = poisson_cgf(2.0);
  Channel poisson = make_exponential_family(spec);
  CHECK(poisson.fisher_information() == doctest::Approx(0.5));
  CHECK(theta_of_x(spec, 1.0) == doctest::Approx(std::log(1.5)).epsilon(1e-12));
  CHECK(theta_of_x(spec, 0.0) == 0.0);
  CHECK_THROWS_AS(poisson.overlap(-2.5, 0.1), std::domain_error);  // mean would go negative
}

TEST_CASE("theta_of_x: bracketed bisection agrees with the analytic inverses") {
  CgfSpec specs[] = {gaussian_cgf(1.3), bernoulli_cgf(0.35), poisson_cgf(2.0)};
  double args[] = {-0.3, -0.02, 0.01, 0.2, 0.33};
  for (const CgfSpec& with_inverse : specs) {
    CgfSpec generic = with_inverse;
    generic.theta_inverse = nullptr;
    for (double x : args) {
      double a = theta_of_x(with_inverse, x);
      double b = theta_of_x(generic, x);
      CHECK(std::fabs(a - b) < 1e-11 * std::max(1.0, std::fabs(a)));
      CHECK(std::fabs(generic.dpsi(b) - (generic.mu + x)) <=
            1e-12 * std::max(1.0, std::fabs(generic.mu + x)));
    }
  }
}

TEST_CASE("finite-difference fisher cross-check, all built-ins") {
  struct Case {
    Channel channel;
    double expected;
  };
  Case cases[] = {
      {make_additive(gaussian_density(1.0)), 1.0},
      {make_bernoulli(0.5), 4.0},
      {make_bernoulli(0.3), 1.0 / (0.3 * 0.7)},
      {make_exponential_family(poisson_cgf(2.0)), 0.5},
      {make_exponential_family(poisson_cgf(1.0)), 1.0},
      {make_exponential_family(gaussian_cgf(1.0)), 1.0},
      {quantize(make_additive(gaussian_density(1.0))), 2.0 / M_PI},
      {censor(make_bernoulli(0.5), 0.25), 3.0},
  };
  for (const Case& c : cases) {
    CHECK(c.channel.fisher_information() == doctest::Approx(c.expected).epsilon(1e-9));
    double fd = fisher_information_fd_rich(c.channel, 1e-3);
    CHECK(std::fabs(fd - c.channel.fisher_information()) < 1e-5);
  }
}

TEST_CASE("third mixed derivative of the overlap vanishes at the origin") {
  Channel channels[] = {make_additive(gaussian_density(1.0)),
                        make_additive(smoothed_laplace_density(0.7, 0.15)),
                        make_exponential_family(poisson_cgf(2.0)),
                        make_bernoulli(0.4),
                        quantize(make_additive(gaussian_density(1.0)))};
  for (const Channel& channel : channels)
    CHECK(std::fabs(third_mixed_derivative_fd(channel, 0.02)) < 1e-4);
}

TEST_CASE("censoring scales overlap and fisher information by 1 - eta") {
  Channel gauss = make_additive(gaussian_density(1.0));
  Channel c0 = censor(gauss, 0.0);
  CHECK(c0.overlap(0.5, 0.2) == doctest::Approx(gauss.overlap(0.5, 0.2)).epsilon(1e-14));

  Channel c4 = censor(gauss, 0.4);
  CHECK(c4.overlap(0.5, 0.2) == doctest::Approx(0.6 * std::expm1(0.1)).epsilon(1e-8));
  CHECK(c4.likelihood_ratio(0.3, censored_symbol()) == 1.0);
  CHECK(c4.local_fisher_score(censored_symbol()) == 0.0);

  Channel c1 = censor(gauss, 1.0);
  CHECK(c1.degenerate());
  CHECK(c1.fisher_information() == 0.0);
  CHECK_THROWS_AS(c1.local_fisher_score(0.1), std::domain_error);
  CHECK_THROWS_AS(censor(gauss, 1.5), std::domain_error);

  Channel nested = censor(censor(gauss, 0.3), 0.5);
  CHECK(nested.fisher_information() ==
        doctest::Approx(0.7 * 0.5 * gauss.fisher_information()).epsilon(1e-12));
}

TEST_CASE("quantized gaussian channel") {
  Channel sgn = quantize(make_additive(gaussian_density(1.0)));
  CHECK(sgn.fisher_information() == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
  CHECK(sgn.likelihood_ratio(0.3, 1.0) == doctest::Approx(1.235822844377905274613).epsilon(1e-12));
  CHECK(sgn.overlap(0.0, 0.4) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(sgn.overlap(0.4, 0.4) > 0.0);
  CHECK_THROWS_AS(sgn.likelihood_ratio(0.3, 0.5), std::domain_error);
  CHECK_THROWS_AS(quantize(make_bernoulli(0.5)), std::invalid_argument);
  // scores are +-1/(2 p(0))
  double expect = std::sqrt(M_PI / 2.0);
  CHECK(sgn.local_fisher_score(1.0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(sgn.local_fisher_score(-1.0) == doctest::Approx(-expect).epsilon(1e-12));
}

TEST_CASE("smoothed laplace density: closed form vs direct convolution quadrature") {
  const double c = 0.7, eps = 0.15;
  DensitySpec spec = smoothed_laplace_density(c, eps);
  auto laplace = [&](double z) { return c * std::exp(-2.0 * c * std::fabs(z)); };
  auto kernel = [&](double u) {
    return std::exp(-0.5 * u * u / (eps * eps)) / (eps * std::sqrt(2.0 * M_PI));
  };
  for (double y : {0.0, 0.05, 0.3, 1.0, -1.0, 3.5, -6.0, 12.0}) {
    double conv = integrate([&](double z) { return laplace(z) * kernel(y - z); }, y - 12 * eps,
                            y + 12 * eps, 1e-14, 1e-12);
    CHECK(spec.pdf(y) == doctest::Approx(conv).epsilon(1e-9));
  }
  // derivative vs centered difference of the closed form
  for (double y : {0.4, -0.9, 2.0}) {
    double h = 1e-6;
    double fd = (spec.pdf(y + h) - spec.pdf(y - h)) / (2 * h);
    CHECK(spec.dpdf(y) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("smoothed laplace fisher information approaches the laplace limit 4c^2") {
  const double c = 0.7;
  double limit = 4.0 * c * c;
  Channel wide = make_additive(smoothed_laplace_density(c, 0.25));
  Channel narrow = make_additive(smoothed_laplace_density(c, 0.05));
  CHECK(wide.fisher_information() < limit);
  CHECK(narrow.fisher_information() < limit);
  CHECK(narrow.fisher_information() > wide.fisher_information());
  CHECK(narrow.fisher_information() > 0.9 * limit);
}

TEST_CASE("quantization keeps nearly all fisher information of smoothed laplace") {
  const double c = 0.7;
  for (double eps : {0.2, 0.05}) {
    Channel base = make_additive(smoothed_laplace_density(c, eps));
    Channel sgn = quantize(base);
    CHECK(sgn.fisher_information() <= base.fisher_information() * (1.0 + 1e-12));
    if (eps == 0.05)
      CHECK(sgn.fisher_information() >= 0.9 * base.fisher_information());
  }
}

TEST_CASE("variance-one additive densities have fisher information >= 1") {
  CHECK(make_additive(gaussian_density(1.0)).fisher_information() >= 1.0 - 1e-8);
  double eps = 0.3;
  double c = 1.0 / std::sqrt(2.0 * (1.0 - eps * eps));  // laplace var + eps^2 = 1
  Channel channel = make_additive(smoothed_laplace_density(c, eps));
  CHECK(channel.fisher_information() >= 1.0 - 1e-8);
}

TEST_CASE("cramer-rao saturation for continuous channels") {
  DensitySpec dens[] = {gaussian_density(1.0), smoothed_laplace_density(0.7, 0.15)};
  for (const DensitySpec& d : dens) {
    Channel channel = make_additive(d);
    double mean = expectation_p0(channel, d, [&](double y) { return channel.local_fisher_score(y); });
    double second = expectation_p0(channel, d, [&](double y) {
      double f = channel.local_fisher_score(y);
      return f * f;
    });
    CHECK(std::fabs(mean) < 1e-8);
    CHECK(second == doctest::Approx(1.0 / channel.fisher_information()).epsilon(1e-6));
  }
}

TEST_CASE("construction validation rejects bad densities") {
  DensitySpec bad = gaussian_density(1.0);
  bad.pdf = [](double y) { return std::exp(-0.5 * (y - 0.3) * (y - 0.3)) / std::sqrt(2 * M_PI); };
  bad.dpdf = nullptr;
  bad.cdf = nullptr;
  CHECK_THROWS_AS(make_additive(bad), std::invalid_argument);  // not symmetric

  DensitySpec unnormalized = gaussian_density(1.0);
  unnormalized.pdf = [](double y) { return 1.1 * std::exp(-0.5 * y * y) / std::sqrt(2 * M_PI); };
  unnormalized.dpdf = nullptr;
  unnormalized.cdf = nullptr;
  CHECK_THROWS_AS(make_additive(unnormalized), std::invalid_argument);
}

TEST_CASE("cgf validation") {
  CgfSpec bad = gaussian_cgf(1.0);
  bad.psi = [](double t) { return 0.5 * t * t + 0.1; };
  CHECK_THROWS_AS(make_exponential_family(bad), std::invalid_argument);
  CHECK_THROWS_AS(make_bernoulli(1.2), std::invalid_argument);
}
