#include "doctest.h"

#include <cmath>

#include "lcdf/quadrature.hpp"

using namespace lcdf;

TEST_CASE("polynomials are exact") {
  auto r = integrate_adaptive([](double x) { return 3.0 * x * x; }, 0.0, 2.0);
  CHECK(r.value == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(integrate([](double x) { return x * x * x - x; }, -1.0, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("gaussian mass and moments") {
  auto phi = [](double y) { return std::exp(-0.5 * y * y) / std::sqrt(2.0 * M_PI); };
  CHECK(integrate(phi, -12.0, 12.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(integrate([&](double y) { return y * y * phi(y); }, -12.0, 12.0) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sharply peaked integrand forces subdivision") {
  auto r = integrate_adaptive([](double x) { return std::exp(-1e4 * x * x); }, -10.0, 10.0,
                              1e-13, 1e-12);
  CHECK(r.value == doctest::Approx(std::sqrt(M_PI) / 100.0).epsilon(1e-11));
  CHECK(r.subdivisions > 4);
}

TEST_CASE("budget exhaustion reports achieved tolerance") {
  CHECK_THROWS_AS(integrate_adaptive([](double x) { return std::cos(50.0 / (x + 1e-3)); }, 0.0,
                                     1.0, 1e-300, 1e-300, 3),
                  NumericalError);
}
