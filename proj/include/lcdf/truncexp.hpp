#pragma once

#include <stdexcept>
#include <string>

namespace lcdf {

// Raised when an iterative numeric routine cannot reach its target accuracy.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double achieved_tolerance)
      : std::runtime_error(what), achieved_tolerance_(achieved_tolerance) {}
  double achieved_tolerance() const { return achieved_tolerance_; }

 private:
  double achieved_tolerance_;
};

// Degree-D truncated Taylor series of exp at x: sum_{d=0}^{D} x^d / d!.
//
// Relative error <= 1e-12 against trunc_exp_oracle for |x| <= 50, D <= 200.
// Strictly positive for even D. For x < 0 the alternating series is summed
// in double-double, switching between a remainder form (|x| <= D + 2), where
// the partial sum is recovered as exp(x) minus the well-conditioned series
// tail, and direct summation (|x| > D + 2), where the last term dominates.
double trunc_exp(double x, int degree);

// Independent high-precision evaluation via the integral representation
//   (1/D!) * Integral_0^inf exp(-s) (x+s)^D ds,
// computed with panel Gauss-Legendre quadrature in log space. For x < 0 the
// integrand is split at s = -x so each piece has constant sign. Documented
// relative accuracy 1e-14; throws NumericalError with the achieved tolerance
// when two refinement levels disagree beyond 1e-12. Test oracle only.
double trunc_exp_oracle(double x, int degree);

// log(trunc_exp(x, degree)) for even degree (so the value is positive).
// Never overflows for |x| <= 1e4, degree <= 1e4. Throws std::domain_error
// for odd degree.
double log_trunc_exp(double x, int degree);

}  // namespace lcdf
