#pragma once

#include <functional>

#include "lcdf/truncexp.hpp"  // NumericalError

namespace lcdf {

struct QuadratureResult {
  double value;
  double error_estimate;
  int subdivisions;
};

// Adaptive Gauss-Kronrod (15-point) integration of f over [a, b].
// Splits the worst interval until the summed error estimate is below
// max(abs_tol, rel_tol * |value|); throws NumericalError with the achieved
// tolerance if the subdivision budget is exhausted first.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double abs_tol = 1e-12, double rel_tol = 1e-12,
                                    int max_subdivisions = 2000);

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, double rel_tol = 1e-12);

}  // namespace lcdf
