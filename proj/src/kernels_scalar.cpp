#include "lcdf/kernels.hpp"

#include <cmath>
#include <vector>

namespace lcdf::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 += a[i] * b[i];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  double acc = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_comp_scalar(const double* x, std::size_t n) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    double t = s + v;
    if (std::fabs(s) >= std::fabs(v))
      c += (s - t) + v;
    else
      c += (v - t) + s;
    s = t;
  }
  return s + c;
}

double esp_prefix_sum_scalar(const double* r, std::size_t n, int degree) {
  if (degree < 0) degree = 0;
  std::size_t d_max = static_cast<std::size_t>(degree);
  if (d_max > n) d_max = n;  // e_d = 0 for d > n, clamping is exact
  std::vector<double> e(d_max + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ri = r[i];
    std::size_t top = (i + 1 < d_max) ? (i + 1) : d_max;
    for (std::size_t d = top; d >= 1; --d) e[d] += ri * e[d - 1];
  }
  return sum_comp_scalar(e.data(), e.size());
}

void expm1_prod_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::expm1(a[i] * b[i]);
}

}  // namespace lcdf::kernels::detail
