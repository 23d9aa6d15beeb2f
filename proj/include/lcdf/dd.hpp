#pragma once

#include <cmath>

// Double-double arithmetic (Dekker/Shewchuk error-free transformations).
// Used internally where alternating-series cancellation exceeds what plain
// doubles can absorb. Roughly 31 significant digits; not a public API.

namespace lcdf::dd {

struct DD {
  double hi = 0.0;
  double lo = 0.0;
};

inline DD two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return {s, err};
}

inline DD quick_two_sum(double a, double b) {
  double s = a + b;
  return {s, b - (s - a)};
}

inline DD two_prod(double a, double b) {
  double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline DD add(DD a, DD b) {
  DD s = two_sum(a.hi, b.hi);
  s.lo += a.lo + b.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline DD add(DD a, double b) {
  DD s = two_sum(a.hi, b);
  s.lo += a.lo;
  return quick_two_sum(s.hi, s.lo);
}

inline DD sub(DD a, DD b) { return add(a, DD{-b.hi, -b.lo}); }

inline DD mul(DD a, DD b) {
  DD p = two_prod(a.hi, b.hi);
  p.lo += a.hi * b.lo + a.lo * b.hi;
  return quick_two_sum(p.hi, p.lo);
}

inline DD mul(DD a, double b) {
  DD p = two_prod(a.hi, b);
  p.lo += a.lo * b;
  return quick_two_sum(p.hi, p.lo);
}

inline DD div(DD a, double b) {
  double q1 = a.hi / b;
  DD p = two_prod(q1, b);
  double r = ((a.hi - p.hi) - p.lo) + a.lo;
  double q2 = r / b;
  return quick_two_sum(q1, q2);
}

inline DD from(double x) { return {x, 0.0}; }

// exp(x) for |x| <= ~700. Range reduction x = k ln2 + r, dd Taylor on r.
inline DD exp(double x) {
  // ln2 split to double-double precision
  constexpr double ln2_hi = 0.6931471805599453094172321214582;
  constexpr double ln2_lo = -7.0081394745495851912822589442889e-17;
  double k = std::nearbyint(x / ln2_hi);
  DD r = two_sum(x, -k * ln2_hi);
  r = add(r, -k * ln2_lo);
  // Taylor sum of exp(r), |r| <= 0.347: ~22 terms reach 1e-33
  DD term{1.0, 0.0};
  DD sum{1.0, 0.0};
  for (int d = 1; d <= 24; ++d) {
    term = div(mul(term, r), static_cast<double>(d));
    sum = add(sum, term);
    if (std::fabs(term.hi) < 1e-35 * std::fabs(sum.hi)) break;
  }
  double scale = std::ldexp(1.0, static_cast<int>(k));
  return {sum.hi * scale, sum.lo * scale};
}

}  // namespace lcdf::dd
