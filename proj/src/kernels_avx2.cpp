// AVX2+FMA kernel variants. Compiled with per-function target attributes so
// the translation unit stays safe to build for a generic x86-64 baseline;
// dispatch guarantees these are only called when the CPU supports them.

#include "lcdf/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define LCDF_HAVE_AVX2_BUILD 1
#endif

namespace lcdf::kernels::detail {

#ifdef LCDF_HAVE_AVX2_BUILD

#define LCDF_AVX2 __attribute__((target("avx2,fma")))

LCDF_AVX2 static inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

LCDF_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

LCDF_AVX2 double sum_comp_avx2(const double* x, std::size_t n) {
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFLL));
  __m256d s = _mm256_setzero_pd();
  __m256d c = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d t = _mm256_add_pd(s, v);
    // Neumaier: recover the rounding error of s + v lane-wise
    __m256d big_s = _mm256_cmp_pd(_mm256_and_pd(s, abs_mask), _mm256_and_pd(v, abs_mask), _CMP_GE_OQ);
    __m256d err_s = _mm256_add_pd(_mm256_sub_pd(s, t), v);
    __m256d err_v = _mm256_add_pd(_mm256_sub_pd(v, t), s);
    c = _mm256_add_pd(c, _mm256_blendv_pd(err_v, err_s, big_s));
    s = t;
  }
  alignas(32) double sl[4], cl[4];
  _mm256_store_pd(sl, s);
  _mm256_store_pd(cl, c);
  // fold lanes and the remainder with the scalar compensated loop
  double tail[9];
  int m = 0;
  for (int k = 0; k < 4; ++k) tail[m++] = sl[k];
  for (int k = 0; k < 4; ++k) tail[m++] = cl[k];
  double folded = sum_comp_scalar(tail, static_cast<std::size_t>(m));
  if (i < n) {
    double rest = sum_comp_scalar(x + i, n - i);
    double two[2] = {folded, rest};
    folded = sum_comp_scalar(two, 2);
  }
  return folded;
}

LCDF_AVX2 double esp_prefix_sum_avx2(const double* r, std::size_t n, int degree) {
  if (degree < 8) return esp_prefix_sum_scalar(r, n, degree);
  std::size_t d_max = static_cast<std::size_t>(degree);
  if (d_max > n) d_max = n;
  std::vector<double> e(d_max + 1, 0.0);
  e[0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ri = r[i];
    const __m256d rv = _mm256_set1_pd(ri);
    std::size_t top = (i + 1 < d_max) ? (i + 1) : d_max;
    // walk blocks downward so e[d-1] loads still see the previous column
    std::size_t d = top;
    for (; d >= 4; d -= 4) {
      __m256d prev = _mm256_loadu_pd(&e[d - 4]);
      __m256d cur = _mm256_loadu_pd(&e[d - 3]);
      _mm256_storeu_pd(&e[d - 3], _mm256_fmadd_pd(rv, prev, cur));
    }
    for (; d >= 1; --d) e[d] += ri * e[d - 1];
  }
  return sum_comp_avx2(e.data(), e.size());
}

// ---- vector expm1 -----------------------------------------------------------

// exp(r) on |r| <= ln2/2, SLEEF-style minimax polynomial (< 1 ulp).
LCDF_AVX2 static inline __m256d exp_core(__m256d r) {
  const __m256d c1 = _mm256_set1_pd(0.1666666666666669072e+0);
  const __m256d c2 = _mm256_set1_pd(0.4166666666666602598e-1);
  const __m256d c3 = _mm256_set1_pd(0.8333333333314938210e-2);
  const __m256d c4 = _mm256_set1_pd(0.1388888888914497797e-2);
  const __m256d c5 = _mm256_set1_pd(0.1984126989855865850e-3);
  const __m256d c6 = _mm256_set1_pd(0.2480158687479686264e-4);
  const __m256d c7 = _mm256_set1_pd(0.2755723402025388239e-5);
  const __m256d c8 = _mm256_set1_pd(0.2755762628169491192e-6);
  const __m256d c9 = _mm256_set1_pd(0.2511210703042288022e-7);
  const __m256d c10 = _mm256_set1_pd(0.2081276378237164457e-8);
  __m256d r2 = _mm256_mul_pd(r, r);
  __m256d p = c10;
  p = _mm256_fmadd_pd(p, r, c9);
  p = _mm256_fmadd_pd(p, r, c8);
  p = _mm256_fmadd_pd(p, r, c7);
  p = _mm256_fmadd_pd(p, r, c6);
  p = _mm256_fmadd_pd(p, r, c5);
  p = _mm256_fmadd_pd(p, r, c4);
  p = _mm256_fmadd_pd(p, r, c3);
  p = _mm256_fmadd_pd(p, r, c2);
  p = _mm256_fmadd_pd(p, r, c1);
  p = _mm256_mul_pd(p, r);
  p = _mm256_add_pd(p, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r2, r);
  return _mm256_add_pd(p, _mm256_set1_pd(1.0));
}

// 2^n for integer-valued n in [-1022, 1023], via exponent-bit insertion.
LCDF_AVX2 static inline __m256d pow2i(__m256d n) {
  __m128i ni = _mm256_cvtpd_epi32(n);
  __m128i biased = _mm_add_epi32(ni, _mm_set1_epi32(1023));
  __m128i lo64 = _mm_cvtepi32_epi64(biased);
  __m128i hi64 = _mm_cvtepi32_epi64(_mm_shuffle_epi32(biased, 0x0E));
  lo64 = _mm_slli_epi64(lo64, 52);
  hi64 = _mm_slli_epi64(hi64, 52);
  return _mm256_set_m128d(_mm_castsi128_pd(hi64), _mm_castsi128_pd(lo64));
}

LCDF_AVX2 static inline __m256d expm1_vec(__m256d x) {
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFLL));
  __m256d ax = _mm256_and_pd(x, abs_mask);

  // small branch: Taylor sum_{d=1}^{17} x^d / d!, enough for |x| < 0.5
  const double inv_fact[17] = {
      1.0,
      1.0 / 2,
      1.0 / 6,
      1.0 / 24,
      1.0 / 120,
      1.0 / 720,
      1.0 / 5040,
      1.0 / 40320,
      1.0 / 362880,
      1.0 / 3628800,
      1.0 / 39916800,
      1.0 / 479001600,
      1.0 / 6227020800.0,
      1.0 / 87178291200.0,
      1.0 / 1307674368000.0,
      1.0 / 20922789888000.0,
      1.0 / 355687428096000.0};
  __m256d small = _mm256_set1_pd(inv_fact[16]);
  for (int k = 15; k >= 0; --k)
    small = _mm256_fmadd_pd(small, x, _mm256_set1_pd(inv_fact[k]));
  small = _mm256_mul_pd(small, x);

  // large branch: exp(x) - 1 with ln2 range reduction
  const __m256d ln2_inv = _mm256_set1_pd(1.4426950408889634073599246810019);
  const __m256d ln2_hi = _mm256_set1_pd(0.693147180369123816490e+0);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  __m256d xc = _mm256_min_pd(x, _mm256_set1_pd(709.0));
  xc = _mm256_max_pd(xc, _mm256_set1_pd(-708.0));
  __m256d nf = _mm256_round_pd(_mm256_mul_pd(xc, ln2_inv),
                               _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(nf, ln2_hi, xc);
  r = _mm256_fnmadd_pd(nf, ln2_lo, r);
  __m256d er = exp_core(r);
  __m256d large = _mm256_fmsub_pd(er, pow2i(nf), _mm256_set1_pd(1.0));
  // deep negative inputs saturate at -1
  large = _mm256_blendv_pd(large, _mm256_set1_pd(-1.0),
                           _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_LT_OQ));

  __m256d use_small = _mm256_cmp_pd(ax, _mm256_set1_pd(0.5), _CMP_LT_OQ);
  return _mm256_blendv_pd(large, small, use_small);
}

LCDF_AVX2 void expm1_prod_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, expm1_vec(prod));
  }
  for (; i < n; ++i) out[i] = std::expm1(a[i] * b[i]);
}

bool cpu_has_avx2() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

#else  // !LCDF_HAVE_AVX2_BUILD

double dot_avx2(const double* a, const double* b, std::size_t n) {
  return dot_scalar(a, b, n);
}
double sum_comp_avx2(const double* x, std::size_t n) { return sum_comp_scalar(x, n); }
double esp_prefix_sum_avx2(const double* r, std::size_t n, int degree) {
  return esp_prefix_sum_scalar(r, n, degree);
}
void expm1_prod_avx2(const double* a, const double* b, double* out, std::size_t n) {
  expm1_prod_scalar(a, b, out, n);
}
bool cpu_has_avx2() { return false; }

#endif

}  // namespace lcdf::kernels::detail
