#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the estimators. Every operation has a
// scalar reference implementation and an AVX2 variant; the active one is
// selected at runtime from CPU capabilities, overridable with LCDF_SIMD
// (values: auto | scalar | avx2). The two variants are equivalence-tested
// against each other in tests/test_kernels.cpp.

namespace lcdf::kernels {

enum class Isa { scalar, avx2 };

Isa active_isa();
const char* isa_name(Isa isa);
// Force a specific implementation (tests / benchmarking). Throws if the
// requested ISA is unsupported on this CPU.
void force_isa(Isa isa);

// Inner product.
double dot(const double* a, const double* b, std::size_t n);

// Compensated (Neumaier) sum.
double sum_comp(const double* x, std::size_t n);

// Prefix sum of elementary symmetric polynomials: sum_{d=0}^{min(degree,n)}
// e_d(r_1..r_n), by the column dynamic program e_d += r_i * e_{d-1}.
// degree < 0 is treated as 0.
double esp_prefix_sum(const double* r, std::size_t n, int degree);

// out[i] = expm1(a[i] * b[i]).
void expm1_prod(const double* a, const double* b, double* out, std::size_t n);

namespace detail {
// Raw variants, exposed for the equivalence tests.
double dot_scalar(const double* a, const double* b, std::size_t n);
double dot_avx2(const double* a, const double* b, std::size_t n);
double sum_comp_scalar(const double* x, std::size_t n);
double sum_comp_avx2(const double* x, std::size_t n);
double esp_prefix_sum_scalar(const double* r, std::size_t n, int degree);
double esp_prefix_sum_avx2(const double* r, std::size_t n, int degree);
void expm1_prod_scalar(const double* a, const double* b, double* out, std::size_t n);
void expm1_prod_avx2(const double* a, const double* b, double* out, std::size_t n);
bool cpu_has_avx2();
}  // namespace detail

}  // namespace lcdf::kernels
