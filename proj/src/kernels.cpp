#include "lcdf/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace lcdf::kernels {

namespace {

Isa select_initial() {
  if (const char* env = std::getenv("LCDF_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!detail::cpu_has_avx2())
        throw std::runtime_error("LCDF_SIMD=avx2 requested but CPU lacks AVX2/FMA");
      return Isa::avx2;
    }
    // anything else, including "auto", falls through to detection
  }
  return detail::cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& isa_slot() {
  static std::atomic<Isa> slot{select_initial()};
  return slot;
}

}  // namespace

Isa active_isa() { return isa_slot().load(std::memory_order_relaxed); }

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && !detail::cpu_has_avx2())
    throw std::runtime_error("AVX2/FMA not available on this CPU");
  isa_slot().store(isa, std::memory_order_relaxed);
}

double dot(const double* a, const double* b, std::size_t n) {
  return active_isa() == Isa::avx2 ? detail::dot_avx2(a, b, n) : detail::dot_scalar(a, b, n);
}

double sum_comp(const double* x, std::size_t n) {
  return active_isa() == Isa::avx2 ? detail::sum_comp_avx2(x, n) : detail::sum_comp_scalar(x, n);
}

double esp_prefix_sum(const double* r, std::size_t n, int degree) {
  return active_isa() == Isa::avx2 ? detail::esp_prefix_sum_avx2(r, n, degree)
                                   : detail::esp_prefix_sum_scalar(r, n, degree);
}

void expm1_prod(const double* a, const double* b, double* out, std::size_t n) {
  if (active_isa() == Isa::avx2)
    detail::expm1_prod_avx2(a, b, out, n);
  else
    detail::expm1_prod_scalar(a, b, out, n);
}

}  // namespace lcdf::kernels
