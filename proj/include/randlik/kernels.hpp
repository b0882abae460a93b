#pragma once

// Reduction kernels: scalar reference implementations plus SIMD (AVX2) variants
// selected at runtime. Every kernel follows one fixed accumulation contract so all
// backends produce bitwise-identical results:
//
//   * elements are accumulated into 4 lanes, lane l taking elements j with
//     j % 4 == l, using fused multiply-add for each update;
//   * lanes combine as (lane0 + lane1) + (lane2 + lane3);
//   * the tail (n % 4 trailing elements) is folded into its own fma chain and
//     added after the lane combine;
//   * sum_sq_dots processes rows in blocks of 4 with a per-row-lane accumulator
//     for the squared dots, combined the same way, trailing rows added in order.
//
// The scalar backend spells this contract out with std::fma; the AVX2 backend maps
// each lane to one slot of a 256-bit register (vfmadd). Dispatch picks AVX2 when the
// CPU supports AVX2+FMA; set RANDLIK_SIMD=scalar (or =avx2) to override.

#include <cstddef>

namespace randlik::kernels {

enum class Backend { scalar, avx2 };

// Backend chosen at first use (CPU detection + RANDLIK_SIMD override).
Backend active_backend();
const char* backend_name(Backend backend);

// sum_j a[j] * b[j]
double dot(const double* a, const double* b, std::size_t n);

// sum_j w[j] * v[j]
double weighted_sum(const double* w, const double* v, std::size_t n);

// sum_j w[j] * a[j] * b[j]
double weighted_dot(const double* w, const double* a, const double* b, std::size_t n);

// sum_i (rows_i . v)^2 over n_rows contiguous rows of length n
double sum_sq_dots(const double* rows, std::size_t n_rows, const double* v, std::size_t n);

// sum_j w[j] * (sqrt(a[j] * inv_za) - sqrt(b[j] * inv_zb))^2
double hellinger_accum(const double* w, const double* a, const double* b,
                       double inv_za, double inv_zb, std::size_t n);

// Reference backend, always available; used directly by equivalence tests.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double weighted_sum(const double* w, const double* v, std::size_t n);
double weighted_dot(const double* w, const double* a, const double* b, std::size_t n);
double sum_sq_dots(const double* rows, std::size_t n_rows, const double* v, std::size_t n);
double hellinger_accum(const double* w, const double* a, const double* b,
                       double inv_za, double inv_zb, std::size_t n);
}  // namespace scalar

#if defined(RANDLIK_BUILD_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double weighted_sum(const double* w, const double* v, std::size_t n);
double weighted_dot(const double* w, const double* a, const double* b, std::size_t n);
double sum_sq_dots(const double* rows, std::size_t n_rows, const double* v, std::size_t n);
double hellinger_accum(const double* w, const double* a, const double* b,
                       double inv_za, double inv_zb, std::size_t n);
}  // namespace avx2
#endif

}  // namespace randlik::kernels
