// AVX2 kernel backend. Each 256-bit register slot realizes one lane of the shared
// accumulation contract, so results are bitwise-identical to the scalar reference:
// vfmadd per lane, (l0+l1)+(l2+l3) horizontal combine, scalar std::fma tails.

#include "randlik/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace randlik::kernels::avx2 {

namespace {

// (l0 + l1) + (l2 + l3), matching the scalar lane combine exactly.
inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d slo = _mm_hadd_pd(lo, lo);
    const __m128d shi = _mm_hadd_pd(hi, hi);
    return _mm_cvtsd_f64(_mm_add_sd(slo, shi));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
    const std::size_t blocked = n - n % 4;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < blocked; j += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j), acc);
    }
    double tail = 0.0;
    for (std::size_t j = blocked; j < n; ++j) {
        tail = std::fma(a[j], b[j], tail);
    }
    return hsum(acc) + tail;
}

double weighted_sum(const double* w, const double* v, std::size_t n) {
    return dot(w, v, n);
}

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
    const std::size_t blocked = n - n % 4;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < blocked; j += 4) {
        const __m256d ab = _mm256_mul_pd(_mm256_loadu_pd(a + j), _mm256_loadu_pd(b + j));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + j), ab, acc);
    }
    double tail = 0.0;
    for (std::size_t j = blocked; j < n; ++j) {
        tail = std::fma(w[j], a[j] * b[j], tail);
    }
    return hsum(acc) + tail;
}

double sum_sq_dots(const double* rows, std::size_t n_rows, const double* v, std::size_t n) {
    const std::size_t row_blocked = n_rows - n_rows % 4;
    const std::size_t col_blocked = n - n % 4;
    __m256d row_acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < row_blocked; i += 4) {
        const double* r0 = rows + (i + 0) * n;
        const double* r1 = rows + (i + 1) * n;
        const double* r2 = rows + (i + 2) * n;
        const double* r3 = rows + (i + 3) * n;
        __m256d a0 = _mm256_setzero_pd();
        __m256d a1 = _mm256_setzero_pd();
        __m256d a2 = _mm256_setzero_pd();
        __m256d a3 = _mm256_setzero_pd();
        for (std::size_t j = 0; j < col_blocked; j += 4) {
            const __m256d vv = _mm256_loadu_pd(v + j);
            a0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + j), vv, a0);
            a1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + j), vv, a1);
            a2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + j), vv, a2);
            a3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + j), vv, a3);
        }
        // Per-row combine: hadd makes the (l0+l1)/(l2+l3) pairs, the 128-bit
        // permutes line the four rows up, one add finishes (l0+l1)+(l2+l3).
        const __m256d t0 = _mm256_hadd_pd(a0, a1);
        const __m256d t1 = _mm256_hadd_pd(a2, a3);
        const __m256d lo = _mm256_permute2f128_pd(t0, t1, 0x20);
        const __m256d hi = _mm256_permute2f128_pd(t0, t1, 0x31);
        __m256d dots = _mm256_add_pd(lo, hi);
        if (col_blocked != n) {
            alignas(32) double t[4] = {0.0, 0.0, 0.0, 0.0};
            for (std::size_t j = col_blocked; j < n; ++j) {
                t[0] = std::fma(r0[j], v[j], t[0]);
                t[1] = std::fma(r1[j], v[j], t[1]);
                t[2] = std::fma(r2[j], v[j], t[2]);
                t[3] = std::fma(r3[j], v[j], t[3]);
            }
            dots = _mm256_add_pd(dots, _mm256_load_pd(t));
        }
        row_acc = _mm256_fmadd_pd(dots, dots, row_acc);
    }
    double tail = 0.0;
    for (std::size_t i = row_blocked; i < n_rows; ++i) {
        const double d = dot(rows + i * n, v, n);
        tail = std::fma(d, d, tail);
    }
    return hsum(row_acc) + tail;
}

double hellinger_accum(const double* w, const double* a, const double* b,
                       double inv_za, double inv_zb, std::size_t n) {
    const std::size_t blocked = n - n % 4;
    const __m256d iza = _mm256_set1_pd(inv_za);
    const __m256d izb = _mm256_set1_pd(inv_zb);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < blocked; j += 4) {
        const __m256d sa = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_loadu_pd(a + j), iza));
        const __m256d sb = _mm256_sqrt_pd(_mm256_mul_pd(_mm256_loadu_pd(b + j), izb));
        const __m256d s = _mm256_sub_pd(sa, sb);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + j), _mm256_mul_pd(s, s), acc);
    }
    double tail = 0.0;
    for (std::size_t j = blocked; j < n; ++j) {
        const double s = std::sqrt(a[j] * inv_za) - std::sqrt(b[j] * inv_zb);
        tail = std::fma(w[j], s * s, tail);
    }
    return hsum(acc) + tail;
}

}  // namespace randlik::kernels::avx2
