// Scalar reference kernels. These spell out the shared accumulation contract
// (4 fma lanes, (l0+l1)+(l2+l3) combine, sequential fma tail) that the SIMD
// backends must reproduce bit for bit.

#include "randlik/kernels.hpp"

#include <cmath>

namespace randlik::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    const std::size_t blocked = n - n % 4;
    double lane0 = 0.0, lane1 = 0.0, lane2 = 0.0, lane3 = 0.0;
    for (std::size_t j = 0; j < blocked; j += 4) {
        lane0 = std::fma(a[j + 0], b[j + 0], lane0);
        lane1 = std::fma(a[j + 1], b[j + 1], lane1);
        lane2 = std::fma(a[j + 2], b[j + 2], lane2);
        lane3 = std::fma(a[j + 3], b[j + 3], lane3);
    }
    double tail = 0.0;
    for (std::size_t j = blocked; j < n; ++j) {
        tail = std::fma(a[j], b[j], tail);
    }
    return ((lane0 + lane1) + (lane2 + lane3)) + tail;
}

double weighted_sum(const double* w, const double* v, std::size_t n) {
    return dot(w, v, n);
}

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
    const std::size_t blocked = n - n % 4;
    double lane0 = 0.0, lane1 = 0.0, lane2 = 0.0, lane3 = 0.0;
    for (std::size_t j = 0; j < blocked; j += 4) {
        lane0 = std::fma(w[j + 0], a[j + 0] * b[j + 0], lane0);
        lane1 = std::fma(w[j + 1], a[j + 1] * b[j + 1], lane1);
        lane2 = std::fma(w[j + 2], a[j + 2] * b[j + 2], lane2);
        lane3 = std::fma(w[j + 3], a[j + 3] * b[j + 3], lane3);
    }
    double tail = 0.0;
    for (std::size_t j = blocked; j < n; ++j) {
        tail = std::fma(w[j], a[j] * b[j], tail);
    }
    return ((lane0 + lane1) + (lane2 + lane3)) + tail;
}

double sum_sq_dots(const double* rows, std::size_t n_rows, const double* v, std::size_t n) {
    const std::size_t blocked = n_rows - n_rows % 4;
    double lane0 = 0.0, lane1 = 0.0, lane2 = 0.0, lane3 = 0.0;
    for (std::size_t i = 0; i < blocked; i += 4) {
        const double d0 = dot(rows + (i + 0) * n, v, n);
        const double d1 = dot(rows + (i + 1) * n, v, n);
        const double d2 = dot(rows + (i + 2) * n, v, n);
        const double d3 = dot(rows + (i + 3) * n, v, n);
        lane0 = std::fma(d0, d0, lane0);
        lane1 = std::fma(d1, d1, lane1);
        lane2 = std::fma(d2, d2, lane2);
        lane3 = std::fma(d3, d3, lane3);
    }
    double tail = 0.0;
    for (std::size_t i = blocked; i < n_rows; ++i) {
        const double d = dot(rows + i * n, v, n);
        tail = std::fma(d, d, tail);
    }
    return ((lane0 + lane1) + (lane2 + lane3)) + tail;
}

double hellinger_accum(const double* w, const double* a, const double* b,
                       double inv_za, double inv_zb, std::size_t n) {
    const std::size_t blocked = n - n % 4;
    double lane0 = 0.0, lane1 = 0.0, lane2 = 0.0, lane3 = 0.0;
    for (std::size_t j = 0; j < blocked; j += 4) {
        const double s0 = std::sqrt(a[j + 0] * inv_za) - std::sqrt(b[j + 0] * inv_zb);
        const double s1 = std::sqrt(a[j + 1] * inv_za) - std::sqrt(b[j + 1] * inv_zb);
        const double s2 = std::sqrt(a[j + 2] * inv_za) - std::sqrt(b[j + 2] * inv_zb);
        const double s3 = std::sqrt(a[j + 3] * inv_za) - std::sqrt(b[j + 3] * inv_zb);
        lane0 = std::fma(w[j + 0], s0 * s0, lane0);
        lane1 = std::fma(w[j + 1], s1 * s1, lane1);
        lane2 = std::fma(w[j + 2], s2 * s2, lane2);
        lane3 = std::fma(w[j + 3], s3 * s3, lane3);
    }
    double tail = 0.0;
    for (std::size_t j = blocked; j < n; ++j) {
        const double s = std::sqrt(a[j] * inv_za) - std::sqrt(b[j] * inv_zb);
        tail = std::fma(w[j], s * s, tail);
    }
    return ((lane0 + lane1) + (lane2 + lane3)) + tail;
}

}  // namespace randlik::kernels::scalar
