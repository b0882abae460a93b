#include "randlik/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace randlik::kernels {

namespace {

struct Table {
    Backend backend;
    double (*dot)(const double*, const double*, std::size_t);
    double (*weighted_sum)(const double*, const double*, std::size_t);
    double (*weighted_dot)(const double*, const double*, const double*, std::size_t);
    double (*sum_sq_dots)(const double*, std::size_t, const double*, std::size_t);
    double (*hellinger_accum)(const double*, const double*, const double*, double, double,
                              std::size_t);
};

constexpr Table kScalarTable{Backend::scalar,        scalar::dot,
                             scalar::weighted_sum,   scalar::weighted_dot,
                             scalar::sum_sq_dots,    scalar::hellinger_accum};

#if defined(RANDLIK_BUILD_AVX2)
constexpr Table kAvx2Table{Backend::avx2,          avx2::dot,
                           avx2::weighted_sum,     avx2::weighted_dot,
                           avx2::sum_sq_dots,      avx2::hellinger_accum};
#endif

Table select() {
    const char* env = std::getenv("RANDLIK_SIMD");
    const bool force_scalar = env != nullptr && std::strcmp(env, "scalar") == 0;
#if defined(RANDLIK_BUILD_AVX2)
    const bool cpu_ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    if (cpu_ok && !force_scalar) {
        return kAvx2Table;
    }
#endif
    (void)force_scalar;
    return kScalarTable;
}

const Table& table() {
    static const Table t = select();
    return t;
}

}  // namespace

Backend active_backend() { return table().backend; }

const char* backend_name(Backend backend) {
    switch (backend) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "unknown";
}

double dot(const double* a, const double* b, std::size_t n) {
    return table().dot(a, b, n);
}

double weighted_sum(const double* w, const double* v, std::size_t n) {
    return table().weighted_sum(w, v, n);
}

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
    return table().weighted_dot(w, a, b, n);
}

double sum_sq_dots(const double* rows, std::size_t n_rows, const double* v, std::size_t n) {
    return table().sum_sq_dots(rows, n_rows, v, n);
}

double hellinger_accum(const double* w, const double* a, const double* b,
                       double inv_za, double inv_zb, std::size_t n) {
    return table().hellinger_accum(w, a, b, inv_za, inv_zb, n);
}

}  // namespace randlik::kernels
