#pragma once
// Sketched quadratic misfits: random probe vectors sigma with mean zero and identity
// covariance, and the estimator
//   Phi_N = (1/2N) sum_i (sigma^(i) . w)^2,   w = Gamma^{-1/2}(G(u) - y),
// which is unbiased for Phi and concentrates at rate N^{-1/2}.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "randlik/forward.hpp"

namespace randlik::randmisfit {

inline constexpr std::size_t kMaxSketchEntries = 100'000'000;

// Probe-vector law. The ell-sparse law with sparsity ell in [0, 1) and scale
// s = 1/(1-ell) draws each entry independently as
//   +sqrt(s) w.p. 1/(2s),  -sqrt(s) w.p. 1/(2s),  0 w.p. 1 - 1/s,
// so entries have mean 0, variance 1, and fourth moment s (stored, used in the
// variance bound). Gaussian entries are standard normal with fourth moment 3; they
// are provided for exploration only and rejected by the asserted variance bound.
struct SketchDistribution {
    enum class Kind { ell_sparse, gaussian };
    Kind kind = Kind::ell_sparse;
    double ell = 0.0;
    double scale = 1.0;          // s = 1/(1-ell); 1 for gaussian
    double fourth_moment = 1.0;  // E[sigma_j^4]: s for ell-sparse, 3 for gaussian
};

SketchDistribution ell_sparse_sketch(double ell);
SketchDistribution gaussian_sketch();

// N probe vectors of length J, reproducible from the seed.
struct SketchEnsemble {
    SketchDistribution dist;
    std::size_t data_dim = 0;  // J
    std::size_t count = 0;     // N
    std::vector<double> vectors;  // N x J, row-major
    std::uint64_t seed = 0;

    std::span<const double> vector(std::size_t i) const {
        return {vectors.data() + i * data_dim, data_dim};
    }
};

// Entry (i, j) is drawn from substream counter i*J + j of the seed, so any
// row-parallel evaluation reproduces the serial entries bit for bit.
SketchEnsemble sample_ensemble(const SketchDistribution& dist, std::size_t data_dim,
                               std::size_t count, std::uint64_t seed);

// Phi_N for the raw residual G(u) - y (whitens internally).
double randomized_misfit(const SketchEnsemble& ensemble, std::span<const double> residual,
                         const forward::NoiseModel& noise);

// Phi_N for a residual already whitened by Gamma^{-1/2} (hot path across grid nodes).
double randomized_misfit_whitened(const SketchEnsemble& ensemble, std::span<const double> w);

struct VarianceCheck {
    double empirical_var = 0.0;
    double bound = 0.0;
};

// Single-probe variance diagnostic: estimates Var[(1/2)(sigma . w)^2] from num_draws
// independent probes and compares it against the closed-form bound
//   (J^3 E[sigma_j^4] - 1) Phi^2.
// Throws if the empirical variance exceeds the bound by more than 5%, if the law is
// gaussian (the bound's derivation needs bounded entries), or if num_draws < 1e5.
VarianceCheck variance_bound_check(const SketchDistribution& dist,
                                   std::span<const double> residual,
                                   const forward::NoiseModel& noise,
                                   std::size_t num_draws = 100'000, std::uint64_t seed = 1);

}  // namespace randlik::randmisfit
