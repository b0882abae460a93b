#include "randlik/randmisfit.hpp"

#include <cmath>
#include <string>

#include "randlik/errors.hpp"
#include "randlik/kernels.hpp"
#include "randlik/rng.hpp"

namespace randlik::randmisfit {

SketchDistribution ell_sparse_sketch(double ell) {
    if (!(ell >= 0.0) || !(ell < 1.0)) {
        throw DomainError("sketch: sparsity must lie in [0, 1)");
    }
    SketchDistribution dist;
    dist.kind = SketchDistribution::Kind::ell_sparse;
    dist.ell = ell;
    dist.scale = 1.0 / (1.0 - ell);
    dist.fourth_moment = dist.scale;  // s^2 * P(|sigma| = sqrt(s)) = s^2 / s
    return dist;
}

SketchDistribution gaussian_sketch() {
    SketchDistribution dist;
    dist.kind = SketchDistribution::Kind::gaussian;
    dist.ell = 0.0;
    dist.scale = 1.0;
    dist.fourth_moment = 3.0;
    return dist;
}

namespace {

double sketch_entry(const SketchDistribution& dist, std::uint64_t seed, std::uint64_t index) {
    if (dist.kind == SketchDistribution::Kind::gaussian) {
        return rng::gaussian(seed, 0, index);
    }
    const double u = rng::uniform01(seed, 0, index);
    const double root_s = std::sqrt(dist.scale);
    if (u < 0.5 / dist.scale) {
        return root_s;
    }
    if (u < 1.0 / dist.scale) {
        return -root_s;
    }
    return 0.0;
}

}  // namespace

SketchEnsemble sample_ensemble(const SketchDistribution& dist, std::size_t data_dim,
                               std::size_t count, std::uint64_t seed) {
    if (data_dim == 0 || count == 0) {
        throw DimensionError("sample_ensemble: data_dim and count must be positive");
    }
    if (data_dim > kMaxSketchEntries / count) {
        throw CapacityError("sample_ensemble: ensemble would exceed " +
                            std::to_string(kMaxSketchEntries) + " entries");
    }
    SketchEnsemble ensemble;
    ensemble.dist = dist;
    ensemble.data_dim = data_dim;
    ensemble.count = count;
    ensemble.seed = seed;
    ensemble.vectors.resize(count * data_dim);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < data_dim; ++j) {
            ensemble.vectors[i * data_dim + j] =
                sketch_entry(dist, seed, static_cast<std::uint64_t>(i) * data_dim + j);
        }
    }
    return ensemble;
}

double randomized_misfit(const SketchEnsemble& ensemble, std::span<const double> residual,
                         const forward::NoiseModel& noise) {
    if (residual.size() != ensemble.data_dim || noise.data_dim != ensemble.data_dim) {
        throw DimensionError("randomized_misfit: dimensions do not match the ensemble");
    }
    const std::vector<double> w = forward::whiten_residual(residual, noise);
    return randomized_misfit_whitened(ensemble, w);
}

double randomized_misfit_whitened(const SketchEnsemble& ensemble, std::span<const double> w) {
    if (w.size() != ensemble.data_dim) {
        throw DimensionError("randomized_misfit: whitened residual has wrong length");
    }
    const double sum = kernels::sum_sq_dots(ensemble.vectors.data(), ensemble.count, w.data(),
                                            ensemble.data_dim);
    return sum / (2.0 * static_cast<double>(ensemble.count));
}

VarianceCheck variance_bound_check(const SketchDistribution& dist,
                                   std::span<const double> residual,
                                   const forward::NoiseModel& noise, std::size_t num_draws,
                                   std::uint64_t seed) {
    if (dist.kind == SketchDistribution::Kind::gaussian) {
        throw DomainError("variance_bound_check: the bound only covers bounded sketch entries");
    }
    if (num_draws < 100'000) {
        throw DomainError("variance_bound_check: need at least 1e5 draws");
    }
    if (residual.size() != noise.data_dim) {
        throw DimensionError("variance_bound_check: residual has wrong length");
    }
    const std::size_t J = residual.size();
    const std::vector<double> w = forward::whiten_residual(residual, noise);
    const double phi = forward::quadratic_misfit(residual, noise);

    // Streaming mean/variance over single-probe values (1/2)(sigma . w)^2.
    double mean = 0.0;
    double m2 = 0.0;
    std::vector<double> sigma(J);
    for (std::size_t i = 0; i < num_draws; ++i) {
        for (std::size_t j = 0; j < J; ++j) {
            sigma[j] = sketch_entry(dist, seed, static_cast<std::uint64_t>(i) * J + j);
        }
        const double dot = kernels::dot(sigma.data(), w.data(), J);
        const double value = 0.5 * dot * dot;
        const double delta = value - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (value - mean);
    }
    VarianceCheck check;
    check.empirical_var = m2 / static_cast<double>(num_draws - 1);
    const double j3 = static_cast<double>(J) * static_cast<double>(J) * static_cast<double>(J);
    check.bound = (j3 * dist.fourth_moment - 1.0) * phi * phi;
    if (check.empirical_var > check.bound * 1.05) {
        throw Error("variance_bound_check: empirical variance " +
                    std::to_string(check.empirical_var) + " exceeds bound " +
                    std::to_string(check.bound) + " by more than 5%");
    }
    return check;
}

}  // namespace randlik::randmisfit
