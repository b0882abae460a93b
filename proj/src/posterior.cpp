#include "randlik/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "randlik/errors.hpp"
#include "randlik/kernels.hpp"

namespace randlik::posterior {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// exp() overflows roughly beyond this; used to report overflow explicitly.
constexpr double kMaxLog = 700.0;

void check_grid_field(const measures::ParameterGrid& grid, std::uint64_t grid_id,
                      const char* what) {
    if (grid.id != grid_id) {
        throw GridMismatchError(std::string(what) + ": field belongs to a different grid");
    }
}

double checked_exp(double x, const char* what) {
    if (x > kMaxLog) {
        throw NormalizationError(std::string(what) + ": exp(" + std::to_string(x) +
                                 ") overflows");
    }
    return std::exp(x);
}

// values_i = exp(shift - phi_i) with shift = min phi; the shift is recorded on the
// field so normalizer() restores the unshifted constant.
measures::DensityField shifted_density(const measures::ParameterGrid& grid,
                                       std::span<const double> phi, const char* what) {
    if (phi.size() != grid.node_count()) {
        throw DimensionError(std::string(what) + ": potential has wrong node count");
    }
    double shift = kInf;
    for (const double v : phi) {
        if (!std::isfinite(v)) {
            throw DomainError(std::string(what) + ": potential values must be finite");
        }
        shift = std::min(shift, v);
    }
    std::vector<double> values(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        values[i] = std::exp(shift - phi[i]);
    }
    measures::DensityField field = measures::make_density(grid, std::move(values));
    field.log_offset = shift;
    return field;
}

double weighted_mean(const measures::ParameterGrid& grid, std::span<const double> v) {
    return kernels::weighted_sum(grid.weights.data(), v.data(), v.size());
}

// L^r(prior) norm of nonnegative node values; r = INFINITY gives the node maximum.
double prior_norm(const measures::ParameterGrid& grid, std::span<const double> g, double r) {
    if (std::isinf(r)) {
        double m = 0.0;
        for (const double v : g) {
            m = std::max(m, v);
        }
        return m;
    }
    std::vector<double> powed(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        powed[i] = std::pow(g[i], r);
    }
    return std::pow(weighted_mean(grid, powed), 1.0 / r);
}

}  // namespace

PotentialField make_potential_field(const measures::ParameterGrid& grid,
                                    std::vector<double> values) {
    if (values.size() != grid.node_count()) {
        throw DimensionError("potential field: wrong node count");
    }
    for (const double v : values) {
        if (!std::isfinite(v)) {
            throw DomainError("potential field: values must be finite");
        }
    }
    return PotentialField{grid.id, std::move(values)};
}

RandomPotentialEnsemble make_ensemble(const measures::ParameterGrid& grid, std::size_t count,
                                      std::vector<double> phi_values,
                                      std::vector<std::uint64_t> seeds) {
    if (count == 0) {
        throw DimensionError("potential ensemble: need at least one realization");
    }
    if (grid.node_count() > kMaxEnsembleValues / count) {
        throw CapacityError("potential ensemble: more than " +
                            std::to_string(kMaxEnsembleValues) + " values");
    }
    if (phi_values.size() != count * grid.node_count()) {
        throw DimensionError("potential ensemble: values must be count x node_count");
    }
    if (!seeds.empty() && seeds.size() != count) {
        throw DimensionError("potential ensemble: need one seed per realization (or none)");
    }
    for (const double v : phi_values) {
        if (!std::isfinite(v)) {
            throw DomainError("potential ensemble: values must be finite");
        }
    }
    return RandomPotentialEnsemble{grid.id, count, std::move(phi_values), std::move(seeds)};
}

measures::DensityField exact_posterior(const measures::ParameterGrid& grid,
                                       const PotentialField& potential) {
    check_grid_field(grid, potential.grid_id, "exact_posterior");
    return shifted_density(grid, potential.values, "exact_posterior");
}

measures::DensityField sample_posterior(const measures::ParameterGrid& grid,
                                        std::span<const double> phi_n_values) {
    return shifted_density(grid, phi_n_values, "sample_posterior");
}

measures::DensityField marginal_posterior(const measures::ParameterGrid& grid,
                                          const RandomPotentialEnsemble& ensemble) {
    check_grid_field(grid, ensemble.grid_id, "marginal_posterior");
    const std::size_t n = grid.node_count();
    const std::size_t m = ensemble.count;
    if (ensemble.phi_values.size() != n * m) {
        throw DimensionError("marginal_posterior: ensemble does not match the grid");
    }
    double shift = kInf;
    for (const double v : ensemble.phi_values) {
        shift = std::min(shift, v);
    }
    std::vector<double> values(n, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = ensemble.phi_values.data() + r * n;
        for (std::size_t i = 0; i < n; ++i) {
            values[i] += std::exp(shift - row[i]);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        values[i] /= static_cast<double>(m);
    }
    measures::DensityField field = measures::make_density(grid, std::move(values));
    field.log_offset = shift;
    return field;
}

double hellinger_to_exact(const measures::ParameterGrid& grid,
                          const measures::DensityField& exact,
                          const measures::DensityField& approx) {
    return measures::hellinger(grid, exact, approx);
}

RmsHellinger mean_square_hellinger(const measures::ParameterGrid& grid,
                                   const measures::DensityField& exact,
                                   const RandomPotentialEnsemble& ensemble) {
    check_grid_field(grid, ensemble.grid_id, "mean_square_hellinger");
    if (ensemble.count < 2) {
        throw DomainError("mean_square_hellinger: need at least 2 realizations");
    }
    const std::size_t n = grid.node_count();
    std::vector<double> d2(ensemble.count);
    for (std::size_t r = 0; r < ensemble.count; ++r) {
        const measures::DensityField sample =
            sample_posterior(grid, ensemble.realization(r, n));
        const double d = measures::hellinger(grid, exact, sample);
        d2[r] = d * d;
    }
    double mean = 0.0;
    for (const double v : d2) {
        mean += v;
    }
    mean /= static_cast<double>(d2.size());
    double var = 0.0;
    for (const double v : d2) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(d2.size() - 1);
    const double se_mean = std::sqrt(var / static_cast<double>(d2.size()));
    RmsHellinger out;
    out.rms = std::sqrt(mean);
    out.stderr_ = se_mean == 0.0 ? 0.0 : se_mean / (2.0 * std::max(out.rms, 1e-300));
    return out;
}

MarginalHellinger marginal_hellinger(const measures::ParameterGrid& grid,
                                     const measures::DensityField& exact,
                                     const RandomPotentialEnsemble& ensemble) {
    check_grid_field(grid, ensemble.grid_id, "marginal_hellinger");
    check_grid_field(grid, exact.grid_id, "marginal_hellinger");
    const std::size_t n = grid.node_count();
    const std::size_t m = ensemble.count;

    const measures::DensityField marginal = marginal_posterior(grid, ensemble);
    MarginalHellinger out;
    out.value = measures::hellinger(grid, exact, marginal);
    if (m < 2) {
        out.stderr_ = 0.0;
        return out;
    }

    // Linearization: d_H^2 = 1 - B with B the weighted overlap of the normalized
    // square roots. Project the per-realization spread of x_m = exp(shift - Phi_m)
    // through grad_v B at v = marginal values, then divide by 2 d_H.
    const double z_v = marginal.norm_const;
    const double z_p = exact.norm_const;
    double overlap = 0.0;
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
        overlap += grid.weights[i] *
                   std::sqrt((exact.values[i] / z_p) * (marginal.values[i] / z_v));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double v = marginal.values[i];
        const double phat = exact.values[i] / z_p;
        const double root = v > 0.0 ? std::sqrt(phat / (v * z_v)) : 0.0;
        grad[i] = grid.weights[i] * (0.5 * root - 0.5 * overlap / z_v);
    }

    const double shift = marginal.log_offset;
    std::vector<double> proj(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = ensemble.phi_values.data() + r * n;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += grad[i] * std::exp(shift - row[i]);
        }
        proj[r] = acc;
    }
    double mean = 0.0;
    for (const double v : proj) {
        mean += v;
    }
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (const double v : proj) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(m - 1);
    const double se_overlap = std::sqrt(var / static_cast<double>(m));
    out.stderr_ = se_overlap / (2.0 * std::max(out.value, 1e-12));
    return out;
}

BoundConstants bounded_potential_constants(const measures::ParameterGrid& grid,
                                           const PotentialField& potential,
                                           const RandomPotentialEnsemble& ensemble,
                                           double c3_candidate, double p_star,
                                           std::optional<double> rho_star) {
    check_grid_field(grid, potential.grid_id, "bounded_potential_constants");
    check_grid_field(grid, ensemble.grid_id, "bounded_potential_constants");
    if (!(c3_candidate > 0.0)) {
        throw DomainError("bounded_potential_constants: c3 must be positive");
    }
    if (!(p_star >= 1.0)) {
        throw DomainError("bounded_potential_constants: p_star must be >= 1 (or infinity)");
    }
    const std::size_t n = grid.node_count();
    const std::size_t m = ensemble.count;

    BoundConstants k;
    k.c3 = c3_candidate;
    k.p_star = p_star;

    // Exact normalizer in log space (stable under large potentials).
    double min_phi = kInf;
    double max_phi = -kInf;
    for (const double v : potential.values) {
        min_phi = std::min(min_phi, v);
        max_phi = std::max(max_phi, v);
    }
    std::vector<double> scratch(n);
    for (std::size_t i = 0; i < n; ++i) {
        scratch[i] = std::exp(min_phi - potential.values[i]);
    }
    const double z_shifted = weighted_mean(grid, scratch);
    if (!(z_shifted > 0.0) || !std::isfinite(z_shifted)) {
        throw NormalizationError("bounded_potential_constants: exact normalizer vanished");
    }
    k.z = z_shifted * checked_exp(-min_phi, "bounded_potential_constants");
    if (!(1.0 / k.c3 < k.z) || !(k.z < k.c3)) {
        throw DomainError("bounded_potential_constants: need 1/c3 < Z < c3, got Z = " +
                          std::to_string(k.z) + " with c3 = " + std::to_string(k.c3));
    }

    double min_phi_n = kInf;
    for (const double v : ensemble.phi_values) {
        min_phi_n = std::min(min_phi_n, v);
    }
    k.c0 = std::max(0.0, std::max(-min_phi, -min_phi_n));

    k.c4 = -kInf;
    for (std::size_t r = 0; r < m; ++r) {
        k.c4 = std::max(k.c4, weighted_mean(grid, ensemble.realization(r, n)));
    }

    if (std::isinf(p_star)) {
        k.c1 = checked_exp(max_phi, "bounded_potential_constants: c1");
    } else {
        // log ||exp(Phi)||_{p*} = (1/p*) log sum_i w_i exp(p* Phi_i), shifted by the max.
        for (std::size_t i = 0; i < n; ++i) {
            scratch[i] = std::exp(p_star * (potential.values[i] - max_phi));
        }
        const double log_c1 = max_phi + std::log(weighted_mean(grid, scratch)) / p_star;
        k.c1 = checked_exp(log_c1, "bounded_potential_constants: c1");
    }

    k.c2 = 2.0 * checked_exp(k.c0, "bounded_potential_constants: c2");
    k.d1 = 2.0 * k.c2;
    k.d2 = 4.0 * checked_exp(3.0 * k.c0, "bounded_potential_constants: d2") *
           std::max(std::pow(k.c3, -3.0),
                    checked_exp(3.0 * k.c4, "bounded_potential_constants: d2"));
    k.c = (k.c1 / k.z + k.c3 * std::max(std::pow(k.z, -3.0), std::pow(k.c3, 3.0))) * k.c2 * k.c2;

    k.exponents.p1 = p_star;
    k.exponents.p2 = kInf;
    k.exponents.p3 = kInf;
    k.exponents.q1 = kInf;
    k.exponents.q2 = kInf;
    k.exponents.p1_conj = std::isinf(p_star) ? 1.0
                          : p_star == 1.0    ? kInf
                                             : p_star / (p_star - 1.0);
    k.exponents.p2_conj = 1.0;
    k.exponents.p3_conj = 1.0;
    k.exponents.q1_conj = 1.0;
    k.exponents.q2_conj = 1.0;

    // L^1 closeness against the two-sided bracket (reported, not enforced).
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            acc += std::abs(potential.values[i] - ensemble.phi_values[r * n + i]);
        }
        scratch[i] = acc / static_cast<double>(m);
    }
    k.l1_error = weighted_mean(grid, scratch);
    k.l1_threshold = std::min(k.z - 1.0 / k.c3, k.c3 - k.z) / k.c2;
    k.smallness_satisfied = k.l1_error <= k.l1_threshold;

    if (rho_star) {
        if (!(*rho_star > 2.0)) {
            throw DomainError("bounded_potential_constants: rho_star must exceed 2");
        }
        k.rho_star = *rho_star;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t r = 0; r < m; ++r) {
                const double t = *rho_star * ensemble.phi_values[r * n + i];
                if (t > kMaxLog) {
                    throw Error(
                        "bounded_potential_constants: exp(rho_star Phi_N) overflowed; the "
                        "exponential-moment check is inconclusive for this ensemble");
                }
                acc += std::exp(t);
            }
            scratch[i] = acc / static_cast<double>(m);
        }
        const double moment = weighted_mean(grid, scratch);
        if (!std::isfinite(moment)) {
            throw Error(
                "bounded_potential_constants: exponential-moment check is inconclusive "
                "(non-finite realization mean)");
        }
    }
    return k;
}

namespace {

void check_bound_exponents(const BoundConstants& k, const char* what) {
    if (!std::isinf(k.exponents.p2) || !std::isinf(k.exponents.p3) ||
        !std::isinf(k.exponents.q1) || !std::isinf(k.exponents.q2)) {
        throw DomainError(std::string(what) +
                          ": constants were not built at the supported exponent settings");
    }
}

// Node-wise mean and standard error of |Phi - Phi_N|^power over the ensemble.
void node_moments(const PotentialField& potential, const RandomPotentialEnsemble& ensemble,
                  std::size_t n, double power, std::vector<double>& mean,
                  std::vector<double>& se) {
    const std::size_t m = ensemble.count;
    mean.assign(n, 0.0);
    se.assign(n, 0.0);
    std::vector<double> sq(n, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        const double* row = ensemble.phi_values.data() + r * n;
        for (std::size_t i = 0; i < n; ++i) {
            const double gap = std::abs(potential.values[i] - row[i]);
            const double v = power == 1.0 ? gap : gap * gap;
            mean[i] += v;
            sq[i] += v * v;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        mean[i] /= static_cast<double>(m);
        if (m >= 2) {
            const double var =
                std::max(sq[i] / static_cast<double>(m) - mean[i] * mean[i], 0.0) *
                static_cast<double>(m) / static_cast<double>(m - 1);
            se[i] = std::sqrt(var / static_cast<double>(m));
        }
    }
}

}  // namespace

BoundVerification verify_marginal_bound(const measures::ParameterGrid& grid,
                                        const PotentialField& potential,
                                        const RandomPotentialEnsemble& ensemble,
                                        const BoundConstants& constants) {
    check_grid_field(grid, potential.grid_id, "verify_marginal_bound");
    check_grid_field(grid, ensemble.grid_id, "verify_marginal_bound");
    check_bound_exponents(constants, "verify_marginal_bound");
    const std::size_t n = grid.node_count();

    const measures::DensityField exact = exact_posterior(grid, potential);
    const measures::DensityField marginal = marginal_posterior(grid, ensemble);

    std::vector<double> mean, se;
    node_moments(potential, ensemble, n, 1.0, mean, se);
    const double r = 2.0 * constants.exponents.p1_conj * constants.exponents.p3_conj;

    BoundVerification out;
    out.lhs = measures::hellinger(grid, exact, marginal);
    out.rhs = constants.c * prior_norm(grid, mean, r);
    for (std::size_t i = 0; i < n; ++i) {
        mean[i] += 3.0 * se[i];
    }
    out.rhs_slack = constants.c * prior_norm(grid, mean, r) - out.rhs;
    return out;
}

BoundVerification verify_sample_bound(const measures::ParameterGrid& grid,
                                      const PotentialField& potential,
                                      const RandomPotentialEnsemble& ensemble,
                                      const BoundConstants& constants) {
    check_grid_field(grid, potential.grid_id, "verify_sample_bound");
    check_grid_field(grid, ensemble.grid_id, "verify_sample_bound");
    check_bound_exponents(constants, "verify_sample_bound");
    const std::size_t n = grid.node_count();

    const measures::DensityField exact = exact_posterior(grid, potential);
    const RmsHellinger rms = mean_square_hellinger(grid, exact, ensemble);

    // || (mean |Phi - Phi_N|^2)^{1/2} ||_{L^2} = (sum_i w_i mean_i)^{1/2} directly.
    std::vector<double> mean, se;
    node_moments(potential, ensemble, n, 2.0, mean, se);

    BoundVerification out;
    out.lhs = rms.rms;
    const double scale = constants.d1 + constants.d2;
    out.rhs = scale * std::sqrt(kernels::weighted_sum(grid.weights.data(), mean.data(), n));
    for (std::size_t i = 0; i < n; ++i) {
        mean[i] += 3.0 * se[i];
    }
    out.rhs_slack =
        scale * std::sqrt(kernels::weighted_sum(grid.weights.data(), mean.data(), n)) - out.rhs;
    return out;
}

}  // namespace randlik::posterior
