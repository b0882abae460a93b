#pragma once
// Posteriors on a parameter grid from potentials (negative log-likelihoods): the
// exact posterior exp(-Phi)/Z, the sample posterior from one random realization
// Phi_N, and the marginal posterior whose density is the realization average of
// exp(-Phi_N). Also: Hellinger diagnostics against the exact posterior and fully
// computable constants for the two convergence bounds
//   d_H(mu, mu^M) <= C * || mean |Phi - Phi_N| ||_{L^r(mu0)},   r = 2 p*/(p* - 1),
//   E[d_H(mu, mu^S)^2]^{1/2} <= (D1 + D2) * || mean |Phi - Phi_N|^2 ^{1/2} ||_{L^2(mu0)}.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "randlik/measures.hpp"

namespace randlik::posterior {

// Potential values at the grid nodes (any finite reals; quadratic misfits are >= 0).
struct PotentialField {
    std::uint64_t grid_id = 0;
    std::vector<double> values;
};

PotentialField make_potential_field(const measures::ParameterGrid& grid,
                                    std::vector<double> values);

// M realizations of a random potential at the grid nodes, with the seeds that
// produced them (row m is realization m).
struct RandomPotentialEnsemble {
    std::uint64_t grid_id = 0;
    std::size_t count = 0;
    std::vector<double> phi_values;  // count x node_count, row-major
    std::vector<std::uint64_t> seeds;

    std::span<const double> realization(std::size_t m, std::size_t nodes) const {
        return {phi_values.data() + m * nodes, nodes};
    }
};

inline constexpr std::size_t kMaxEnsembleValues = 200'000'000;

RandomPotentialEnsemble make_ensemble(const measures::ParameterGrid& grid, std::size_t count,
                                      std::vector<double> phi_values,
                                      std::vector<std::uint64_t> seeds);

// exp(-Phi)/Z with Z = sum_i w_i exp(-Phi_i). Values are shifted by min Phi before
// exponentiation; DensityField::normalizer() restores the unshifted Z.
measures::DensityField exact_posterior(const measures::ParameterGrid& grid,
                                       const PotentialField& potential);

// Same formula for one realization of Phi_N; the normalizer is Z_N^S.
measures::DensityField sample_posterior(const measures::ParameterGrid& grid,
                                        std::span<const double> phi_n_values);

// Node-wise realization mean of exp(-Phi_N); the normalizer is the realization mean
// of Z_N^S. With count == 1 this is bitwise equal to sample_posterior of that row.
measures::DensityField marginal_posterior(const measures::ParameterGrid& grid,
                                          const RandomPotentialEnsemble& ensemble);

// Hellinger distance d_H(exact, approx); thin wrapper over measures::hellinger.
double hellinger_to_exact(const measures::ParameterGrid& grid,
                          const measures::DensityField& exact,
                          const measures::DensityField& approx);

struct RmsHellinger {
    double rms = 0.0;      // (mean_m d_H(mu, mu^S_m)^2)^{1/2}, in [0, 1]
    double stderr_ = 0.0;  // delta-method standard error of the rms
};

// Monte Carlo estimate of the mean-square Hellinger distance of the sample
// posteriors (one distance per realization; needs count >= 2).
RmsHellinger mean_square_hellinger(const measures::ParameterGrid& grid,
                                   const measures::DensityField& exact,
                                   const RandomPotentialEnsemble& ensemble);

struct MarginalHellinger {
    double value = 0.0;    // d_H(exact, marginal)
    double stderr_ = 0.0;  // linearized standard error from the realization spread
};

// d_H(exact, marginal posterior) with a standard error obtained by projecting the
// per-realization spread of exp(-Phi_N) through the gradient of the distance.
MarginalHellinger marginal_hellinger(const measures::ParameterGrid& grid,
                                     const measures::DensityField& exact,
                                     const RandomPotentialEnsemble& ensemble);

// Hoelder exponents the bounds were instantiated at (infinity encoded as INFINITY).
struct ExponentSettings {
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;       // marginal-bound exponents
    double q1 = 0.0, q2 = 0.0;                 // sample-bound exponents
    double p1_conj = 0.0, p2_conj = 0.0, p3_conj = 0.0;
    double q1_conj = 0.0, q2_conj = 0.0;
};

struct BoundConstants {
    double c0 = 0.0;  // uniform lower-bound constant: Phi, Phi_N >= -c0
    double c3 = 0.0;  // two-sided normalizer bracket: 1/c3 < Z < c3
    double c4 = 0.0;  // max over realizations of E_prior[Phi_N]
    double z = 0.0;   // exact normalizer
    double c1 = 0.0;  // ||exp(Phi)||_{L^{p*}(prior)}
    double c2 = 0.0;  // 2 exp(c0)
    double c = 0.0;   // (c1/z + c3 max{z^-3, c3^3}) c2^2
    double d1 = 0.0;  // 4 exp(c0)
    double d2 = 0.0;  // 4 exp(3 c0) max{c3^-3, exp(3 c4)}
    ExponentSettings exponents;
    double p_star = 0.0;                  // integrability exponent for c1 (may be INFINITY)
    std::optional<double> rho_star;       // optional exponential-moment exponent (> 2)
    double l1_error = 0.0;                // E_prior[ mean_m |Phi - Phi_N| ]
    double l1_threshold = 0.0;            // min{z - 1/c3, c3 - z} / (2 exp(c0))
    bool smallness_satisfied = false;     // l1_error <= l1_threshold (reported, not enforced)
};

// Builds every constant at the bounded-potential settings p2 = p3 = q1 = q2 = inf.
// Requires 1/c3 < Z < c3. A finite p_star must be >= 1; rho_star (if given) must be
// > 2 and triggers a Monte Carlo check that exp(rho_star Phi_N) has a finite
// realization mean under the prior, aborting with a diagnostic on overflow.
BoundConstants bounded_potential_constants(const measures::ParameterGrid& grid,
                                           const PotentialField& potential,
                                           const RandomPotentialEnsemble& ensemble,
                                           double c3_candidate,
                                           double p_star = std::numeric_limits<double>::infinity(),
                                           std::optional<double> rho_star = std::nullopt);

struct BoundVerification {
    double lhs = 0.0;
    double rhs = 0.0;
    double rhs_slack = 0.0;  // widening of rhs when each node mean moves up 3 stderr
};

// lhs = d_H(exact, marginal), rhs = c * || mean_m |Phi - Phi_N| ||_{L^r(prior)} with
// r = 2 p1' p3'. rhs_slack propagates 3 standard errors of each node mean through the
// (monotone) norm; checks assert lhs <= rhs + rhs_slack.
BoundVerification verify_marginal_bound(const measures::ParameterGrid& grid,
                                        const PotentialField& potential,
                                        const RandomPotentialEnsemble& ensemble,
                                        const BoundConstants& constants);

// lhs = rms of d_H(exact, sample_m), rhs = (d1 + d2) * || (mean_m |Phi - Phi_N|^2)^{1/2}
// ||_{L^2(prior)}, slack as above.
BoundVerification verify_sample_bound(const measures::ParameterGrid& grid,
                                      const PotentialField& potential,
                                      const RandomPotentialEnsemble& ensemble,
                                      const BoundConstants& constants);

}  // namespace randlik::posterior
