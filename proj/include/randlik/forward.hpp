#pragma once
// Deterministic forward maps G: parameter -> data, the Gaussian quadratic misfit
// Phi(u) = 1/2 ||Gamma^{-1/2}(G(u) - y)||^2 for diagonal Gamma, and inequality
// diagnostics relating forward-model error to misfit error.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "randlik/probode.hpp"

namespace randlik::forward {

// Diagonal Gaussian observation-noise covariance with cached reciprocals.
// c_gamma is the largest eigenvalue of Gamma^{-1}, i.e. exactly 1/min(gamma_diag).
struct NoiseModel {
    std::size_t data_dim = 0;
    std::vector<double> gamma_diag;
    std::vector<double> inv_gamma;
    std::vector<double> inv_sqrt_gamma;
    double c_gamma = 0.0;
};

NoiseModel make_noise_model(std::vector<double> gamma_diag);

// Fixed data vector y (finite entries).
struct Observation {
    std::vector<double> y;
};

Observation make_observation(std::vector<double> y);

// A total map on the parameter box. Three kinds:
//   affine:        G(u) = A u + b
//   componentwise: G(u)_j = map(j, (A u + b)_j)
//   ode_observed:  G(u) = stacked state at the observation times; num_steps == 0 uses
//                  the high-accuracy reference solve, otherwise the given stepper with
//                  num_steps steps and no noise.
struct ForwardModelSpec {
    enum class Kind { affine, componentwise, ode_observed };
    Kind kind = Kind::affine;
    std::size_t data_dim = 0;   // J
    std::size_t param_dim = 0;  // m

    std::vector<double> matrix;  // J x m, row-major (affine / componentwise)
    std::vector<double> offset;  // length J
    std::function<double(std::size_t, double)> component_map;  // componentwise only

    std::shared_ptr<const probode::OdeProblem> problem;  // ode_observed only
    probode::Stepper stepper{probode::Stepper::Kind::rk4};
    probode::ObservationTimes times;
    std::size_t num_steps = 0;
};

ForwardModelSpec affine_model(std::size_t data_dim, std::size_t param_dim,
                              std::vector<double> matrix, std::vector<double> offset);
ForwardModelSpec componentwise_model(std::size_t data_dim, std::size_t param_dim,
                                     std::vector<double> matrix, std::vector<double> offset,
                                     std::function<double(std::size_t, double)> map);
ForwardModelSpec ode_observed_model(std::shared_ptr<const probode::OdeProblem> problem,
                                    probode::ObservationTimes times, std::size_t num_steps = 0,
                                    probode::Stepper stepper = {probode::Stepper::Kind::rk4});

// Evaluates G(u); throws DomainError naming the offending input if any output entry
// is non-finite.
std::vector<double> evaluate_forward(const ForwardModelSpec& spec, std::span<const double> u);

// Phi = 1/2 sum_j residual_j^2 / gamma_j.
double quadratic_misfit(std::span<const double> residual, const NoiseModel& noise);

// Componentwise gamma_j^{-1/2} * residual_j (the whitened residual).
std::vector<double> whiten_residual(std::span<const double> residual, const NoiseModel& noise);

struct BoundPair {
    double lhs = 0.0;
    double rhs = 0.0;
};

// Pointwise misfit-error inequality: with Phi, Phi_approx the misfits of g, g_approx
// against y,
//   lhs = |Phi - Phi_approx|
//   rhs = k (sqrt(Phi) ||g - g_approx|| + ||g - g_approx||^2),
//   k   = max(2 c_gamma, sqrt(2 c_gamma)),
// and lhs <= rhs holds for every input. k equals the familiar 2 c_gamma whenever
// some gamma_j <= 2; the sqrt branch keeps the bound valid for very quiet noise.
BoundPair misfit_error_bound_check(std::span<const double> g, std::span<const double> g_approx,
                                   std::span<const double> y, const NoiseModel& noise);

// One ensemble member for the moment form of the same inequality: the exact misfit,
// one randomized misfit value, and the forward gap ||G - G_N|| of that realization.
struct MisfitSample {
    double phi = 0.0;
    double phi_approx = 0.0;
    double forward_gap = 0.0;
};

// Moment form at a fixed parameter (all phi entries must agree):
//   lhs = E[|Phi - Phi_N|^q]^{1/q}
//   rhs = 2 k (Phi^{q/2} E[gap^q] + E[gap^{2q}])^{1/q},  k as above (2 k = 4 c_gamma
// whenever some gamma_j <= 2), with expectations replaced by ensemble means.
BoundPair moment_misfit_error_check(std::span<const MisfitSample> samples, double q,
                                    const NoiseModel& noise);

}  // namespace randlik::forward
