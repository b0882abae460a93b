#pragma once

// Randomized one-step integration of ODE initial value problems.
//
// The numerical flow is perturbed after every step with a random increment whose size
// shrinks with the step length tau: per-coordinate variance amplitude^2 * tau^{2p+1}.
// Between grid points the state is extended continuously: a partial step from the last
// grid state plus the in-step noise value at that offset (a Brownian-bridge point for
// the gaussian kind, a deterministic scaling for the uniform kind). This makes the
// solution a random surrogate whose sup-norm deviation from the true flow decays at a
// known rate, with a fully explicit constant (strong_error_bound).

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace randlik::probode {

struct OdeProblem {
    std::size_t state_dim = 0;
    // Autonomous vector field: out = f(state, param).
    std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>
        vector_field;
    // out = initial state for the given parameter.
    std::function<void(std::span<const double>, std::span<double>)> initial_state;
    double horizon = 0.0;  // T > 0

    struct LipschitzData {
        double tau_star;  // admissible step threshold, in (0, 1]
        double c_f;       // one-step flow growth constant, >= 1
    };
    std::optional<LipschitzData> lipschitz_data;

    struct TruncationData {
        double c_psi;  // one-step defect constant (>= 1); the order comes from the stepper
    };
    std::optional<TruncationData> truncation_data;

    // Closed-form solution, when one is registered: out = z(t; param).
    std::function<void(double, std::span<const double>, std::span<double>)> exact_solution;
};

// Ready-made problems used by the experiments and tests.
OdeProblem linear_decay_problem(double lambda);   // d=1, z' = lambda z, z0 = param[0], exact
OdeProblem rotation_problem();                    // d=2, z' = (z2, -z1), z0 = param, exact
OdeProblem zero_field_problem(std::size_t dim);   // z' = 0, z0 = param, exact
OdeProblem logistic_problem(double rate);         // d=1, z' = r z (1 - z), no exact registered

struct Stepper {
    enum class Kind { explicit_euler, rk4 };
    Kind kind = Kind::explicit_euler;
    // Classical convergence order q of the method (1 or 4).
    int order() const { return kind == Kind::explicit_euler ? 1 : 4; }
};

// One deterministic step of length dt from `state`; dt = 0 or f = 0 reproduce `state`.
void apply_step(const Stepper& stepper, const OdeProblem& problem, std::span<const double> state,
                std::span<const double> param, double dt, std::span<double> out);

struct NoiseProcess {
    enum class Kind { gaussian_increment, uniform_increment, zero };
    Kind kind = Kind::zero;
    double p = 1.5;         // regularity exponent, >= 1/2
    double amplitude = 0.0; // >= 0; per-step, per-coordinate variance amplitude^2 tau^{2p+1}
};

struct ObservationTimes {
    std::vector<double> times;  // strictly increasing, within [0, horizon]
};

struct RandomOdeForwardModel {
    std::shared_ptr<const OdeProblem> problem;
    Stepper stepper;
    NoiseProcess noise;
    ObservationTimes times;
    std::size_t num_steps = 1;  // N; step grid t_k = k * horizon / N
};

// Throws on inconsistent models (empty problem, bad times, tau >= tau_star when
// lipschitz data is declared, invalid noise parameters).
void validate_model(const RandomOdeForwardModel& model);

// One realization of all per-step increments, independent of the parameter, so a
// single draw can be reused across every quadrature node. Endpoint draws live in
// counter region 0 (counter = step * state_dim + coordinate) and are therefore
// unchanged when observation times are added; bridge draws live in region 1.
struct NoiseDraws {
    std::uint64_t seed = 0;
    std::size_t state_dim = 0;
    std::size_t num_steps = 0;
    std::vector<double> endpoint;  // num_steps x state_dim: xi_k(tau)
    struct Interior {
        std::size_t step;
        double offset;              // in (0, tau)
        std::vector<double> value;  // xi_step(offset)
    };
    std::vector<Interior> interior;  // ordered by (step, offset), one per interior obs time
};

NoiseDraws sample_noise(const RandomOdeForwardModel& model, std::uint64_t seed);

// Endpoint increment xi_k(tau) alone (moment diagnostics).
std::vector<double> noise_endpoint(const NoiseProcess& noise, std::size_t state_dim, double tau,
                                   std::uint64_t seed, std::size_t step);

// High-accuracy deterministic solution at the requested times: the registered closed
// form when present, otherwise rk4 with ref_steps steps, asserted insensitive to
// doubling ref_steps (relative change < 1e-8). Returns times.size() x state_dim.
std::vector<double> solve_reference(const OdeProblem& problem, std::span<const double> param,
                                    const ObservationTimes& times,
                                    std::size_t ref_steps = std::size_t{1} << 16);

// Noise-free pass with the model's own stepper and step count, sampled at the model's
// observation times (continuous extension by partial steps between grid points).
std::vector<double> solve_stepper(const RandomOdeForwardModel& model,
                                  std::span<const double> param);

// Randomized pass: solve_stepper plus the given increments. The zero noise kind is
// bitwise-identical to solve_stepper.
std::vector<double> solve_randomized(const RandomOdeForwardModel& model,
                                     std::span<const double> param, const NoiseDraws& draws);
std::vector<double> solve_randomized(const RandomOdeForwardModel& model,
                                     std::span<const double> param, std::uint64_t seed);

struct PathSample {
    std::vector<double> times;   // sorted union of the step grid and observation times
    std::vector<double> states;  // times.size() x state_dim
};

// Randomized trajectory sampled on the union of grid and observation times.
PathSample solve_randomized_path(const RandomOdeForwardModel& model,
                                 std::span<const double> param, const NoiseDraws& draws);

struct StrongErrorEstimate {
    double mean;     // Monte Carlo mean of sup_t ||reference - randomized||^n
    double stderr_;  // standard error of that mean
    std::size_t seeds;
};

// Monte Carlo estimate of E[sup ||e(t)||^n] over the grid-union-observation times;
// n in {1, 2}. Also enforces, per realization, that the stacked forward error is
// dominated by (number of observation times) x sup ||e||.
StrongErrorEstimate strong_error_estimate(const RandomOdeForwardModel& model,
                                          std::span<const double> param, int n,
                                          std::size_t num_seeds, std::uint64_t base_seed);

struct StrongErrorParams {
    double horizon;    // T
    std::size_t num_steps;  // N, must exceed horizon / tau_star
    double tau_star;
    double c_f;
    double c_psi;
    double c_xi;
    double q;  // stepper order
    double p;  // noise regularity
    int n;     // moment, >= 1
};

// Closed-form bound on E[sup ||e(t)||^n]:
//   cf(n, tau*) = ((1 + tau* 2^{n-1})^2 (1 + tau* c_f)^n - 1) / tau*
//   cbar        = 2 T max{(4 c_psi)^n, (2 c_xi)^n} exp(T cf(n, tau*))
//   bound       = 3^{n-1} ((1 + c_f tau*)^n cbar + c_psi^n tau*^n + T c_xi^n)
//                 * (T/N)^{n min(q, p - 1/2)}
double strong_error_bound(const StrongErrorParams& params);
// Same, reading every constant off the model (requires lipschitz + truncation data).
double strong_error_bound(const RandomOdeForwardModel& model, int n);

}  // namespace randlik::probode
