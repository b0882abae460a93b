#include "randlik/probode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "randlik/errors.hpp"
#include "randlik/parallel.hpp"
#include "randlik/rng.hpp"

namespace randlik::probode {

namespace {

double grid_time(std::size_t k, double horizon, std::size_t num_steps) {
    return (static_cast<double>(k) * horizon) / static_cast<double>(num_steps);
}

struct Placement {
    std::size_t step;  // grid node index when offset == 0, otherwise the step containing t
    double offset;     // 0 for grid nodes, else t - t_step in (0, step width)
};

// Locates t on the step grid t_k = k*T/N. Grid hits are detected exactly so that the
// same query always resolves to the same (step, offset) pair everywhere.
Placement place_time(double t, double horizon, std::size_t num_steps) {
    if (t <= 0.0) {
        return {0, 0.0};
    }
    const double ratio = t * static_cast<double>(num_steps) / horizon;
    std::size_t k = ratio >= static_cast<double>(num_steps)
                        ? num_steps - 1
                        : static_cast<std::size_t>(ratio);
    while (k > 0 && t < grid_time(k, horizon, num_steps)) {
        --k;
    }
    while (k + 1 < num_steps && t >= grid_time(k + 1, horizon, num_steps)) {
        ++k;
    }
    if (t == grid_time(k, horizon, num_steps)) {
        return {k, 0.0};
    }
    if (t >= grid_time(k + 1, horizon, num_steps)) {
        return {k + 1, 0.0};
    }
    return {k, t - grid_time(k, horizon, num_steps)};
}

void check_problem(const OdeProblem& problem) {
    if (problem.state_dim == 0) {
        throw DomainError("ode: state_dim must be positive");
    }
    if (!problem.vector_field || !problem.initial_state) {
        throw DomainError("ode: vector_field and initial_state must be set");
    }
    if (!(problem.horizon > 0.0) || !std::isfinite(problem.horizon)) {
        throw DomainError("ode: horizon must be positive and finite");
    }
    if (problem.lipschitz_data) {
        const auto& l = *problem.lipschitz_data;
        if (!(l.tau_star > 0.0) || l.tau_star > 1.0 || !(l.c_f >= 1.0)) {
            throw DomainError("ode: lipschitz data needs tau_star in (0,1] and c_f >= 1");
        }
    }
    if (problem.truncation_data && !(problem.truncation_data->c_psi >= 1.0)) {
        throw DomainError("ode: truncation constant must be >= 1");
    }
}

void check_times(const ObservationTimes& times, double horizon) {
    double prev = -1.0;
    for (const double t : times.times) {
        if (!std::isfinite(t) || t < 0.0 || t > horizon) {
            throw DomainError("ode: observation times must lie in [0, horizon]");
        }
        if (t <= prev) {
            throw DomainError("ode: observation times must be strictly increasing");
        }
        prev = t;
    }
}

}  // namespace

void validate_model(const RandomOdeForwardModel& model) {
    if (!model.problem) {
        throw DomainError("ode: model has no problem attached");
    }
    check_problem(*model.problem);
    if (model.num_steps == 0) {
        throw DomainError("ode: num_steps must be positive");
    }
    check_times(model.times, model.problem->horizon);
    if (!(model.noise.p >= 0.5)) {
        throw DomainError("ode: noise regularity p must be >= 1/2");
    }
    if (!(model.noise.amplitude >= 0.0) || !std::isfinite(model.noise.amplitude)) {
        throw DomainError("ode: noise amplitude must be nonnegative and finite");
    }
    if (model.problem->lipschitz_data) {
        const double tau = model.problem->horizon / static_cast<double>(model.num_steps);
        if (!(tau < model.problem->lipschitz_data->tau_star)) {
            throw DomainError("ode: step " + std::to_string(tau) +
                              " must stay below the declared tau_star");
        }
    }
}

void apply_step(const Stepper& stepper, const OdeProblem& problem, std::span<const double> state,
                std::span<const double> param, double dt, std::span<double> out) {
    const std::size_t d = problem.state_dim;
    if (stepper.kind == Stepper::Kind::explicit_euler) {
        std::vector<double> k1(d);
        problem.vector_field(state, param, k1);
        for (std::size_t c = 0; c < d; ++c) {
            out[c] = state[c] + dt * k1[c];
        }
        return;
    }
    std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
    problem.vector_field(state, param, k1);
    for (std::size_t c = 0; c < d; ++c) {
        tmp[c] = state[c] + 0.5 * dt * k1[c];
    }
    problem.vector_field(tmp, param, k2);
    for (std::size_t c = 0; c < d; ++c) {
        tmp[c] = state[c] + 0.5 * dt * k2[c];
    }
    problem.vector_field(tmp, param, k3);
    for (std::size_t c = 0; c < d; ++c) {
        tmp[c] = state[c] + dt * k3[c];
    }
    problem.vector_field(tmp, param, k4);
    for (std::size_t c = 0; c < d; ++c) {
        out[c] = state[c] + (dt / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
}

std::vector<double> noise_endpoint(const NoiseProcess& noise, std::size_t state_dim, double tau,
                                   std::uint64_t seed, std::size_t step) {
    std::vector<double> out(state_dim, 0.0);
    if (noise.kind == NoiseProcess::Kind::zero || noise.amplitude == 0.0) {
        return out;
    }
    const double sd = noise.amplitude * std::pow(tau, noise.p + 0.5);
    for (std::size_t c = 0; c < state_dim; ++c) {
        const std::uint64_t ctr = static_cast<std::uint64_t>(step) * state_dim + c;
        if (noise.kind == NoiseProcess::Kind::gaussian_increment) {
            out[c] = sd * rng::gaussian(seed, 0, ctr);
        } else {
            const double u = rng::uniform01(seed, 0, ctr);
            out[c] = std::sqrt(3.0) * sd * (2.0 * u - 1.0);
        }
    }
    return out;
}

NoiseDraws sample_noise(const RandomOdeForwardModel& model, std::uint64_t seed) {
    validate_model(model);
    const std::size_t d = model.problem->state_dim;
    const std::size_t N = model.num_steps;
    const double T = model.problem->horizon;

    NoiseDraws draws;
    draws.seed = seed;
    draws.state_dim = d;
    draws.num_steps = N;
    draws.endpoint.assign(N * d, 0.0);

    const bool silent = model.noise.kind == NoiseProcess::Kind::zero ||
                        model.noise.amplitude == 0.0;
    if (!silent) {
        for (std::size_t k = 0; k < N; ++k) {
            const double tau = grid_time(k + 1, T, N) - grid_time(k, T, N);
            const std::vector<double> xi = noise_endpoint(model.noise, d, tau, seed, k);
            std::copy(xi.begin(), xi.end(), draws.endpoint.begin() + k * d);
        }
    }

    // Interior plan: one entry per observation time that falls strictly inside a step.
    for (const double t : model.times.times) {
        const Placement pl = place_time(t, T, N);
        if (pl.offset > 0.0) {
            draws.interior.push_back({pl.step, pl.offset, std::vector<double>(d, 0.0)});
        }
    }
    if (silent) {
        return draws;
    }

    if (model.noise.kind == NoiseProcess::Kind::uniform_increment) {
        // Deterministic in-step scaling of the endpoint value: xi_k(s) = (s/tau)^{p+1/2} xi_k(tau).
        for (auto& entry : draws.interior) {
            const double tau =
                grid_time(entry.step + 1, T, N) - grid_time(entry.step, T, N);
            const double scale = std::pow(entry.offset / tau, model.noise.p + 0.5);
            for (std::size_t c = 0; c < d; ++c) {
                entry.value[c] = scale * draws.endpoint[entry.step * d + c];
            }
        }
        return draws;
    }

    // Gaussian kind: Brownian-bridge points between 0 at the step start and the endpoint
    // draw, conditioned sequentially in time order; fresh randomness from counter region 1.
    std::size_t draw_index = 0;
    std::size_t i = 0;
    while (i < draws.interior.size()) {
        std::size_t j = i;
        while (j < draws.interior.size() && draws.interior[j].step == draws.interior[i].step) {
            ++j;
        }
        const std::size_t k = draws.interior[i].step;
        const double tau = grid_time(k + 1, T, N) - grid_time(k, T, N);
        const double bscale = model.noise.amplitude * std::pow(tau, model.noise.p);
        for (std::size_t c = 0; c < d; ++c) {
            const double b_end = draws.endpoint[k * d + c] / bscale;
            double prev_s = 0.0;
            double prev_b = 0.0;
            for (std::size_t e = i; e < j; ++e) {
                const double s = draws.interior[e].offset;
                const double mean = prev_b + (s - prev_s) / (tau - prev_s) * (b_end - prev_b);
                const double var = std::max((s - prev_s) * (tau - s) / (tau - prev_s), 0.0);
                const std::uint64_t ctr =
                    static_cast<std::uint64_t>(draw_index + (e - i)) * d + c;
                const double b = mean + std::sqrt(var) * rng::gaussian(seed, 1, ctr);
                draws.interior[e].value[c] = bscale * b;
                prev_s = s;
                prev_b = b;
            }
        }
        draw_index += j - i;
        i = j;
    }
    return draws;
}

namespace {

// Steps through the grid once, emitting the state at every query time (sorted
// ascending). Off-grid queries get a partial step from the last grid state plus the
// matching in-step noise value; draws == nullptr runs the plain deterministic method.
std::vector<double> integrate_at(const OdeProblem& problem, const Stepper& stepper,
                                 std::size_t num_steps, std::span<const double> param,
                                 const NoiseDraws* draws, std::span<const double> queries) {
    const std::size_t d = problem.state_dim;
    const double T = problem.horizon;
    std::vector<double> out(queries.size() * d);
    std::vector<double> state(d), next(d), partial(d);
    problem.initial_state(param, state);

    std::vector<Placement> placements(queries.size());
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        placements[qi] = place_time(queries[qi], T, num_steps);
        if (qi > 0 && queries[qi] < queries[qi - 1]) {
            throw DomainError("ode: query times must be sorted");
        }
    }

    std::size_t qi = 0;
    std::size_t ii = 0;  // cursor into draws->interior
    for (std::size_t k = 0; k <= num_steps; ++k) {
        while (qi < queries.size() && placements[qi].step == k && placements[qi].offset == 0.0) {
            std::copy(state.begin(), state.end(), out.begin() + qi * d);
            ++qi;
        }
        if (k == num_steps) {
            break;
        }
        while (qi < queries.size() && placements[qi].step == k) {
            const double s = placements[qi].offset;
            apply_step(stepper, problem, state, param, s, partial);
            if (draws != nullptr) {
                while (ii < draws->interior.size() &&
                       (draws->interior[ii].step < k ||
                        (draws->interior[ii].step == k && draws->interior[ii].offset < s))) {
                    ++ii;
                }
                if (ii >= draws->interior.size() || draws->interior[ii].step != k ||
                    draws->interior[ii].offset != s) {
                    throw DomainError("ode: noise draws do not cover an off-grid query time");
                }
                for (std::size_t c = 0; c < d; ++c) {
                    partial[c] += draws->interior[ii].value[c];
                }
            }
            std::copy(partial.begin(), partial.end(), out.begin() + qi * d);
            ++qi;
        }
        const double tau = grid_time(k + 1, T, num_steps) - grid_time(k, T, num_steps);
        apply_step(stepper, problem, state, param, tau, next);
        if (draws != nullptr) {
            for (std::size_t c = 0; c < d; ++c) {
                next[c] += draws->endpoint[k * d + c];
            }
        }
        state.swap(next);
    }
    return out;
}

std::vector<double> exact_at(const OdeProblem& problem, std::span<const double> param,
                             std::span<const double> queries) {
    const std::size_t d = problem.state_dim;
    std::vector<double> out(queries.size() * d);
    std::vector<double> tmp(d);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        problem.exact_solution(queries[qi], param, tmp);
        std::copy(tmp.begin(), tmp.end(), out.begin() + qi * d);
    }
    return out;
}

}  // namespace

std::vector<double> solve_reference(const OdeProblem& problem, std::span<const double> param,
                                    const ObservationTimes& times, std::size_t ref_steps) {
    check_problem(problem);
    check_times(times, problem.horizon);
    if (problem.exact_solution) {
        return exact_at(problem, param, times.times);
    }
    const Stepper rk4{Stepper::Kind::rk4};
    std::vector<double> coarse =
        integrate_at(problem, rk4, ref_steps, param, nullptr, times.times);
    std::vector<double> fine =
        integrate_at(problem, rk4, 2 * ref_steps, param, nullptr, times.times);
    double scale = 1.0;
    for (const double v : coarse) {
        scale = std::max(scale, std::abs(v));
    }
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        if (std::abs(coarse[i] - fine[i]) >= 1e-8 * scale) {
            throw Error("solve_reference: reference solve is not converged; "
                        "register a closed-form solution or raise ref_steps");
        }
    }
    return coarse;
}

std::vector<double> solve_stepper(const RandomOdeForwardModel& model,
                                  std::span<const double> param) {
    validate_model(model);
    return integrate_at(*model.problem, model.stepper, model.num_steps, param, nullptr,
                        model.times.times);
}

std::vector<double> solve_randomized(const RandomOdeForwardModel& model,
                                     std::span<const double> param, const NoiseDraws& draws) {
    validate_model(model);
    if (draws.state_dim != model.problem->state_dim || draws.num_steps != model.num_steps) {
        throw DimensionError("solve_randomized: draws do not match the model");
    }
    if (model.noise.kind == NoiseProcess::Kind::zero) {
        // Structurally identical to the deterministic pass, bit for bit.
        return integrate_at(*model.problem, model.stepper, model.num_steps, param, nullptr,
                            model.times.times);
    }
    return integrate_at(*model.problem, model.stepper, model.num_steps, param, &draws,
                        model.times.times);
}

std::vector<double> solve_randomized(const RandomOdeForwardModel& model,
                                     std::span<const double> param, std::uint64_t seed) {
    return solve_randomized(model, param, sample_noise(model, seed));
}

namespace {

std::vector<double> union_times(const RandomOdeForwardModel& model) {
    std::vector<double> times;
    times.reserve(model.num_steps + 1 + model.times.times.size());
    for (std::size_t k = 0; k <= model.num_steps; ++k) {
        times.push_back(grid_time(k, model.problem->horizon, model.num_steps));
    }
    times.insert(times.end(), model.times.times.begin(), model.times.times.end());
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
}

}  // namespace

PathSample solve_randomized_path(const RandomOdeForwardModel& model,
                                 std::span<const double> param, const NoiseDraws& draws) {
    validate_model(model);
    PathSample path;
    path.times = union_times(model);
    const NoiseDraws* use =
        model.noise.kind == NoiseProcess::Kind::zero ? nullptr : &draws;
    path.states = integrate_at(*model.problem, model.stepper, model.num_steps, param, use,
                               path.times);
    return path;
}

StrongErrorEstimate strong_error_estimate(const RandomOdeForwardModel& model,
                                          std::span<const double> param, int n,
                                          std::size_t num_seeds, std::uint64_t base_seed) {
    validate_model(model);
    if (n != 1 && n != 2) {
        throw DomainError("strong_error_estimate: moment n must be 1 or 2");
    }
    if (num_seeds < 2) {
        throw DomainError("strong_error_estimate: need at least 2 seeds");
    }
    const std::size_t d = model.problem->state_dim;
    const std::vector<double> times = union_times(model);
    ObservationTimes all{times};
    const std::vector<double> reference = solve_reference(*model.problem, param, all);

    // Positions of the model's observation times inside the union grid.
    std::vector<std::size_t> obs_pos;
    obs_pos.reserve(model.times.times.size());
    for (const double t : model.times.times) {
        const auto it = std::lower_bound(times.begin(), times.end(), t);
        obs_pos.push_back(static_cast<std::size_t>(it - times.begin()));
    }

    std::vector<double> sup_pow(num_seeds);
    parallel_for(0, num_seeds, [&](std::size_t s) {
        const NoiseDraws draws = sample_noise(model, rng::derive_seed(base_seed, s));
        const std::vector<double> z =
            integrate_at(*model.problem, model.stepper, model.num_steps, param,
                         model.noise.kind == NoiseProcess::Kind::zero ? nullptr : &draws, times);
        double sup = 0.0;
        for (std::size_t qi = 0; qi < times.size(); ++qi) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double e = reference[qi * d + c] - z[qi * d + c];
                acc += e * e;
            }
            sup = std::max(sup, std::sqrt(acc));
        }
        // The stacked forward error never exceeds (number of observations) x sup.
        double gap_sq = 0.0;
        for (const std::size_t pos : obs_pos) {
            for (std::size_t c = 0; c < d; ++c) {
                const double e = reference[pos * d + c] - z[pos * d + c];
                gap_sq += e * e;
            }
        }
        const double allowed = static_cast<double>(std::max<std::size_t>(obs_pos.size(), 1)) * sup;
        if (std::sqrt(gap_sq) > allowed * (1.0 + 1e-12) + 1e-300) {
            throw Error("strong_error_estimate: forward-gap domination violated");
        }
        sup_pow[s] = n == 1 ? sup : sup * sup;
    });

    double mean = 0.0;
    for (const double v : sup_pow) {
        mean += v;
    }
    mean /= static_cast<double>(num_seeds);
    double var = 0.0;
    for (const double v : sup_pow) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(num_seeds - 1);
    return StrongErrorEstimate{mean, std::sqrt(var / static_cast<double>(num_seeds)),
                               num_seeds};
}

double strong_error_bound(const StrongErrorParams& params) {
    if (params.n < 1) {
        throw DomainError("strong_error_bound: moment n must be >= 1");
    }
    if (!(params.horizon > 0.0) || !(params.tau_star > 0.0) || params.tau_star > 1.0) {
        throw DomainError("strong_error_bound: need horizon > 0 and tau_star in (0, 1]");
    }
    if (!(params.c_f >= 1.0) || !(params.c_psi >= 1.0) || !(params.c_xi >= 0.0)) {
        throw DomainError("strong_error_bound: need c_f >= 1, c_psi >= 1, c_xi >= 0");
    }
    if (!(params.p >= 0.5) || !(params.q >= 1.0)) {
        throw DomainError("strong_error_bound: need p >= 1/2 and q >= 1");
    }
    const double N = static_cast<double>(params.num_steps);
    if (!(N > params.horizon / params.tau_star)) {
        throw DomainError("strong_error_bound: requires num_steps > horizon / tau_star");
    }
    const double n = static_cast<double>(params.n);
    const double T = params.horizon;
    const double lane = 1.0 + params.tau_star * std::pow(2.0, n - 1.0);
    const double cf_n =
        (lane * lane * std::pow(1.0 + params.tau_star * params.c_f, n) - 1.0) / params.tau_star;
    const double cbar = 2.0 * T *
                        std::max(std::pow(4.0 * params.c_psi, n), std::pow(2.0 * params.c_xi, n)) *
                        std::exp(T * cf_n);
    const double rate = n * std::min(params.q, params.p - 0.5);
    return std::pow(3.0, n - 1.0) *
           (std::pow(1.0 + params.c_f * params.tau_star, n) * cbar +
            std::pow(params.c_psi, n) * std::pow(params.tau_star, n) +
            T * std::pow(params.c_xi, n)) *
           std::pow(T / N, rate);
}

double strong_error_bound(const RandomOdeForwardModel& model, int n) {
    validate_model(model);
    if (!model.problem->lipschitz_data || !model.problem->truncation_data) {
        throw DomainError("strong_error_bound: model must declare lipschitz and truncation data");
    }
    StrongErrorParams params;
    params.horizon = model.problem->horizon;
    params.num_steps = model.num_steps;
    params.tau_star = model.problem->lipschitz_data->tau_star;
    params.c_f = model.problem->lipschitz_data->c_f;
    params.c_psi = model.problem->truncation_data->c_psi;
    params.c_xi = model.noise.amplitude;
    params.q = static_cast<double>(model.stepper.order());
    params.p = model.noise.p;
    params.n = n;
    return strong_error_bound(params);
}

OdeProblem linear_decay_problem(double lambda) {
    OdeProblem prob;
    prob.state_dim = 1;
    prob.horizon = 1.0;
    prob.vector_field = [lambda](std::span<const double> z, std::span<const double>,
                                 std::span<double> out) { out[0] = lambda * z[0]; };
    prob.initial_state = [](std::span<const double> u, std::span<double> out) { out[0] = u[0]; };
    prob.exact_solution = [lambda](double t, std::span<const double> u, std::span<double> out) {
        out[0] = u[0] * std::exp(lambda * t);
    };
    return prob;
}

OdeProblem rotation_problem() {
    OdeProblem prob;
    prob.state_dim = 2;
    prob.horizon = 1.0;
    prob.vector_field = [](std::span<const double> z, std::span<const double>,
                           std::span<double> out) {
        out[0] = z[1];
        out[1] = -z[0];
    };
    prob.initial_state = [](std::span<const double> u, std::span<double> out) {
        out[0] = u[0];
        out[1] = u[1];
    };
    prob.exact_solution = [](double t, std::span<const double> u, std::span<double> out) {
        out[0] = u[0] * std::cos(t) + u[1] * std::sin(t);
        out[1] = u[1] * std::cos(t) - u[0] * std::sin(t);
    };
    return prob;
}

OdeProblem zero_field_problem(std::size_t dim) {
    OdeProblem prob;
    prob.state_dim = dim;
    prob.horizon = 1.0;
    prob.vector_field = [dim](std::span<const double>, std::span<const double>,
                              std::span<double> out) {
        for (std::size_t c = 0; c < dim; ++c) {
            out[c] = 0.0;
        }
    };
    prob.initial_state = [dim](std::span<const double> u, std::span<double> out) {
        for (std::size_t c = 0; c < dim; ++c) {
            out[c] = u[c];
        }
    };
    prob.exact_solution = [dim](double, std::span<const double> u, std::span<double> out) {
        for (std::size_t c = 0; c < dim; ++c) {
            out[c] = u[c];
        }
    };
    return prob;
}

OdeProblem logistic_problem(double rate) {
    OdeProblem prob;
    prob.state_dim = 1;
    prob.horizon = 1.0;
    prob.vector_field = [rate](std::span<const double> z, std::span<const double>,
                               std::span<double> out) { out[0] = rate * z[0] * (1.0 - z[0]); };
    prob.initial_state = [](std::span<const double> u, std::span<double> out) { out[0] = u[0]; };
    // No exact solution registered on purpose: exercises the high-accuracy fallback.
    return prob;
}

}  // namespace randlik::probode
