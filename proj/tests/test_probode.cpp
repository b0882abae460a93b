#include "doctest.h"

#include "randlik/errors.hpp"
#include "randlik/probode.hpp"
#include "randlik/rng.hpp"

#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

namespace {

namespace po = randlik::probode;

po::RandomOdeForwardModel make_model(po::OdeProblem problem, po::Stepper::Kind stepper,
                                     po::NoiseProcess noise, std::vector<double> times,
                                     std::size_t num_steps) {
    po::RandomOdeForwardModel model;
    model.problem = std::make_shared<const po::OdeProblem>(std::move(problem));
    model.stepper = po::Stepper{stepper};
    model.noise = noise;
    model.times.times = std::move(times);
    model.num_steps = num_steps;
    return model;
}

constexpr po::NoiseProcess kNoNoise{po::NoiseProcess::Kind::zero, 1.5, 0.0};

} // namespace

TEST_SUITE("probode") {

TEST_CASE("euler and rk4 steps match hand-computed values") {
    const auto prob = po::linear_decay_problem(-1.0);
    const std::vector<double> param = {1.0};
    const std::vector<double> state = {1.0};
    std::vector<double> out(1);

    po::apply_step(po::Stepper{po::Stepper::Kind::explicit_euler}, prob, state, param, 0.25, out);
    CHECK(out[0] == 0.75);

    // On a linear field rk4 is the degree-4 Taylor polynomial of exp.
    po::apply_step(po::Stepper{po::Stepper::Kind::rk4}, prob, state, param, 0.1, out);
    CHECK(out[0] == doctest::Approx(0.9048375).epsilon(1e-14));

    // dt = 0 reproduces the state for both methods.
    po::apply_step(po::Stepper{po::Stepper::Kind::rk4}, prob, state, param, 0.0, out);
    CHECK(out[0] == 1.0);
}

TEST_CASE("zero vector field leaves the initial state untouched") {
    auto model = make_model(po::zero_field_problem(3), po::Stepper::Kind::rk4, kNoNoise,
                            {0.25, 0.7, 1.0}, 5);
    const std::vector<double> param = {1.5, -2.0, 0.25};
    const auto out = po::solve_stepper(model, param);
    REQUIRE(out.size() == 9);
    for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(out[q * 3 + c] == param[c]);
        }
    }
}

TEST_CASE("rk4 reproduces exponential decay to high accuracy") {
    auto model = make_model(po::linear_decay_problem(-1.0), po::Stepper::Kind::rk4, kNoNoise,
                            {1.0}, 64);
    const auto out = po::solve_stepper(model, std::vector<double>{1.0});
    CHECK(std::fabs(out[0] - std::exp(-1.0)) <= 1e-8);
}

TEST_CASE("continuous extension takes a partial step from the last grid state") {
    auto model = make_model(po::linear_decay_problem(-1.0), po::Stepper::Kind::explicit_euler,
                            kNoNoise, {0.75}, 2);
    // Euler with tau = 1/2 from z0 = 2: z(0.5) = 1; partial step of 0.25: 0.75.
    const auto out = po::solve_stepper(model, std::vector<double>{2.0});
    CHECK(out[0] == 0.75);
}

TEST_CASE("reference solve returns the registered closed form") {
    const auto prob = po::rotation_problem();
    const std::vector<double> param = {1.0, 0.0};
    po::ObservationTimes times{{0.25, 1.0}};
    const auto out = po::solve_reference(prob, param, times);
    REQUIRE(out.size() == 4);
    CHECK(out[0] == std::cos(0.25));
    CHECK(out[1] == -std::sin(0.25));
    CHECK(out[2] == std::cos(1.0));
    CHECK(out[3] == -std::sin(1.0));
}

TEST_CASE("reference solve falls back to a converged fine integration") {
    // Logistic growth has no registered closed form; compare against the analytic
    // solution z(t) = z0 / (z0 + (1 - z0) exp(-r t)).
    const double r = 1.3;
    const double z0 = 0.2;
    const auto prob = po::logistic_problem(r);
    po::ObservationTimes times{{0.4, 1.0}};
    const auto out = po::solve_reference(prob, std::vector<double>{z0}, times);
    for (std::size_t q = 0; q < 2; ++q) {
        const double t = times.times[q];
        const double expect = z0 / (z0 + (1.0 - z0) * std::exp(-r * t));
        CHECK(out[q] == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("model validation rejects inconsistent setups") {
    const auto good = [] {
        return make_model(po::linear_decay_problem(-1.0), po::Stepper::Kind::explicit_euler,
                          kNoNoise, {1.0}, 8);
    };
    {
        auto m = good();
        m.num_steps = 0;
        CHECK_THROWS_AS(po::validate_model(m), randlik::DomainError);
    }
    {
        auto m = good();
        m.times.times = {0.5, 0.5};
        CHECK_THROWS_AS(po::validate_model(m), randlik::DomainError);
    }
    {
        auto m = good();
        m.times.times = {1.5};
        CHECK_THROWS_AS(po::validate_model(m), randlik::DomainError);
    }
    {
        auto m = good();
        m.noise = po::NoiseProcess{po::NoiseProcess::Kind::gaussian_increment, 0.4, 1.0};
        CHECK_THROWS_AS(po::validate_model(m), randlik::DomainError);
    }
    {
        auto m = good();
        m.noise = po::NoiseProcess{po::NoiseProcess::Kind::gaussian_increment, 1.5, -1.0};
        CHECK_THROWS_AS(po::validate_model(m), randlik::DomainError);
    }
    {
        // Declared admissible-step threshold: tau = 1/3 >= tau_star = 0.3.
        auto prob = po::linear_decay_problem(-1.0);
        prob.lipschitz_data = po::OdeProblem::LipschitzData{0.3, 2.0};
        auto m = make_model(std::move(prob), po::Stepper::Kind::explicit_euler, kNoNoise,
                            {1.0}, 3);
        CHECK_THROWS_AS(po::validate_model(m), randlik::DomainError);
        m.num_steps = 4;
        CHECK_NOTHROW(po::validate_model(m));
    }
}

TEST_CASE("zero noise solves are bitwise identical to the deterministic pass") {
    auto model = make_model(po::logistic_problem(1.3), po::Stepper::Kind::explicit_euler,
                            kNoNoise, {0.15, 0.5, 1.0}, 7);
    const std::vector<double> param = {0.2};
    const auto det = po::solve_stepper(model, param);
    const auto rand = po::solve_randomized(model, param, std::uint64_t{9001});
    REQUIRE(det.size() == rand.size());
    for (std::size_t i = 0; i < det.size(); ++i) {
        CHECK(det[i] == rand[i]);
    }

    // Amplitude zero behaves the same even under a nonzero noise kind.
    model.noise = po::NoiseProcess{po::NoiseProcess::Kind::gaussian_increment, 1.5, 0.0};
    const auto rand0 = po::solve_randomized(model, param, std::uint64_t{9001});
    for (std::size_t i = 0; i < det.size(); ++i) {
        CHECK(det[i] == rand0[i]);
    }
}

TEST_CASE("endpoint increments have the advertised variance") {
    const double tau = 0.25;
    const std::size_t draws = 100000;
    for (const auto kind : {po::NoiseProcess::Kind::gaussian_increment,
                            po::NoiseProcess::Kind::uniform_increment}) {
        const po::NoiseProcess noise{kind, 1.5, 0.8};
        double sum = 0.0;
        double sumsq = 0.0;
        for (std::size_t i = 0; i < draws; ++i) {
            const auto xi =
                po::noise_endpoint(noise, 1, tau, randlik::rng::derive_seed(17, i), 0);
            sum += xi[0];
            sumsq += xi[0] * xi[0];
        }
        const double n = static_cast<double>(draws);
        const double mean = sum / n;
        const double var = sumsq / n - mean * mean;
        // Var = amplitude^2 tau^{2p+1} = 0.64 * 0.25^4.
        const double expect = 0.64 * std::pow(tau, 4.0);
        CAPTURE(static_cast<int>(kind));
        CHECK(mean == doctest::Approx(0.0).epsilon(1.0).scale(3.0 * std::sqrt(expect / n)));
        CHECK(var == doctest::Approx(expect).epsilon(0.05));
    }
}

TEST_CASE("noise variance accumulates additively along the walk") {
    // Zero vector field: the state at T is the sum of the per-step increments.
    const po::NoiseProcess noise{po::NoiseProcess::Kind::gaussian_increment, 1.5, 0.8};
    auto model = make_model(po::zero_field_problem(1), po::Stepper::Kind::explicit_euler,
                            noise, {1.0}, 4);
    const std::size_t draws = 100000;
    double sum = 0.0;
    double sumsq = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        const auto z = po::solve_randomized(model, std::vector<double>{0.0},
                                            randlik::rng::derive_seed(23, i));
        sum += z[0];
        sumsq += z[0] * z[0];
    }
    const double n = static_cast<double>(draws);
    const double var = sumsq / n - (sum / n) * (sum / n);
    // 4 steps of tau = 1/4: Var = 4 * 0.64 * 0.25^4.
    CHECK(var == doctest::Approx(4.0 * 0.64 * std::pow(0.25, 4.0)).epsilon(0.05));
}

TEST_CASE("uniform in-step noise is a deterministic scaling of the endpoint") {
    const po::NoiseProcess noise{po::NoiseProcess::Kind::uniform_increment, 1.2, 0.5};
    auto model = make_model(po::zero_field_problem(2), po::Stepper::Kind::explicit_euler,
                            noise, {0.3}, 2); // 0.3 sits inside step 0 of width 0.5
    const auto draws = po::sample_noise(model, 314);
    REQUIRE(draws.interior.size() == 1);
    CHECK(draws.interior[0].step == 0);
    const double tau = 0.5;
    const double scale = std::pow(draws.interior[0].offset / tau, noise.p + 0.5);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(draws.interior[0].value[c] == scale * draws.endpoint[c]);
    }
}

TEST_CASE("gaussian in-step noise has the brownian marginal variance") {
    const double tau = 0.5;
    const double s = 0.2;
    const po::NoiseProcess noise{po::NoiseProcess::Kind::gaussian_increment, 1.5, 0.8};
    auto model = make_model(po::zero_field_problem(1), po::Stepper::Kind::explicit_euler,
                            noise, {s}, 2);
    const std::size_t draws_n = 100000;
    double sum = 0.0;
    double sumsq = 0.0;
    for (std::size_t i = 0; i < draws_n; ++i) {
        const auto draws = po::sample_noise(model, randlik::rng::derive_seed(29, i));
        const double v = draws.interior[0].value[0];
        sum += v;
        sumsq += v * v;
    }
    const double n = static_cast<double>(draws_n);
    const double var = sumsq / n - (sum / n) * (sum / n);
    // Unconditionally xi(s) ~ N(0, amplitude^2 tau^{2p} s) = N(0, 0.64 * 0.125 * 0.2).
    CHECK(var == doctest::Approx(0.64 * std::pow(tau, 3.0) * s).epsilon(0.05));

    // The solved state at the interior time is exactly that noise value (zero field,
    // zero initial state).
    const auto d0 = po::sample_noise(model, 5150);
    const auto z = po::solve_randomized(model, std::vector<double>{0.0}, d0);
    CHECK(z[0] == d0.interior[0].value[0]);
}

TEST_CASE("randomized path walks the union of grid and observation times") {
    const po::NoiseProcess noise{po::NoiseProcess::Kind::gaussian_increment, 1.5, 0.7};
    auto model = make_model(po::zero_field_problem(1), po::Stepper::Kind::explicit_euler,
                            noise, {0.2}, 2);
    const auto draws = po::sample_noise(model, 2718);
    const auto path = po::solve_randomized_path(model, std::vector<double>{0.0}, draws);
    REQUIRE(path.times.size() == 4);
    CHECK(path.times[0] == 0.0);
    CHECK(path.times[1] == 0.2);
    CHECK(path.times[2] == 0.5);
    CHECK(path.times[3] == 1.0);
    CHECK(path.states[0] == 0.0);
    CHECK(path.states[1] == draws.interior[0].value[0]);
    CHECK(path.states[2] == draws.endpoint[0]);
    CHECK(path.states[3] == draws.endpoint[0] + draws.endpoint[1]);
}

TEST_CASE("strong error of a zero-noise model is the deterministic error") {
    auto model = make_model(po::linear_decay_problem(-1.0), po::Stepper::Kind::explicit_euler,
                            kNoNoise, {0.6}, 8);
    const std::vector<double> param = {1.0};
    const auto est = po::strong_error_estimate(model, param, 1, 4, 99);
    CHECK(est.stderr_ == 0.0);
    CHECK(est.seeds == 4);

    // Recompute sup_t |e^{-t} - euler(t)| over the union grid from the public pieces.
    const auto path = po::solve_randomized_path(model, param, po::sample_noise(model, 1));
    double sup = 0.0;
    for (std::size_t q = 0; q < path.times.size(); ++q) {
        sup = std::max(sup, std::fabs(std::exp(-path.times[q]) - path.states[q]));
    }
    CHECK(est.mean == doctest::Approx(sup).epsilon(1e-15));
}

TEST_CASE("deterministic stepper orders are the classical ones") {
    const std::vector<double> param = {1.0};
    const auto error_at = [&](po::Stepper::Kind kind, std::size_t n) {
        auto model = make_model(po::linear_decay_problem(-1.0), kind, kNoNoise, {1.0}, n);
        return po::strong_error_estimate(model, param, 1, 2, 5).mean;
    };
    const double euler_order = std::log2(error_at(po::Stepper::Kind::explicit_euler, 16) /
                                         error_at(po::Stepper::Kind::explicit_euler, 32));
    CHECK(euler_order == doctest::Approx(1.0).epsilon(0.12));
    const double rk4_order = std::log2(error_at(po::Stepper::Kind::rk4, 4) /
                                       error_at(po::Stepper::Kind::rk4, 8));
    CHECK(rk4_order == doctest::Approx(4.0).epsilon(0.08));
}

TEST_CASE("strong error estimate validates its arguments") {
    auto model = make_model(po::linear_decay_problem(-1.0), po::Stepper::Kind::explicit_euler,
                            kNoNoise, {1.0}, 8);
    CHECK_THROWS_AS(po::strong_error_estimate(model, std::vector<double>{1.0}, 3, 4, 1),
                    randlik::DomainError);
    CHECK_THROWS_AS(po::strong_error_estimate(model, std::vector<double>{1.0}, 1, 1, 1),
                    randlik::DomainError);
}

TEST_CASE("strong error bound double-entry value") {
    po::StrongErrorParams params;
    params.horizon = 1.0;
    params.num_steps = 10;
    params.tau_star = 0.5;
    params.c_f = 1.0;
    params.c_psi = 1.0;
    params.c_xi = 1.0;
    params.q = 1.0;
    params.p = 1.5;
    params.n = 1;
    // cf = ((1 + 0.5)^2 (1 + 0.5) - 1) / 0.5 = 4.75; cbar = 8 e^{4.75};
    // bound = (1.5 * 8 e^{4.75} + 0.5 + 1) * 0.1.
    CHECK(po::strong_error_bound(params)
          == doctest::Approx(1.2 * std::exp(4.75) + 0.15).epsilon(1e-12));
}

TEST_CASE("strong error bound decays at the advertised rate in N") {
    po::StrongErrorParams params;
    params.horizon = 1.0;
    params.num_steps = 8;
    params.tau_star = 0.4;
    params.c_f = 1.3;
    params.c_psi = 1.1;
    params.c_xi = 0.9;
    params.q = 1.0;
    params.p = 1.2;
    params.n = 2;
    const double rate = 2.0 * std::min(params.q, params.p - 0.5); // 1.4
    const double b8 = po::strong_error_bound(params);
    params.num_steps = 16;
    const double b16 = po::strong_error_bound(params);
    CHECK(b16 / b8 == doctest::Approx(std::pow(0.5, rate)).epsilon(1e-12));
}

TEST_CASE("strong error bound validates its constants") {
    po::StrongErrorParams params;
    params.horizon = 1.0;
    params.num_steps = 10;
    params.tau_star = 0.5;
    params.c_f = 1.0;
    params.c_psi = 1.0;
    params.c_xi = 1.0;
    params.q = 1.0;
    params.p = 1.5;
    params.n = 1;

    auto bad = params;
    bad.tau_star = 1.5;
    CHECK_THROWS_AS(po::strong_error_bound(bad), randlik::DomainError);
    bad = params;
    bad.c_psi = 0.5;
    CHECK_THROWS_AS(po::strong_error_bound(bad), randlik::DomainError);
    bad = params;
    bad.p = 0.4;
    CHECK_THROWS_AS(po::strong_error_bound(bad), randlik::DomainError);
    bad = params;
    bad.num_steps = 2; // violates N > T / tau_star
    CHECK_THROWS_AS(po::strong_error_bound(bad), randlik::DomainError);
    bad = params;
    bad.n = 0;
    CHECK_THROWS_AS(po::strong_error_bound(bad), randlik::DomainError);

    // The model overload needs the declared constants.
    auto model = make_model(po::linear_decay_problem(-1.0), po::Stepper::Kind::explicit_euler,
                            kNoNoise, {1.0}, 10);
    CHECK_THROWS_AS(po::strong_error_bound(model, 1), randlik::DomainError);
}

TEST_CASE("empirical strong error sits below the closed-form bound") {
    auto prob = po::linear_decay_problem(-1.0);
    prob.lipschitz_data = po::OdeProblem::LipschitzData{0.5, 1.0};
    prob.truncation_data = po::OdeProblem::TruncationData{1.0};
    const po::NoiseProcess noise{po::NoiseProcess::Kind::gaussian_increment, 1.5, 1.0};
    for (const std::size_t n : {std::size_t{8}, std::size_t{32}}) {
        auto model = make_model(prob, po::Stepper::Kind::explicit_euler, noise, {1.0}, n);
        const auto est = po::strong_error_estimate(model, std::vector<double>{1.0}, 1, 200, 7);
        const double bound = po::strong_error_bound(model, 1);
        CAPTURE(n);
        CHECK(est.mean + 3.0 * est.stderr_ <= bound);
    }
}

} // TEST_SUITE
