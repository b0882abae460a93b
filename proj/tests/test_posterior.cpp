#include "doctest.h"

#include "randlik/errors.hpp"
#include "randlik/forward.hpp"
#include "randlik/posterior.hpp"
#include "randlik/randmisfit.hpp"
#include "randlik/rng.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace {

namespace ms = randlik::measures;
namespace ps = randlik::posterior;
namespace fw = randlik::forward;
namespace rm = randlik::randmisfit;

ms::ParameterGrid unit_interval_grid(std::size_t pts) {
    const double lo[] = {0.0};
    const double hi[] = {1.0};
    const std::size_t n[] = {pts};
    return ms::build_grid(lo, hi, n, ms::PriorSpec::uniform());
}

} // namespace

TEST_SUITE("posterior") {

TEST_CASE("zero potential gives the prior back") {
    const auto grid = unit_interval_grid(9);
    const auto potential = ps::make_potential_field(grid, std::vector<double>(9, 0.0));
    const auto field = ps::exact_posterior(grid, potential);
    for (const double v : field.values) {
        CHECK(v == 1.0);
    }
    CHECK(field.norm_const == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(field.normalizer() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(field.log_offset == 0.0);
}

TEST_CASE("constant potential shifts the normalizer only") {
    const auto grid = unit_interval_grid(7);
    const double c = 2.75;
    const auto potential = ps::make_potential_field(grid, std::vector<double>(7, c));
    const auto field = ps::exact_posterior(grid, potential);
    for (const double v : field.values) {
        CHECK(v == 1.0); // exp(shift - phi) with shift = c
    }
    CHECK(field.log_offset == c);
    CHECK(field.normalizer() == doctest::Approx(std::exp(-c)).epsilon(1e-14));

    // The posterior itself is still uniform: distance zero to the flat field.
    const auto flat =
        ps::exact_posterior(grid, ps::make_potential_field(grid, std::vector<double>(7, 0.0)));
    CHECK(ms::hellinger(grid, field, flat) == 0.0);
}

TEST_CASE("symmetric quadratic potential centers the posterior mean") {
    const auto grid = unit_interval_grid(101);
    const auto noise = fw::make_noise_model({0.05});
    std::vector<double> phi(101);
    for (std::size_t i = 0; i < 101; ++i) {
        const double r = grid.node(i)[0] - 0.5;
        phi[i] = fw::quadratic_misfit(std::vector<double>{r}, noise);
    }
    const auto field = ps::exact_posterior(grid, ps::make_potential_field(grid, phi));
    const double mean =
        ms::expectation(grid, field, [](std::span<const double> u) { return u[0]; });
    CHECK(mean == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("potential and ensemble validation") {
    const auto grid = unit_interval_grid(5);
    CHECK_THROWS_AS(ps::make_potential_field(grid, {1.0, 2.0}), randlik::DimensionError);
    CHECK_THROWS_AS(
        ps::make_potential_field(grid, {1.0, 2.0, std::nan(""), 0.0, 0.0}),
        randlik::DomainError);

    CHECK_THROWS_AS(ps::make_ensemble(grid, 0, {}, {}), randlik::DimensionError);
    CHECK_THROWS_AS(ps::make_ensemble(grid, 2, std::vector<double>(5, 0.0), {}),
                    randlik::DimensionError);
    CHECK_THROWS_AS(
        ps::make_ensemble(grid, 1, std::vector<double>(5, 0.0), {1, 2}),
        randlik::DimensionError);
    CHECK_THROWS_AS(
        ps::make_ensemble(grid, 1000000000000000000ull, {}, {}),
        randlik::CapacityError);
    std::vector<double> bad(10, 0.0);
    bad[7] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ps::make_ensemble(grid, 2, bad, {}), randlik::DomainError);
}

TEST_CASE("three-node marginal posterior matches the hand formula") {
    const auto grid = unit_interval_grid(3); // weights {0.25, 0.5, 0.25}
    const std::vector<double> row0 = {0.2, 1.1, 0.6};
    const std::vector<double> row1 = {0.5, 0.8, 1.4};
    std::vector<double> stacked = row0;
    stacked.insert(stacked.end(), row1.begin(), row1.end());
    const auto ensemble = ps::make_ensemble(grid, 2, stacked, {11, 12});
    const auto marginal = ps::marginal_posterior(grid, ensemble);

    std::vector<double> hand(3);
    double hand_z = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        hand[i] = 0.5 * (std::exp(-row0[i]) + std::exp(-row1[i]));
        hand_z += grid.weights[i] * hand[i];
    }
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(marginal.values[i] / marginal.norm_const
              == doctest::Approx(hand[i] / hand_z).epsilon(1e-14));
    }
    CHECK(marginal.normalizer() == doctest::Approx(hand_z).epsilon(1e-14));
}

TEST_CASE("single-realization marginal is bitwise the sample posterior") {
    const auto grid = unit_interval_grid(11);
    std::vector<double> row(11);
    for (std::size_t i = 0; i < 11; ++i) {
        row[i] = 2.0 * randlik::rng::uniform01(64, 0, i) - 0.3;
    }
    const auto ensemble = ps::make_ensemble(grid, 1, row, {});
    const auto marginal = ps::marginal_posterior(grid, ensemble);
    const auto sample = ps::sample_posterior(grid, row);

    REQUIRE(marginal.values.size() == sample.values.size());
    for (std::size_t i = 0; i < 11; ++i) {
        CHECK(marginal.values[i] == sample.values[i]);
    }
    CHECK(marginal.norm_const == sample.norm_const);
    CHECK(marginal.log_offset == sample.log_offset);
    CHECK(ms::hellinger(grid, marginal, sample) == 0.0);
}

TEST_CASE("rms hellinger over an ensemble matches per-realization distances") {
    const auto grid = unit_interval_grid(15);
    std::vector<double> phi(15);
    for (std::size_t i = 0; i < 15; ++i) {
        phi[i] = randlik::rng::uniform01(65, 0, i);
    }
    const auto potential = ps::make_potential_field(grid, phi);
    const auto exact = ps::exact_posterior(grid, potential);

    std::vector<double> stacked(2 * 15);
    for (std::size_t i = 0; i < 2 * 15; ++i) {
        stacked[i] = randlik::rng::uniform01(65, 1, i) * 1.5;
    }
    const auto ensemble = ps::make_ensemble(grid, 2, stacked, {});
    const auto rms = ps::mean_square_hellinger(grid, exact, ensemble);

    const double d0 = ps::hellinger_to_exact(
        grid, exact, ps::sample_posterior(grid, ensemble.realization(0, 15)));
    const double d1 = ps::hellinger_to_exact(
        grid, exact, ps::sample_posterior(grid, ensemble.realization(1, 15)));
    CHECK(rms.rms == doctest::Approx(std::sqrt(0.5 * (d0 * d0 + d1 * d1))).epsilon(1e-14));
    const double se_mean = 0.5 * std::fabs(d0 * d0 - d1 * d1);
    CHECK(rms.stderr_ == doctest::Approx(se_mean / (2.0 * rms.rms)).epsilon(1e-12));

    const auto single = ps::make_ensemble(grid, 1, std::vector<double>(stacked.begin(),
                                                                       stacked.begin() + 15),
                                          {});
    CHECK_THROWS_AS(ps::mean_square_hellinger(grid, exact, single), randlik::DomainError);
}

TEST_CASE("identical realizations collapse every diagnostic to zero") {
    const auto grid = unit_interval_grid(13);
    std::vector<double> phi(13);
    for (std::size_t i = 0; i < 13; ++i) {
        phi[i] = 0.4 * randlik::rng::uniform01(66, 0, i);
    }
    const auto potential = ps::make_potential_field(grid, phi);
    const auto exact = ps::exact_posterior(grid, potential);
    std::vector<double> stacked(3 * 13);
    for (std::size_t r = 0; r < 3; ++r) {
        std::copy(phi.begin(), phi.end(), stacked.begin() + r * 13);
    }
    const auto ensemble = ps::make_ensemble(grid, 3, stacked, {});

    const auto rms = ps::mean_square_hellinger(grid, exact, ensemble);
    CHECK(rms.rms == 0.0);
    CHECK(rms.stderr_ == 0.0);

    // The marginal mean of three identical rows can pick up one ulp per addition,
    // so the distance is only near-exactly zero.
    const auto marg = ps::marginal_hellinger(grid, exact, ensemble);
    CHECK(marg.value <= 1e-12);
}

TEST_CASE("bounded-potential constants double-entry") {
    const auto grid = unit_interval_grid(5); // weights {1, 2, 2, 2, 1} / 8
    const std::vector<double> phi = {0.2, -0.1, 0.4, 0.0, 0.3};
    const std::vector<double> row0 = {0.1, 0.0, 0.5, -0.2, 0.25};
    const std::vector<double> row1 = {0.3, -0.15, 0.35, 0.1, 0.2};
    const auto potential = ps::make_potential_field(grid, phi);
    std::vector<double> stacked = row0;
    stacked.insert(stacked.end(), row1.begin(), row1.end());
    const auto ensemble = ps::make_ensemble(grid, 2, stacked, {});

    const double c3 = 3.0;
    const auto k = ps::bounded_potential_constants(grid, potential, ensemble, c3);

    // Exact normalizer.
    double z = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        z += grid.weights[i] * std::exp(-phi[i]);
    }
    CHECK(k.z == doctest::Approx(z).epsilon(1e-13));
    CHECK(k.c3 == 3.0);

    // Uniform lower bound over both the exact and the randomized potential.
    CHECK(k.c0 == 0.2);

    // Largest prior mean of a realization.
    double c4 = -1e300;
    for (const auto* row : {&row0, &row1}) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            mean += grid.weights[i] * (*row)[i];
        }
        c4 = std::max(c4, mean);
    }
    CHECK(k.c4 == doctest::Approx(c4).epsilon(1e-13));

    CHECK(k.c1 == std::exp(0.4)); // sup exponent at p* = infinity
    CHECK(k.c2 == 2.0 * std::exp(0.2));
    CHECK(k.d1 == 2.0 * k.c2);
    CHECK(k.d2
          == 4.0 * std::exp(3.0 * 0.2)
                 * std::max(std::pow(3.0, -3.0), std::exp(3.0 * k.c4)));
    CHECK(k.c
          == (k.c1 / k.z + 3.0 * std::max(std::pow(k.z, -3.0), 27.0)) * k.c2 * k.c2);

    CHECK(std::isinf(k.p_star));
    CHECK(k.exponents.p1_conj == 1.0);
    CHECK(k.exponents.p3_conj == 1.0);
    CHECK(std::isinf(k.exponents.p2));
    CHECK(!k.rho_star.has_value());

    // L^1 closeness report.
    double l1 = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        l1 += grid.weights[i] * 0.5 *
              (std::fabs(phi[i] - row0[i]) + std::fabs(phi[i] - row1[i]));
    }
    CHECK(k.l1_error == doctest::Approx(l1).epsilon(1e-13));
    CHECK(k.l1_threshold
          == doctest::Approx(std::min(k.z - 1.0 / 3.0, 3.0 - k.z) / k.c2).epsilon(1e-13));
    CHECK(k.smallness_satisfied == (k.l1_error <= k.l1_threshold));

    // Finite integrability exponent.
    const auto k2 = ps::bounded_potential_constants(grid, potential, ensemble, c3, 2.0);
    double pnorm = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        pnorm += grid.weights[i] * std::exp(2.0 * (phi[i] - 0.4));
    }
    CHECK(k2.c1 == doctest::Approx(std::exp(0.4 + 0.5 * std::log(pnorm))).epsilon(1e-13));
    CHECK(k2.exponents.p1_conj == 2.0);
}

TEST_CASE("constants at the zero potential are the textbook values") {
    const auto grid = unit_interval_grid(5);
    const auto potential = ps::make_potential_field(grid, std::vector<double>(5, 0.0));
    const auto ensemble = ps::make_ensemble(grid, 2, std::vector<double>(10, 0.0), {});
    const auto k = ps::bounded_potential_constants(grid, potential, ensemble, 2.0);
    CHECK(k.c0 == 0.0);
    CHECK(k.c1 == 1.0);
    CHECK(k.c2 == 2.0);
    CHECK(k.d1 == 4.0);
    CHECK(k.d2 == 4.0); // max(2^{-3}, e^0) = 1
    CHECK(k.c4 == 0.0);
    CHECK(k.z == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(k.l1_error == 0.0);
    CHECK(k.smallness_satisfied);

    // Both bounds degenerate to 0 <= 0 with zero slack.
    const auto mb = ps::verify_marginal_bound(grid, potential, ensemble, k);
    CHECK(mb.lhs == 0.0);
    CHECK(mb.rhs == 0.0);
    CHECK(mb.rhs_slack == 0.0);
    const auto sb = ps::verify_sample_bound(grid, potential, ensemble, k);
    CHECK(sb.lhs == 0.0);
    CHECK(sb.rhs == 0.0);
    CHECK(sb.rhs_slack == 0.0);
}

TEST_CASE("constants guard their preconditions") {
    const auto grid = unit_interval_grid(5);
    const auto ensemble = ps::make_ensemble(grid, 2, std::vector<double>(10, 0.0), {});

    // Z = e^{-3} lies outside (1/5, 5).
    const auto hot = ps::make_potential_field(grid, std::vector<double>(5, 3.0));
    CHECK_THROWS_AS(ps::bounded_potential_constants(grid, hot, ensemble, 5.0),
                    randlik::DomainError);

    const auto flat = ps::make_potential_field(grid, std::vector<double>(5, 0.0));
    CHECK_THROWS_AS(ps::bounded_potential_constants(grid, flat, ensemble, -1.0),
                    randlik::DomainError);
    CHECK_THROWS_AS(ps::bounded_potential_constants(grid, flat, ensemble, 2.0, 0.5),
                    randlik::DomainError);
    CHECK_THROWS_AS(ps::bounded_potential_constants(grid, flat, ensemble, 2.0,
                                                    std::numeric_limits<double>::infinity(),
                                                    1.5),
                    randlik::DomainError);

    // Exponential-moment probe: fine for small potentials, explicit overflow report
    // for huge ones.
    CHECK(ps::bounded_potential_constants(grid, flat, ensemble, 2.0,
                                          std::numeric_limits<double>::infinity(), 3.0)
              .rho_star.has_value());
    const auto huge = ps::make_ensemble(grid, 2, std::vector<double>(10, 400.0), {});
    CHECK_THROWS_AS(
        ps::bounded_potential_constants(grid, flat, huge, 2.0,
                                        std::numeric_limits<double>::infinity(), 3.0),
        randlik::Error);
}

TEST_CASE("marginal and sample bounds double-entry on a small ensemble") {
    const auto grid = unit_interval_grid(5);
    const std::vector<double> phi = {0.2, -0.1, 0.4, 0.0, 0.3};
    const std::vector<double> row0 = {0.1, 0.0, 0.5, -0.2, 0.25};
    const std::vector<double> row1 = {0.3, -0.15, 0.35, 0.1, 0.2};
    const auto potential = ps::make_potential_field(grid, phi);
    std::vector<double> stacked = row0;
    stacked.insert(stacked.end(), row1.begin(), row1.end());
    const auto ensemble = ps::make_ensemble(grid, 2, stacked, {});
    const auto k = ps::bounded_potential_constants(grid, potential, ensemble, 3.0);

    const auto mb = ps::verify_marginal_bound(grid, potential, ensemble, k);
    const auto exact = ps::exact_posterior(grid, potential);
    const auto marginal = ps::marginal_posterior(grid, ensemble);
    CHECK(mb.lhs == ms::hellinger(grid, exact, marginal));

    // rhs = c ||mean gap||_{L^2(prior)} at these exponent settings (r = 2).
    double norm_sq = 0.0;
    double norm_hi_sq = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double g0 = std::fabs(phi[i] - row0[i]);
        const double g1 = std::fabs(phi[i] - row1[i]);
        const double mean = 0.5 * (g0 + g1);
        const double se = 0.5 * std::fabs(g0 - g1); // two-point standard error
        norm_sq += grid.weights[i] * mean * mean;
        norm_hi_sq += grid.weights[i] * (mean + 3.0 * se) * (mean + 3.0 * se);
    }
    CHECK(mb.rhs == doctest::Approx(k.c * std::sqrt(norm_sq)).epsilon(1e-12));
    CHECK(mb.rhs_slack
          == doctest::Approx(k.c * (std::sqrt(norm_hi_sq) - std::sqrt(norm_sq)))
                 .epsilon(1e-10));
    CHECK(mb.lhs <= mb.rhs + mb.rhs_slack);

    const auto sb = ps::verify_sample_bound(grid, potential, ensemble, k);
    const auto rms = ps::mean_square_hellinger(grid, exact, ensemble);
    CHECK(sb.lhs == rms.rms);
    double mean2_norm = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double g0 = std::fabs(phi[i] - row0[i]);
        const double g1 = std::fabs(phi[i] - row1[i]);
        mean2_norm += grid.weights[i] * 0.5 * (g0 * g0 + g1 * g1);
    }
    CHECK(sb.rhs == doctest::Approx((k.d1 + k.d2) * std::sqrt(mean2_norm)).epsilon(1e-12));
    CHECK(sb.lhs <= sb.rhs + sb.rhs_slack);
}

TEST_CASE("enumerated sketch outcomes reproduce the infinite-realization marginal") {
    // J = 2, N = 1, ell = 1/2: each probe entry is +-sqrt(2) w.p. 1/4 or 0 w.p. 1/2,
    // so one probe has 9 outcomes with probabilities in sixteenths. An ensemble that
    // repeats each outcome proportionally to its probability equals the exact
    // realization average of exp(-Phi_N).
    const auto grid = unit_interval_grid(5);
    const auto noise = fw::make_noise_model({0.8, 1.2});
    const std::vector<double> y = {0.4, 0.6};
    const auto spec = fw::affine_model(2, 1, {1.0, 2.0}, {0.0, -0.3});

    std::vector<std::vector<double>> whitened(5);
    std::vector<double> phi(5);
    for (std::size_t i = 0; i < 5; ++i) {
        const auto g = fw::evaluate_forward(spec, grid.node(i));
        const std::vector<double> residual = {g[0] - y[0], g[1] - y[1]};
        whitened[i] = fw::whiten_residual(residual, noise);
        phi[i] = fw::quadratic_misfit(residual, noise);
    }

    const double root2 = std::sqrt(2.0);
    const double levels[] = {root2, -root2, 0.0};
    const std::size_t numerators[] = {1, 1, 2}; // probabilities x 4 per entry
    std::vector<double> stacked;
    std::vector<double> hand(5, 0.0);
    for (std::size_t e0 = 0; e0 < 3; ++e0) {
        for (std::size_t e1 = 0; e1 < 3; ++e1) {
            const std::size_t copies = numerators[e0] * numerators[e1]; // of 16
            std::vector<double> row(5);
            for (std::size_t i = 0; i < 5; ++i) {
                const double dot = levels[e0] * whitened[i][0] + levels[e1] * whitened[i][1];
                row[i] = 0.5 * dot * dot;
                hand[i] += static_cast<double>(copies) / 16.0 * std::exp(-row[i]);
            }
            for (std::size_t c = 0; c < copies; ++c) {
                stacked.insert(stacked.end(), row.begin(), row.end());
            }
        }
    }
    REQUIRE(stacked.size() == 16u * 5u);
    const auto ensemble = ps::make_ensemble(grid, 16, stacked, {});
    const auto marginal = ps::marginal_posterior(grid, ensemble);

    double hand_z = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        hand_z += grid.weights[i] * hand[i];
    }
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(marginal.values[i] / marginal.norm_const
              == doctest::Approx(hand[i] / hand_z).epsilon(1e-12));
    }

    // Unbiasedness at the density level: the enumerated marginal normalizer is the
    // prior expectation of exp(-Phi_N), which for a sketched quadratic misfit stays
    // within e^{max Phi} of the exact normalizer (sanity, not a sharp identity).
    CHECK(marginal.normalizer() > 0.0);
    CHECK(marginal.normalizer() <= 1.0);
}

TEST_CASE("sample posterior spread halves when the probe count quadruples") {
    const std::size_t j = 20;
    const std::size_t nodes = 101;
    const std::size_t m = 400;
    const auto grid = unit_interval_grid(nodes);
    const auto noise = fw::make_noise_model(std::vector<double>(j, 1.0));
    std::vector<double> matrix(j);
    std::vector<double> y(j);
    for (std::size_t c = 0; c < j; ++c) {
        matrix[c] = 1.0 + static_cast<double>(c) / 19.0;
        y[c] = 0.3 * matrix[c] + ((c % 2 == 0) ? 0.1 : -0.1);
    }
    const auto spec = fw::affine_model(j, 1, matrix, std::vector<double>(j, 0.0));

    std::vector<std::vector<double>> whitened(nodes);
    std::vector<double> phi(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const auto g = fw::evaluate_forward(spec, grid.node(i));
        std::vector<double> residual(j);
        for (std::size_t c = 0; c < j; ++c) {
            residual[c] = g[c] - y[c];
        }
        whitened[i] = fw::whiten_residual(residual, noise);
        phi[i] = fw::quadratic_misfit(residual, noise);
    }
    const auto exact = ps::exact_posterior(grid, ps::make_potential_field(grid, phi));

    const auto rms_at = [&](std::size_t n_probes, std::uint64_t seed) {
        std::vector<double> stacked(m * nodes);
        for (std::size_t r = 0; r < m; ++r) {
            const auto ens = rm::sample_ensemble(rm::ell_sparse_sketch(0.5), j, n_probes,
                                                 randlik::rng::derive_seed(seed, r));
            for (std::size_t i = 0; i < nodes; ++i) {
                stacked[r * nodes + i] = rm::randomized_misfit_whitened(ens, whitened[i]);
            }
        }
        const auto ensemble = ps::make_ensemble(grid, m, std::move(stacked), {});
        return ps::mean_square_hellinger(grid, exact, ensemble).rms;
    };
    const double coarse = rms_at(16, 501);
    const double fine = rms_at(64, 502);
    CHECK(fine / coarse == doctest::Approx(0.5).epsilon(0.3));
}

} // TEST_SUITE
