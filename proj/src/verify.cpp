#include "randlik/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "randlik/errors.hpp"
#include "randlik/expharness.hpp"
#include "randlik/forward.hpp"
#include "randlik/kernels.hpp"
#include "randlik/measures.hpp"
#include "randlik/posterior.hpp"
#include "randlik/probode.hpp"
#include "randlik/randmisfit.hpp"
#include "randlik/rng.hpp"

namespace randlik::verify {
namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw Error(what);
    }
}

// lhs <= rhs up to relative rounding slack (and an absolute floor for rhs == 0).
void require_le(double lhs, double rhs, const std::string& context) {
    if (!(lhs <= rhs * (1.0 + 1e-12) + 1e-300)) {
        throw Error(context + ": lhs=" + num(lhs) + " exceeds rhs=" + num(rhs));
    }
}

// Deterministic scalar stream over the counter-based generator: uniforms from
// counter region 0, gaussians from region 1, one counter per draw.
struct Stream {
    std::uint64_t seed;
    std::uint64_t ctr = 0;
    double u() { return rng::uniform01(seed, 0, ctr++); }
    double g() { return rng::gaussian(seed, 1, ctr++); }
    double sym(double scale) { return (2.0 * u() - 1.0) * scale; }
};

// ---------------------------------------------------------------------------
// Generator and kernel contracts
// ---------------------------------------------------------------------------

void check_counter_rng() {
    struct Kat {
        std::uint64_t key, hi, lo;
        std::uint32_t out[4];
    };
    // Published known-answer vectors for the 10-round Philox 4x32 block function:
    // all-zero input, all-ones input, and the pi-digits counter/key vector.
    const Kat kats[] = {
        {0u, 0u, 0u, {0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}},
        {0xFFFFFFFFFFFFFFFFull, 0xFFFFFFFFFFFFFFFFull, 0xFFFFFFFFFFFFFFFFull,
         {0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}},
        {0x299f31d0a4093822ull, 0x0370734413198a2eull, 0x85a308d3243f6a88ull,
         {0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}},
    };
    for (const Kat& kat : kats) {
        const rng::Block b = rng::philox4x32(kat.key, kat.hi, kat.lo);
        for (int w = 0; w < 4; ++w) {
            if (b.x[w] != kat.out[w]) {
                char buf[160];
                std::snprintf(buf, sizeof buf,
                              "block generator word %d mismatch: got %08x, expected %08x "
                              "(key=%016llx)",
                              w, b.x[w], kat.out[w],
                              static_cast<unsigned long long>(kat.key));
                throw Error(buf);
            }
        }
    }

    for (std::uint64_t c = 0; c < 1000; ++c) {
        const double u = rng::uniform01(42, 0, c);
        require(u >= 0.0 && u < 1.0, "uniform draw outside [0, 1): " + num(u));
        const double z = rng::gaussian(42, 1, c);
        require(std::isfinite(z), "non-finite gaussian draw: " + num(z));
    }
    require(rng::derive_seed(1, 2) != rng::derive_seed(2, 1),
            "seed derivation must separate parent and index roles");
    require(rng::bits64(7, 0, 3) == rng::bits64(7, 0, 3),
            "identical (seed, counter) must reproduce identical bits");
}

void check_kernel_backends() {
    const bool have_simd = kernels::active_backend() == kernels::Backend::avx2;
    Stream st{101};
    for (std::size_t n = 0; n <= 64; ++n) {
        std::vector<double> a(n), b(n), w(n), p(n), q(n);
        for (std::size_t j = 0; j < n; ++j) {
            a[j] = st.sym(2.0);
            b[j] = st.sym(2.0);
            w[j] = 0.01 + st.u();
            p[j] = 0.001 + st.u();
            q[j] = 0.001 + st.u();
        }
        const double inv_za = 1.0 / (0.5 + st.u());
        const double inv_zb = 1.0 / (0.5 + st.u());

        const struct {
            const char* name;
            double got;
            double ref;
        } cases[] = {
            {"dot", kernels::dot(a.data(), b.data(), n),
             kernels::scalar::dot(a.data(), b.data(), n)},
            {"weighted_sum", kernels::weighted_sum(w.data(), a.data(), n),
             kernels::scalar::weighted_sum(w.data(), a.data(), n)},
            {"weighted_dot", kernels::weighted_dot(w.data(), a.data(), b.data(), n),
             kernels::scalar::weighted_dot(w.data(), a.data(), b.data(), n)},
            {"hellinger_accum",
             kernels::hellinger_accum(w.data(), p.data(), q.data(), inv_za, inv_zb, n),
             kernels::scalar::hellinger_accum(w.data(), p.data(), q.data(), inv_za, inv_zb,
                                              n)},
        };
        for (const auto& c : cases) {
            if (c.got != c.ref) {
                throw Error(std::string("backend mismatch in ") + c.name +
                            " at n=" + std::to_string(n) + ": " + num(c.got) +
                            " != " + num(c.ref) +
                            (have_simd ? " (active backend: simd)" : " (active: scalar)"));
            }
        }
    }
    const std::size_t row_counts[] = {0, 1, 2, 3, 4, 5, 8, 9};
    const std::size_t widths[] = {0, 1, 2, 3, 4, 7, 8, 16};
    for (const std::size_t rows : row_counts) {
        for (const std::size_t n : widths) {
            std::vector<double> mat(rows * n), v(n);
            for (double& x : mat) {
                x = st.sym(1.5);
            }
            for (double& x : v) {
                x = st.sym(1.5);
            }
            const double got = kernels::sum_sq_dots(mat.data(), rows, v.data(), n);
            const double ref = kernels::scalar::sum_sq_dots(mat.data(), rows, v.data(), n);
            if (got != ref) {
                throw Error("backend mismatch in sum_sq_dots at rows=" +
                            std::to_string(rows) + ", n=" + std::to_string(n) + ": " +
                            num(got) + " != " + num(ref));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Elementary inequality fuzz suites
// ---------------------------------------------------------------------------

constexpr double kScales[] = {1e-3, 1.0, 1e3};

void check_squares_sum() {
    Stream st{201};
    for (int t = 0; t < 100000; ++t) {
        const double scale = kScales[t % 3];
        const double a = st.sym(scale);
        const double b = st.sym(scale);
        const double d = a - b;
        require_le(d * d, 2.0 * a * a + 2.0 * b * b,
                   "difference-of-squares inequality, trial " + std::to_string(t));
    }
}

void check_squares_ratio() {
    Stream st{202};
    for (int t = 0; t < 100000; ++t) {
        const double scale = kScales[t % 3];
        const double sign = st.u() < 0.5 ? 1.0 : -1.0;
        const double a = sign * (1e-8 + st.u() * scale);
        const double b = sign * (1e-8 + st.u() * scale);
        const double d = a - b;
        const double lhs = d * d;
        const double rhs = (a * a - b * b) * (a * a - b * b) / (a * a + b * b);
        require_le(lhs, rhs, "square-ratio inequality (same-sign pair), trial " +
                                 std::to_string(t));
    }
}

void check_exp_difference() {
    Stream st{203};
    for (int t = 0; t < 100000; ++t) {
        const double a = st.sym(20.0);
        const double b = st.sym(20.0);
        const double lhs = std::fabs(std::exp(a) - std::exp(b));
        const double rhs = (std::exp(a) + std::exp(b)) * std::fabs(a - b);
        require_le(lhs, rhs, "exponential difference inequality, trial " + std::to_string(t));
    }
}

void check_reciprocal_cube() {
    Stream st{204};
    for (int t = 0; t < 100000; ++t) {
        const double a = std::pow(10.0, st.sym(4.0));
        const double b = std::pow(10.0, st.sym(4.0));
        const double lhs = 1.0 / ((a + b) * a * b);
        const double rhs = std::max(1.0 / (a * a * a), 1.0 / (b * b * b));
        require_le(lhs, rhs, "reciprocal product inequality, trial " + std::to_string(t));
    }
}

void check_power_sum() {
    Stream st{205};
    for (int t = 0; t < 100000; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(t) % 8;
        const double p = 1.0 + 3.0 * st.u();
        const double scale = kScales[t % 3];
        double total = 0.0;
        double moment = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double s = st.sym(scale);
            total += s;
            moment += std::pow(std::fabs(s), p);
        }
        const double lhs = std::pow(std::fabs(total), p);
        const double rhs = std::pow(static_cast<double>(n), p - 1.0) * moment;
        require_le(lhs, rhs, "power-sum inequality, trial " + std::to_string(t));
    }
}

// ---------------------------------------------------------------------------
// Misfit inequalities
// ---------------------------------------------------------------------------

void check_misfit_pointwise() {
    Stream st{301};
    for (int t = 0; t < 10000; ++t) {
        const std::size_t j = 1 + static_cast<std::size_t>(t) % 6;
        std::vector<double> gamma(j), g(j), ga(j), y(j);
        for (std::size_t i = 0; i < j; ++i) {
            gamma[i] = 0.1 + 9.9 * st.u();
            g[i] = st.sym(2.0);
            ga[i] = st.sym(2.0);
            y[i] = st.sym(2.0);
        }
        const forward::NoiseModel noise = forward::make_noise_model(gamma);
        const forward::BoundPair b = forward::misfit_error_bound_check(g, ga, y, noise);
        require_le(b.lhs, b.rhs,
                   "pointwise misfit-error inequality, trial " + std::to_string(t));
    }
}

void check_misfit_moment() {
    const std::vector<double> g = {0.3, -0.7, 1.1, 0.2};
    const std::vector<double> y = {0.1, 0.4, -0.2, 0.9};
    const forward::NoiseModel noise = forward::make_noise_model({0.5, 1.0, 2.0, 0.25});

    std::vector<double> residual(4);
    for (std::size_t i = 0; i < 4; ++i) {
        residual[i] = g[i] - y[i];
    }
    const double phi = forward::quadratic_misfit(residual, noise);

    Stream st{302};
    std::vector<forward::MisfitSample> samples(2000);
    for (forward::MisfitSample& s : samples) {
        std::vector<double> gn(4), rn(4);
        double gap_sq = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            const double eps = st.sym(0.3);
            gn[i] = g[i] + eps;
            rn[i] = gn[i] - y[i];
            gap_sq += eps * eps;
        }
        s.phi = phi;
        s.phi_approx = forward::quadratic_misfit(rn, noise);
        s.forward_gap = std::sqrt(gap_sq);
    }
    for (const double q : {1.0, 2.0, 3.0}) {
        const forward::BoundPair b = forward::moment_misfit_error_check(samples, q, noise);
        require_le(b.lhs, b.rhs, "moment misfit-error inequality at q=" + num(q));
    }
}

// ---------------------------------------------------------------------------
// Sketched misfit laws
// ---------------------------------------------------------------------------

void check_sketch_bounded() {
    constexpr double kElls[] = {0.0, 0.5, 0.9};
    Stream st{401};

    // One-dimensional residuals: a probe entry satisfies sigma^2 <= s, so the
    // estimate never exceeds s * Phi.
    for (int t = 0; t < 10000; ++t) {
        const randmisfit::SketchDistribution dist = randmisfit::ell_sparse_sketch(kElls[t % 3]);
        const std::size_t n = 1 + static_cast<std::size_t>(t) % 16;
        const double w = st.sym(2.0);
        const randmisfit::SketchEnsemble ens =
            randmisfit::sample_ensemble(dist, 1, n, rng::derive_seed(7001, t));
        const double phi_n = randmisfit::randomized_misfit_whitened(ens, {&w, 1});
        const double phi = 0.5 * w * w;
        require_le(phi_n, dist.scale * phi,
                   "one-dimensional sketch estimate above scale * misfit, trial " +
                       std::to_string(t));
    }

    // General residual dimension J: |sigma_j| <= sqrt(s) gives the pointwise
    // envelope Phi_N <= s * J * Phi (the extra J comes from Cauchy-Schwarz).
    for (int t = 0; t < 10000; ++t) {
        const randmisfit::SketchDistribution dist = randmisfit::ell_sparse_sketch(kElls[t % 3]);
        const std::size_t j = 1 + static_cast<std::size_t>(t) % 8;
        const std::size_t n = 1 + (static_cast<std::size_t>(t) / 8) % 16;
        std::vector<double> w(j);
        for (double& x : w) {
            x = st.sym(2.0);
        }
        const randmisfit::SketchEnsemble ens =
            randmisfit::sample_ensemble(dist, j, n, rng::derive_seed(7002, t));
        const double phi_n = randmisfit::randomized_misfit_whitened(ens, w);
        const double phi = 0.5 * kernels::dot(w.data(), w.data(), j);
        require_le(phi_n, dist.scale * static_cast<double>(j) * phi,
                   "sketch estimate above scale * J * misfit, trial " + std::to_string(t));
    }
}

void check_sketch_enumeration() {
    for (const std::size_t j : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
        std::vector<double> w(j);
        for (std::size_t i = 0; i < j; ++i) {
            w[i] = 0.3 + 0.25 * static_cast<double>(i);
        }
        const double phi = 0.5 * kernels::scalar::dot(w.data(), w.data(), j);

        for (const std::size_t n : {std::size_t{1}, std::size_t{2}}) {
            for (const double ell : {0.0, 0.5}) {
                const randmisfit::SketchDistribution dist = randmisfit::ell_sparse_sketch(ell);
                const double s = dist.scale;
                std::vector<double> support = {std::sqrt(s), -std::sqrt(s)};
                std::vector<double> prob = {0.5 / s, 0.5 / s};
                if (ell > 0.0) {
                    support.push_back(0.0);
                    prob.push_back(1.0 - 1.0 / s);
                }

                const std::size_t entries = j * n;
                std::size_t outcomes = 1;
                for (std::size_t e = 0; e < entries; ++e) {
                    outcomes *= support.size();
                }

                double mean = 0.0;
                double total_prob = 0.0;
                randmisfit::SketchEnsemble ens;
                ens.dist = dist;
                ens.data_dim = j;
                ens.count = n;
                ens.vectors.assign(entries, 0.0);
                for (std::size_t code = 0; code < outcomes; ++code) {
                    std::size_t rest = code;
                    double p_outcome = 1.0;
                    for (std::size_t e = 0; e < entries; ++e) {
                        const std::size_t pick = rest % support.size();
                        rest /= support.size();
                        ens.vectors[e] = support[pick];
                        p_outcome *= prob[pick];
                    }
                    mean += p_outcome * randmisfit::randomized_misfit_whitened(ens, w);
                    total_prob += p_outcome;
                }

                require(std::fabs(total_prob - 1.0) <= 1e-12,
                        "enumerated probabilities must sum to 1, got " + num(total_prob));
                const double err = std::fabs(mean - phi);
                require(err <= 1e-12 * std::max(1.0, phi),
                        "enumerated estimator mean " + num(mean) + " != misfit " + num(phi) +
                            " at J=" + std::to_string(j) + ", N=" + std::to_string(n) +
                            ", ell=" + num(ell));
            }
        }
    }
}

void check_sketch_variance() {
    {
        const forward::NoiseModel noise = forward::make_noise_model({1.0, 0.5, 2.0, 1.0, 1.0});
        const std::vector<double> residual = {0.4, -0.2, 0.7, 0.1, -0.5};
        const randmisfit::VarianceCheck vc = randmisfit::variance_bound_check(
            randmisfit::ell_sparse_sketch(0.5), residual, noise);
        require(vc.empirical_var <= vc.bound * 1.05,
                "single-probe variance " + num(vc.empirical_var) + " above bound " +
                    num(vc.bound));
        require(vc.bound > 0.0, "variance bound must be positive for a nonzero residual");
    }
    {
        // J = 1 with dense probes: the estimate is deterministic, so both the
        // empirical variance and the closed-form bound collapse to exactly zero.
        const forward::NoiseModel noise = forward::make_noise_model({1.0});
        const std::vector<double> residual = {0.7};
        const randmisfit::VarianceCheck vc = randmisfit::variance_bound_check(
            randmisfit::ell_sparse_sketch(0.0), residual, noise);
        require(vc.bound == 0.0, "one-dimensional dense-probe bound must be exactly 0, got " +
                                     num(vc.bound));
        require(vc.empirical_var == 0.0,
                "one-dimensional dense-probe variance must be exactly 0, got " +
                    num(vc.empirical_var));
    }
}

// ---------------------------------------------------------------------------
// Exact-collapse identities
// ---------------------------------------------------------------------------

void check_rademacher_collapse() {
    const randmisfit::SketchDistribution dist = randmisfit::ell_sparse_sketch(0.0);
    const forward::NoiseModel unit_noise = forward::make_noise_model({1.0});

    // J = 1 dense probes: sigma^2 == 1, so every realization reproduces the misfit
    // bit for bit when the ensemble size is a power of two (exact lane sums).
    Stream st{501};
    for (const std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{4}, std::size_t{8}}) {
        for (int t = 0; t < 100; ++t) {
            const double w = st.sym(3.0);
            const randmisfit::SketchEnsemble ens = randmisfit::sample_ensemble(
                dist, 1, n, rng::derive_seed(9100, static_cast<std::uint64_t>(t) * 8 + n));
            const double phi_n = randmisfit::randomized_misfit_whitened(ens, {&w, 1});
            const double phi = forward::quadratic_misfit({&w, 1}, unit_noise);
            if (phi_n != phi) {
                throw Error("one-dimensional dense-probe estimate must equal the misfit "
                            "exactly: " +
                            num(phi_n) + " != " + num(phi) + " at N=" + std::to_string(n));
            }
        }
    }

    // Through the posterior: every realized density equals the exact posterior, so
    // all Hellinger distances vanish identically.
    const std::vector<double> lower = {0.0}, upper = {1.0};
    const std::vector<std::size_t> pts = {11};
    const measures::ParameterGrid grid =
        measures::build_grid(lower, upper, pts, measures::PriorSpec::uniform());
    const forward::ForwardModelSpec model = forward::affine_model(1, 1, {1.0}, {0.0});
    const double y = 0.4;

    const std::size_t nodes = grid.node_count();
    std::vector<double> phi_values(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const std::vector<double> g = forward::evaluate_forward(model, grid.node(i));
        const double r = g[0] - y;
        phi_values[i] = forward::quadratic_misfit({&r, 1}, unit_noise);
    }
    const posterior::PotentialField potential =
        posterior::make_potential_field(grid, phi_values);
    const measures::DensityField exact = posterior::exact_posterior(grid, potential);

    const std::size_t m = 3;
    std::vector<double> rows(m * nodes);
    std::vector<std::uint64_t> seeds(m);
    for (std::size_t r = 0; r < m; ++r) {
        seeds[r] = rng::derive_seed(9200, r);
        const randmisfit::SketchEnsemble ens = randmisfit::sample_ensemble(dist, 1, 8, seeds[r]);
        for (std::size_t i = 0; i < nodes; ++i) {
            const std::vector<double> g = forward::evaluate_forward(model, grid.node(i));
            const double w = g[0] - y;
            rows[r * nodes + i] = randmisfit::randomized_misfit_whitened(ens, {&w, 1});
            if (rows[r * nodes + i] != phi_values[i]) {
                throw Error("realized potential must equal the exact potential bit for bit");
            }
        }
    }
    const posterior::RandomPotentialEnsemble ensemble =
        posterior::make_ensemble(grid, m, rows, seeds);

    for (std::size_t r = 0; r < m; ++r) {
        std::vector<double> row(rows.begin() + r * nodes, rows.begin() + (r + 1) * nodes);
        const measures::DensityField sample = posterior::sample_posterior(grid, row);
        const double d = posterior::hellinger_to_exact(grid, exact, sample);
        require(d == 0.0, "collapsed sample posterior distance must be exactly 0, got " +
                              num(d));
    }
    const posterior::RmsHellinger rms = posterior::mean_square_hellinger(grid, exact, ensemble);
    require(rms.rms == 0.0,
            "collapsed rms distance must be exactly 0, got " + num(rms.rms));

    std::vector<double> one_row(rows.begin(), rows.begin() + nodes);
    const posterior::RandomPotentialEnsemble single =
        posterior::make_ensemble(grid, 1, one_row, {seeds[0]});
    const measures::DensityField marg1 = posterior::marginal_posterior(grid, single);
    require(posterior::hellinger_to_exact(grid, exact, marg1) == 0.0,
            "single-realization marginal posterior must collapse exactly");

    const posterior::MarginalHellinger marg = posterior::marginal_hellinger(grid, exact, ensemble);
    require(marg.value <= 1e-12, "averaged marginal posterior distance should vanish to "
                                 "rounding, got " +
                                     num(marg.value));
}

void check_zero_noise_collapse() {
    struct Case {
        probode::Stepper::Kind kind;
        std::size_t num_steps;
        std::vector<double> times;
    };
    const Case cases[] = {
        {probode::Stepper::Kind::explicit_euler, 7, {0.15, 0.5, 1.0}},
        {probode::Stepper::Kind::rk4, 5, {0.37, 1.0}},
    };
    const auto problem = std::make_shared<const probode::OdeProblem>(
        probode::logistic_problem(1.3));
    const std::vector<double> param = {0.2};

    for (const Case& c : cases) {
        probode::RandomOdeForwardModel model;
        model.problem = problem;
        model.stepper.kind = c.kind;
        model.noise.kind = probode::NoiseProcess::Kind::zero;
        model.times.times = c.times;
        model.num_steps = c.num_steps;

        const std::vector<double> det = probode::solve_stepper(model, param);
        const std::vector<double> ran = probode::solve_randomized(model, param, 12345);
        require(det.size() == ran.size(), "solver outputs must have equal extents");
        for (std::size_t i = 0; i < det.size(); ++i) {
            if (det[i] != ran[i]) {
                throw Error("zero-noise randomized solve must match the deterministic "
                            "solve bit for bit: entry " +
                            std::to_string(i) + ": " + num(ran[i]) + " != " + num(det[i]));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Hellinger geometry
// ---------------------------------------------------------------------------

void check_gaussian_shift() {
    const std::vector<double> lower = {-8.0}, upper = {9.0};
    const std::vector<std::size_t> pts = {4001};
    const measures::ParameterGrid grid =
        measures::build_grid(lower, upper, pts, measures::PriorSpec::uniform());
    const std::size_t n = grid.node_count();
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = grid.node(i)[0];
        a[i] = std::exp(-0.5 * u * u);
        b[i] = std::exp(-0.5 * (u - 1.0) * (u - 1.0));
    }
    const measures::DensityField fa = measures::make_density(grid, a);
    const measures::DensityField fb = measures::make_density(grid, b);
    const double d = measures::hellinger(grid, fa, fb);
    // Unit-variance gaussians one standard deviation apart: d^2 = 1 - e^{-1/8}.
    const double closed = std::sqrt(1.0 - std::exp(-0.125));
    require(std::fabs(d - closed) <= 1e-4, "gaussian shift distance " + num(d) +
                                               " differs from the closed form " + num(closed));
}

void check_lipschitz_gap() {
    const std::vector<double> lower = {0.0}, upper = {1.0};
    const std::vector<std::size_t> pts = {101};
    const measures::ParameterGrid grid =
        measures::build_grid(lower, upper, pts, measures::PriorSpec::uniform());
    const std::size_t n = grid.node_count();

    Stream st{601};
    std::vector<double> a(n), b(n), f(n);
    for (int t = 0; t < 10000; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = std::exp(st.sym(3.0));
            b[i] = std::exp(st.sym(3.0));
            f[i] = st.sym(2.0);
        }
        const measures::DensityField fa = measures::make_density(grid, a);
        const measures::DensityField fb = measures::make_density(grid, b);
        const measures::LipschitzGap gap = measures::hellinger_lipschitz_gap(grid, fa, fb, f);
        require_le(gap.lhs, gap.rhs,
                   "expectation-difference bound, trial " + std::to_string(t));
    }
}

// ---------------------------------------------------------------------------
// Posterior bound domination on built-in experiments
// ---------------------------------------------------------------------------

constexpr const char* kBoundConfigA = R"(# built-in check: five observations, half-sparse probes
experiment.id = builtin-bound-a
experiment.kind = bound-verify
experiment.claim = "posterior distance bounds dominate the observed distances"
sweep = 4 8 16
realizations = 200
master_seed = 901
prior.lower = 0
prior.upper = 1
prior.points = 61
observation.y = 0.45 0.65 0.65 0.85 0.85
noise.gamma = 1
forward.matrix = 1 1.2 1.4 1.6 1.8
sketch.ell = 0.5
bound.c3 = 5
)";

constexpr const char* kBoundConfigB = R"(# built-in check: three observations, dense probes
experiment.id = builtin-bound-b
experiment.kind = bound-verify
experiment.claim = "posterior distance bounds dominate with dense probe vectors"
sweep = 2 4 8
realizations = 150
master_seed = 902
prior.lower = 0
prior.upper = 1
prior.points = 41
observation.y = 0.3 0.5 0.7
noise.gamma = 0.5
forward.matrix = 1 1.5 2
sketch.ell = 0
bound.c3 = 6
)";

void check_bound_domination() {
    for (const char* text : {kBoundConfigA, kBoundConfigB}) {
        const expharness::ExperimentConfig cfg = expharness::parse_config_text(text);
        const std::vector<expharness::ConvergenceRecord> records =
            expharness::run_experiment(cfg);

        std::map<std::uint64_t, std::map<std::string, const expharness::ConvergenceRecord*>>
            by_point;
        for (const expharness::ConvergenceRecord& r : records) {
            by_point[r.refinement][r.metric] = &r;
        }
        require(!by_point.empty(), "experiment '" + cfg.id + "' produced no records");
        for (const auto& [refinement, metrics] : by_point) {
            const char* pairs[][2] = {
                {"marginal_bound_lhs", "marginal_bound_rhs"},
                {"sample_bound_lhs", "sample_bound_rhs"},
            };
            for (const auto& pair : pairs) {
                const auto lhs_it = metrics.find(pair[0]);
                const auto rhs_it = metrics.find(pair[1]);
                require(lhs_it != metrics.end() && rhs_it != metrics.end(),
                        "experiment '" + cfg.id + "' is missing metric records at size " +
                            std::to_string(refinement));
                const double lhs = lhs_it->second->value;
                const double rhs = rhs_it->second->value + 3.0 * rhs_it->second->stderr_;
                require(lhs > 0.0, std::string("metric ") + pair[0] +
                                       " should be positive, got " + num(lhs));
                if (!(lhs <= rhs)) {
                    throw Error("experiment '" + cfg.id + "' at size " +
                                std::to_string(refinement) + ": " + pair[0] + "=" + num(lhs) +
                                " exceeds " + pair[1] + "=" + num(rhs));
                }
            }
        }
    }
}

struct Check {
    const char* name;
    void (*fn)();
};

constexpr Check kChecks[] = {
    {"counter-rng-known-answers", check_counter_rng},
    {"kernel-backend-equivalence", check_kernel_backends},
    {"inequality-squares-sum", check_squares_sum},
    {"inequality-squares-ratio", check_squares_ratio},
    {"inequality-exp-difference", check_exp_difference},
    {"inequality-reciprocal-cube", check_reciprocal_cube},
    {"inequality-power-sum", check_power_sum},
    {"misfit-error-pointwise", check_misfit_pointwise},
    {"misfit-error-moment", check_misfit_moment},
    {"sketch-misfit-bounded", check_sketch_bounded},
    {"sketch-enumeration-unbiased", check_sketch_enumeration},
    {"sketch-variance-bound", check_sketch_variance},
    {"rademacher-misfit-collapse", check_rademacher_collapse},
    {"ode-zero-noise-collapse", check_zero_noise_collapse},
    {"hellinger-gaussian-shift", check_gaussian_shift},
    {"hellinger-expectation-bound", check_lipschitz_gap},
    {"posterior-bound-domination", check_bound_domination},
};

}  // namespace

std::vector<std::string> check_names() {
    std::vector<std::string> names;
    names.reserve(std::size(kChecks));
    for (const Check& c : kChecks) {
        names.emplace_back(c.name);
    }
    return names;
}

void run_check(const std::string& name) {
    for (const Check& c : kChecks) {
        if (name == c.name) {
            c.fn();
            return;
        }
    }
    throw DomainError("unknown check '" + name + "'");
}

std::vector<CheckResult> run_all_checks() {
    std::vector<CheckResult> results;
    results.reserve(std::size(kChecks));
    for (const Check& c : kChecks) {
        CheckResult r;
        r.name = c.name;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.fn();
            r.passed = true;
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace randlik::verify
