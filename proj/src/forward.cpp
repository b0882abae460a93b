#include "randlik/forward.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "randlik/errors.hpp"
#include "randlik/kernels.hpp"

namespace randlik::forward {

NoiseModel make_noise_model(std::vector<double> gamma_diag) {
    if (gamma_diag.empty()) {
        throw DimensionError("noise model: need at least one data component");
    }
    NoiseModel noise;
    noise.data_dim = gamma_diag.size();
    double min_gamma = gamma_diag.front();
    for (const double g : gamma_diag) {
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw DomainError("noise model: covariance diagonal must be positive and finite");
        }
        min_gamma = std::min(min_gamma, g);
    }
    noise.inv_gamma.reserve(gamma_diag.size());
    noise.inv_sqrt_gamma.reserve(gamma_diag.size());
    for (const double g : gamma_diag) {
        noise.inv_gamma.push_back(1.0 / g);
        noise.inv_sqrt_gamma.push_back(1.0 / std::sqrt(g));
    }
    noise.gamma_diag = std::move(gamma_diag);
    noise.c_gamma = 1.0 / min_gamma;
    return noise;
}

Observation make_observation(std::vector<double> y) {
    for (const double v : y) {
        if (!std::isfinite(v)) {
            throw DomainError("observation: data entries must be finite");
        }
    }
    return Observation{std::move(y)};
}

namespace {

void check_linear_part(const ForwardModelSpec& spec) {
    if (spec.data_dim == 0 || spec.param_dim == 0) {
        throw DimensionError("forward model: dimensions must be positive");
    }
    if (spec.matrix.size() != spec.data_dim * spec.param_dim) {
        throw DimensionError("forward model: matrix must be data_dim x param_dim");
    }
    if (spec.offset.size() != spec.data_dim) {
        throw DimensionError("forward model: offset must have length data_dim");
    }
}

}  // namespace

ForwardModelSpec affine_model(std::size_t data_dim, std::size_t param_dim,
                              std::vector<double> matrix, std::vector<double> offset) {
    ForwardModelSpec spec;
    spec.kind = ForwardModelSpec::Kind::affine;
    spec.data_dim = data_dim;
    spec.param_dim = param_dim;
    spec.matrix = std::move(matrix);
    spec.offset = std::move(offset);
    check_linear_part(spec);
    return spec;
}

ForwardModelSpec componentwise_model(std::size_t data_dim, std::size_t param_dim,
                                     std::vector<double> matrix, std::vector<double> offset,
                                     std::function<double(std::size_t, double)> map) {
    ForwardModelSpec spec = affine_model(data_dim, param_dim, std::move(matrix),
                                         std::move(offset));
    spec.kind = ForwardModelSpec::Kind::componentwise;
    if (!map) {
        throw DomainError("forward model: componentwise map must be set");
    }
    spec.component_map = std::move(map);
    return spec;
}

ForwardModelSpec ode_observed_model(std::shared_ptr<const probode::OdeProblem> problem,
                                    probode::ObservationTimes times, std::size_t num_steps,
                                    probode::Stepper stepper) {
    if (!problem) {
        throw DomainError("forward model: ode problem must be set");
    }
    ForwardModelSpec spec;
    spec.kind = ForwardModelSpec::Kind::ode_observed;
    spec.data_dim = problem->state_dim * times.times.size();
    spec.param_dim = problem->state_dim;  // initial-state map consumes the parameter
    if (spec.data_dim == 0) {
        throw DimensionError("forward model: need at least one observation time");
    }
    spec.problem = std::move(problem);
    spec.times = std::move(times);
    spec.num_steps = num_steps;
    spec.stepper = stepper;
    return spec;
}

std::vector<double> evaluate_forward(const ForwardModelSpec& spec, std::span<const double> u) {
    std::vector<double> out;
    switch (spec.kind) {
        case ForwardModelSpec::Kind::affine:
        case ForwardModelSpec::Kind::componentwise: {
            check_linear_part(spec);
            if (u.size() != spec.param_dim) {
                throw DimensionError("evaluate_forward: parameter has wrong dimension");
            }
            out.resize(spec.data_dim);
            for (std::size_t j = 0; j < spec.data_dim; ++j) {
                const double* row = spec.matrix.data() + j * spec.param_dim;
                double v = kernels::dot(row, u.data(), spec.param_dim) + spec.offset[j];
                if (spec.kind == ForwardModelSpec::Kind::componentwise) {
                    v = spec.component_map(j, v);
                }
                out[j] = v;
            }
            break;
        }
        case ForwardModelSpec::Kind::ode_observed: {
            if (!spec.problem) {
                throw DomainError("evaluate_forward: ode problem must be set");
            }
            if (u.size() != spec.param_dim) {
                throw DimensionError("evaluate_forward: parameter has wrong dimension");
            }
            if (spec.num_steps == 0) {
                out = probode::solve_reference(*spec.problem, u, spec.times);
            } else {
                probode::RandomOdeForwardModel model;
                model.problem = spec.problem;
                model.stepper = spec.stepper;
                model.noise.kind = probode::NoiseProcess::Kind::zero;
                model.times = spec.times;
                model.num_steps = spec.num_steps;
                out = probode::solve_stepper(model, u);
            }
            break;
        }
    }
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (!std::isfinite(out[j])) {
            std::string where = "evaluate_forward: non-finite output component " +
                                std::to_string(j) + " at parameter (";
            for (std::size_t c = 0; c < u.size(); ++c) {
                where += (c ? ", " : "") + std::to_string(u[c]);
            }
            throw DomainError(where + ")");
        }
    }
    return out;
}

double quadratic_misfit(std::span<const double> residual, const NoiseModel& noise) {
    if (residual.size() != noise.data_dim) {
        throw DimensionError("quadratic_misfit: residual has wrong length");
    }
    return 0.5 * kernels::weighted_dot(noise.inv_gamma.data(), residual.data(), residual.data(),
                                       residual.size());
}

std::vector<double> whiten_residual(std::span<const double> residual, const NoiseModel& noise) {
    if (residual.size() != noise.data_dim) {
        throw DimensionError("whiten_residual: residual has wrong length");
    }
    std::vector<double> out(residual.size());
    for (std::size_t j = 0; j < residual.size(); ++j) {
        out[j] = noise.inv_sqrt_gamma[j] * residual[j];
    }
    return out;
}

namespace {

// Leading constant of the misfit-error inequality. The sharp chain
//   |Phi - Phi'| <= ||a - b|| ||a|| + ||a - b||^2 / 2,   a/b the whitened residuals,
// gives sqrt(2 c) sqrt(Phi) gap + (c/2) gap^2 with c the largest eigenvalue of
// Gamma^{-1}; both terms sit below k (sqrt(Phi) gap + gap^2) for
// k = max(2c, sqrt(2c)). The sqrt branch only engages when every gamma_j > 2.
double misfit_error_constant(const NoiseModel& noise) {
    return std::max(2.0 * noise.c_gamma, std::sqrt(2.0 * noise.c_gamma));
}

}  // namespace

BoundPair misfit_error_bound_check(std::span<const double> g, std::span<const double> g_approx,
                                   std::span<const double> y, const NoiseModel& noise) {
    const std::size_t J = noise.data_dim;
    if (g.size() != J || g_approx.size() != J || y.size() != J) {
        throw DimensionError("misfit_error_bound_check: vectors must all have length data_dim");
    }
    std::vector<double> r(J), r_approx(J), diff(J);
    for (std::size_t j = 0; j < J; ++j) {
        r[j] = g[j] - y[j];
        r_approx[j] = g_approx[j] - y[j];
        diff[j] = g[j] - g_approx[j];
    }
    const double phi = quadratic_misfit(r, noise);
    const double phi_approx = quadratic_misfit(r_approx, noise);
    const double gap = std::sqrt(kernels::dot(diff.data(), diff.data(), J));
    BoundPair pair;
    pair.lhs = std::abs(phi - phi_approx);
    pair.rhs = misfit_error_constant(noise) * (std::sqrt(phi) * gap + gap * gap);
    return pair;
}

BoundPair moment_misfit_error_check(std::span<const MisfitSample> samples, double q,
                                    const NoiseModel& noise) {
    if (samples.empty()) {
        throw DomainError("moment_misfit_error_check: ensemble must be nonempty");
    }
    if (!(q >= 1.0)) {
        throw DomainError("moment_misfit_error_check: moment order q must be >= 1");
    }
    const double phi = samples.front().phi;
    double mean_abs_q = 0.0;
    double mean_gap_q = 0.0;
    double mean_gap_2q = 0.0;
    for (const MisfitSample& s : samples) {
        if (std::abs(s.phi - phi) > 1e-12 * std::max(1.0, std::abs(phi))) {
            throw DomainError(
                "moment_misfit_error_check: ensemble must share one exact misfit value");
        }
        mean_abs_q += std::pow(std::abs(s.phi - s.phi_approx), q);
        mean_gap_q += std::pow(s.forward_gap, q);
        mean_gap_2q += std::pow(s.forward_gap, 2.0 * q);
    }
    const double m = static_cast<double>(samples.size());
    mean_abs_q /= m;
    mean_gap_q /= m;
    mean_gap_2q /= m;
    BoundPair pair;
    pair.lhs = std::pow(mean_abs_q, 1.0 / q);
    pair.rhs = 2.0 * misfit_error_constant(noise) *
               std::pow(std::pow(phi, 0.5 * q) * mean_gap_q + mean_gap_2q, 1.0 / q);
    return pair;
}

}  // namespace randlik::forward
