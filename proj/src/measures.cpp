#include "randlik/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "randlik/errors.hpp"
#include "randlik/kernels.hpp"

namespace randlik::measures {

namespace {

std::uint64_t next_grid_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}

// Compensated (Kahan) sum: keeps the weight normalization exact to a few ulps
// independently of the node count.
double kahan_sum(std::span<const double> v) {
    double sum = 0.0;
    double carry = 0.0;
    for (const double x : v) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum;
}

void require_finite(std::span<const double> v, const char* what) {
    for (const double x : v) {
        if (!std::isfinite(x)) {
            throw DomainError(std::string(what) + " contains a non-finite value");
        }
    }
}

}  // namespace

PriorSpec PriorSpec::uniform() {
    PriorSpec p;
    p.kind = Kind::uniform_on_box;
    return p;
}

PriorSpec PriorSpec::truncated_gaussian(std::vector<double> mean, std::vector<double> var) {
    PriorSpec p;
    p.kind = Kind::truncated_gaussian;
    p.mean = std::move(mean);
    p.var = std::move(var);
    return p;
}

ParameterGrid build_grid(std::span<const double> lower, std::span<const double> upper,
                         std::span<const std::size_t> points_per_axis, const PriorSpec& prior) {
    const std::size_t dim = lower.size();
    if (dim == 0) {
        throw CapacityError("build_grid: empty box (zero axes)");
    }
    if (dim > kMaxGridDim) {
        throw CapacityError("build_grid: " + std::to_string(dim) + " axes exceeds the limit of " +
                            std::to_string(kMaxGridDim));
    }
    if (upper.size() != dim || points_per_axis.size() != dim) {
        throw DimensionError("build_grid: lower/upper/points_per_axis extents disagree");
    }
    require_finite(lower, "build_grid: lower");
    require_finite(upper, "build_grid: upper");
    if (prior.kind == PriorSpec::Kind::truncated_gaussian) {
        if (prior.mean.size() != dim || prior.var.size() != dim) {
            throw DimensionError("build_grid: prior mean/var extents disagree with the box");
        }
        require_finite(prior.mean, "build_grid: prior mean");
        for (const double v : prior.var) {
            if (!std::isfinite(v) || v <= 0.0) {
                throw DomainError("build_grid: prior variance must be positive and finite");
            }
        }
    }

    std::size_t count = 1;
    for (std::size_t ax = 0; ax < dim; ++ax) {
        if (!(lower[ax] < upper[ax])) {
            throw CapacityError("build_grid: axis " + std::to_string(ax) +
                                " has zero or negative extent");
        }
        if (points_per_axis[ax] < 2) {
            throw CapacityError("build_grid: axis " + std::to_string(ax) +
                                " needs at least 2 points");
        }
        if (count > kMaxGridNodes / points_per_axis[ax]) {
            throw CapacityError("build_grid: node count exceeds the limit of " +
                                std::to_string(kMaxGridNodes));
        }
        count *= points_per_axis[ax];
    }

    // Per-axis nodes and weights; the prior density factorizes over axes, so the node
    // weight is the product of per-axis (trapezoid coefficient x density) terms.
    std::vector<std::vector<double>> axis_nodes(dim);
    std::vector<std::vector<double>> axis_weights(dim);
    for (std::size_t ax = 0; ax < dim; ++ax) {
        const std::size_t pts = points_per_axis[ax];
        const double span_len = upper[ax] - lower[ax];
        axis_nodes[ax].resize(pts);
        axis_weights[ax].resize(pts);
        for (std::size_t i = 0; i < pts; ++i) {
            double x;
            if (i == 0) {
                x = lower[ax];
            } else if (i == pts - 1) {
                x = upper[ax];
            } else {
                x = lower[ax] + span_len * (static_cast<double>(i) / static_cast<double>(pts - 1));
                x = std::clamp(x, lower[ax], upper[ax]);
            }
            axis_nodes[ax][i] = x;
            double w = (i == 0 || i == pts - 1) ? 0.5 : 1.0;
            if (prior.kind == PriorSpec::Kind::truncated_gaussian) {
                const double d = x - prior.mean[ax];
                w *= std::exp(-0.5 * d * d / prior.var[ax]);
            }
            axis_weights[ax][i] = w;
        }
    }

    ParameterGrid grid;
    grid.id = next_grid_id();
    grid.dim = dim;
    grid.lower.assign(lower.begin(), lower.end());
    grid.upper.assign(upper.begin(), upper.end());
    grid.points_per_axis.assign(points_per_axis.begin(), points_per_axis.end());
    grid.nodes.resize(count * dim);
    grid.weights.resize(count);

    std::vector<std::size_t> idx(dim, 0);
    for (std::size_t i = 0; i < count; ++i) {
        double w = 1.0;
        for (std::size_t ax = 0; ax < dim; ++ax) {
            grid.nodes[i * dim + ax] = axis_nodes[ax][idx[ax]];
            w *= axis_weights[ax][idx[ax]];
        }
        grid.weights[i] = w;
        // odometer increment, last axis fastest
        for (std::size_t ax = dim; ax-- > 0;) {
            if (++idx[ax] < points_per_axis[ax]) {
                break;
            }
            idx[ax] = 0;
        }
    }

    const double total = kahan_sum(grid.weights);
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw NormalizationError("build_grid: prior mass vanished on the grid");
    }
    for (double& w : grid.weights) {
        w /= total;
    }
    return grid;
}

double DensityField::normalizer() const {
    return norm_const * std::exp(-log_offset);
}

DensityField make_density(const ParameterGrid& grid, std::vector<double> values) {
    if (values.size() != grid.node_count()) {
        throw DimensionError("make_density: value count does not match the grid");
    }
    for (const double v : values) {
        if (!std::isfinite(v) || v < 0.0) {
            throw DomainError("make_density: values must be finite and nonnegative");
        }
    }
    DensityField field;
    field.grid_id = grid.id;
    field.values = std::move(values);
    field.norm_const =
        kernels::weighted_sum(grid.weights.data(), field.values.data(), field.values.size());
    if (!(field.norm_const > 0.0) || !std::isfinite(field.norm_const)) {
        throw NormalizationError("make_density: normalizer is zero or non-finite (all mass lost)");
    }
    return field;
}

namespace {

void require_same_grid(const ParameterGrid& grid, const DensityField& field, const char* op) {
    if (field.grid_id != grid.id) {
        throw GridMismatchError(std::string(op) + ": field was built on a different grid");
    }
}

}  // namespace

double expectation(const ParameterGrid& grid, const DensityField& field,
                   std::span<const double> f_values) {
    require_same_grid(grid, field, "expectation");
    if (f_values.size() != grid.node_count()) {
        throw DimensionError("expectation: f values do not match the grid");
    }
    const double s = kernels::weighted_dot(grid.weights.data(), field.values.data(),
                                           f_values.data(), f_values.size());
    return s / field.norm_const;
}

double expectation(const ParameterGrid& grid, const DensityField& field,
                   const std::function<double(std::span<const double>)>& f) {
    std::vector<double> f_values(grid.node_count());
    for (std::size_t i = 0; i < f_values.size(); ++i) {
        f_values[i] = f(grid.node(i));
    }
    return expectation(grid, field, std::span<const double>(f_values));
}

double hellinger(const ParameterGrid& grid, const DensityField& a, const DensityField& b) {
    require_same_grid(grid, a, "hellinger");
    require_same_grid(grid, b, "hellinger");
    const double acc =
        kernels::hellinger_accum(grid.weights.data(), a.values.data(), b.values.data(),
                                 1.0 / a.norm_const, 1.0 / b.norm_const, grid.node_count());
    const double d2 = std::clamp(0.5 * acc, 0.0, 1.0);
    return std::sqrt(d2);
}

LipschitzGap hellinger_lipschitz_gap(const ParameterGrid& grid, const DensityField& a,
                                     const DensityField& b, std::span<const double> f_values) {
    const double mean_a = expectation(grid, a, f_values);
    const double mean_b = expectation(grid, b, f_values);
    std::vector<double> f_sq(f_values.size());
    for (std::size_t i = 0; i < f_sq.size(); ++i) {
        f_sq[i] = f_values[i] * f_values[i];
    }
    const double sq_a = expectation(grid, a, std::span<const double>(f_sq));
    const double sq_b = expectation(grid, b, std::span<const double>(f_sq));
    const double d = hellinger(grid, a, b);
    return LipschitzGap{std::abs(mean_a - mean_b),
                        2.0 * std::sqrt(std::max(sq_a + sq_b, 0.0)) * d};
}

}  // namespace randlik::measures
