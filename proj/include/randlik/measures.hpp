#pragma once

// Discrete probability measures on tensor-product quadrature grids.
//
// A ParameterGrid carries trapezoid-rule nodes over a box together with weights that
// already include the prior density, renormalized to sum to one; every downstream
// expectation, normalizer, L^p norm and Hellinger distance is a weighted sum over the
// same fixed node set. Density fields are stored unnormalized together with their
// normalizer so ratios stay exact under rescaling.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace randlik::measures {

constexpr std::size_t kMaxGridDim = 4;
constexpr std::size_t kMaxGridNodes = 2'000'000;

struct PriorSpec {
    enum class Kind { uniform_on_box, truncated_gaussian };
    Kind kind = Kind::uniform_on_box;
    std::vector<double> mean;  // truncated_gaussian only, one entry per axis
    std::vector<double> var;   // truncated_gaussian only, positive, one entry per axis

    static PriorSpec uniform();
    static PriorSpec truncated_gaussian(std::vector<double> mean, std::vector<double> var);
};

struct ParameterGrid {
    std::uint64_t id = 0;  // identity used to reject cross-grid field mixing
    std::size_t dim = 0;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::size_t> points_per_axis;
    std::vector<double> nodes;    // node_count() x dim, row-major
    std::vector<double> weights;  // sums to 1 (compensated normalization)

    std::size_t node_count() const { return weights.size(); }
    std::span<const double> node(std::size_t i) const {
        return {nodes.data() + i * dim, dim};
    }
};

// Tensor trapezoid nodes x prior density, renormalized. Errors: inconsistent extents,
// lower >= upper on an axis, fewer than 2 points on an axis, dim > kMaxGridDim,
// node count > kMaxGridNodes, non-positive prior variance.
ParameterGrid build_grid(std::span<const double> lower, std::span<const double> upper,
                         std::span<const std::size_t> points_per_axis, const PriorSpec& prior);

struct DensityField {
    std::uint64_t grid_id = 0;
    std::vector<double> values;  // nonnegative, finite, unnormalized
    double norm_const = 0.0;     // sum_i w_i values_i  (> 0)
    double log_offset = 0.0;     // values were scaled by e^{log_offset}; see normalizer()

    // Normalizer with any stabilizing shift undone.
    double normalizer() const;
};

// Validates values (nonnegative, finite, at least one positive) and computes the
// normalizer against the grid weights. Errors: NormalizationError when all mass is
// lost, DimensionError on size mismatch.
DensityField make_density(const ParameterGrid& grid, std::vector<double> values);

// E[f] under the normalized field: sum_i w_i (values_i / norm_const) f(node_i).
double expectation(const ParameterGrid& grid, const DensityField& field,
                   const std::function<double(std::span<const double>)>& f);
double expectation(const ParameterGrid& grid, const DensityField& field,
                   std::span<const double> f_values);

// Hellinger distance between two normalized fields on the same grid:
// d^2 = (1/2) sum_i w_i (sqrt(a_i/Z_a) - sqrt(b_i/Z_b))^2, clamped into [0, 1].
double hellinger(const ParameterGrid& grid, const DensityField& a, const DensityField& b);

struct LipschitzGap {
    double lhs;  // |E_a[f] - E_b[f]|
    double rhs;  // 2 sqrt(E_a[f^2] + E_b[f^2]) * d_H(a, b)
};

// Expectation-difference bound in terms of the Hellinger distance; lhs <= rhs holds
// for every pair of fields and every square-integrable f.
LipschitzGap hellinger_lipschitz_gap(const ParameterGrid& grid, const DensityField& a,
                                     const DensityField& b, std::span<const double> f_values);

}  // namespace randlik::measures
