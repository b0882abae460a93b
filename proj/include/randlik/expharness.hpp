#pragma once
// Config-driven convergence experiments: parse a flat key = value config, sweep a
// refinement parameter (sketch count or step count), emit one CSV record per
// (sweep point, metric), and fit log-log rates on the asymptotic half of the sweep.
//
// Reproducibility contract: records depend only on (config, master_seed). Sweep
// point k uses point_seed = derive_seed(master_seed, k); realization m of that point
// uses derive_seed(point_seed, m). Workers write into per-realization slots and all
// reductions run in fixed serial order, so RANDLIK_THREADS never changes a byte of
// the output.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "randlik/measures.hpp"
#include "randlik/probode.hpp"
#include "randlik/randmisfit.hpp"

namespace randlik::expharness {

enum class ExperimentKind { sketch_rate, ode_strong_rate, ode_posterior_rate, bound_verify };

struct ExperimentConfig {
    std::string id;
    ExperimentKind kind = ExperimentKind::sketch_rate;
    std::string claim;
    std::vector<std::uint64_t> sweep;  // strictly increasing refinement values
    std::size_t realizations = 0;      // M per sweep point, >= 2
    std::uint64_t master_seed = 0;
    std::string output;  // CSV path used by the CLI run command

    // Parameter grid (sketch-rate, bound-verify, ode-posterior-rate).
    measures::PriorSpec prior = measures::PriorSpec::uniform();
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::size_t> points;

    // Data side (sketch-rate, bound-verify, ode-posterior-rate).
    std::vector<double> gamma;  // J entries (a single entry broadcasts)
    std::vector<double> y;      // J entries

    // Affine forward map (sketch-rate, bound-verify).
    std::vector<double> matrix;  // J x m, row-major
    std::vector<double> offset;  // J entries, defaults to zeros
    randmisfit::SketchDistribution sketch = randmisfit::ell_sparse_sketch(0.0);

    // Bound verification (bound-verify).
    double c3 = 0.0;
    double p_star = std::numeric_limits<double>::infinity();
    std::optional<double> rho_star;

    // Randomized ODE (ode-strong-rate, ode-posterior-rate).
    std::string ode_problem;           // linear-decay | rotation | logistic | zero-field
    double ode_lambda = -1.0;          // linear-decay
    double ode_rate = 1.0;             // logistic
    std::size_t ode_dim = 1;           // zero-field
    double horizon = 1.0;
    std::vector<double> ode_param;     // fixed parameter (ode-strong-rate)
    probode::Stepper stepper{probode::Stepper::Kind::explicit_euler};
    probode::NoiseProcess noise_process;
    std::vector<double> obs_times;
    double tau_star = 0.0, c_f = 0.0, c_psi = 0.0;  // ode-strong-rate bound constants
};

// Parses and validates config text. Lines are `key = value`; blank lines and lines
// starting with # are skipped; the claim value is double-quoted; list values are
// whitespace-separated. Unknown keys, missing required keys, and malformed values
// all raise ConfigError naming the key.
ExperimentConfig parse_config_text(std::string_view text);

// Reads and parses a config file; missing file raises ConfigError.
ExperimentConfig load_config(const std::string& path);

struct ConvergenceRecord {
    std::string experiment_id;
    std::uint64_t refinement = 0;
    std::string metric;
    double value = 0.0;
    double stderr_ = 0.0;
    std::uint64_t seeds_used = 0;
};

// Runs the sweep, serially over sweep points and parallel over realizations.
// Metrics per kind, in emission order:
//   sketch-rate / ode-posterior-rate: rms_hellinger, marginal_hellinger
//   ode-strong-rate:                  strong_error, strong_error_bound
//   bound-verify:                     marginal_bound_lhs, marginal_bound_rhs,
//                                     sample_bound_lhs, sample_bound_rhs
// Bound rhs records carry stderr = (3-sigma widening)/3 so a check of
// lhs <= rhs + 3 stderr matches the Monte Carlo slack convention.
std::vector<ConvergenceRecord> run_experiment(const ExperimentConfig& config);

// CSV layout: `# claim: <text>` comment, then the header
// experiment_id,refinement,metric,value,stderr,seeds_used with %.17g reals and UNIX
// newlines.
std::string csv_text(const ExperimentConfig& config,
                     std::span<const ConvergenceRecord> records);
void write_csv(const std::string& path, const ExperimentConfig& config,
               std::span<const ConvergenceRecord> records);

struct CsvData {
    std::string claim;
    std::vector<ConvergenceRecord> records;
};

CsvData read_csv(const std::string& path);

struct RateFit {
    double slope = 0.0;      // log value ~ slope * log refinement + intercept
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points_used = 0;
};

// Least squares on the records of one metric, using only the largest
// max(3, (n+1)/2) refinements (the asymptotic regime). Decaying metrics give a
// negative slope; report -slope as the convergence order. Requires >= 3 records
// with positive values.
RateFit fit_rate(std::span<const ConvergenceRecord> records, std::string_view metric);

}  // namespace randlik::expharness
