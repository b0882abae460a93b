#include "randlik/expharness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <utility>

#include "randlik/errors.hpp"
#include "randlik/forward.hpp"
#include "randlik/parallel.hpp"
#include "randlik/posterior.hpp"
#include "randlik/rng.hpp"

namespace randlik::expharness {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

double parse_double(std::string_view text, const std::string& key) {
    const std::string_view t = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ConfigError("config: key '" + key + "' has malformed number '" +
                          std::string(t) + "'");
    }
    return value;
}

std::uint64_t parse_u64(std::string_view text, const std::string& key) {
    const std::string_view t = trim(text);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ConfigError("config: key '" + key + "' has malformed integer '" +
                          std::string(t) + "'");
    }
    return value;
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) {
            ++i;
        }
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') {
            ++j;
        }
        if (j > i) {
            out.emplace_back(s.substr(i, j - i));
        }
        i = j;
    }
    return out;
}

// Which experiment kinds accept a key, and whether it must be present.
enum KindMask : unsigned {
    kSketch = 1u,
    kBound = 2u,
    kOdeStrong = 4u,
    kOdePost = 8u,
};
constexpr unsigned kAll = kSketch | kBound | kOdeStrong | kOdePost;
constexpr unsigned kGrid = kSketch | kBound | kOdePost;
constexpr unsigned kAffine = kSketch | kBound;
constexpr unsigned kOde = kOdeStrong | kOdePost;

struct KeySpec {
    const char* name;
    unsigned kinds;
    bool required;
};

constexpr KeySpec kSchema[] = {
    {"experiment.id", kAll, true},
    {"experiment.kind", kAll, true},
    {"experiment.claim", kAll, true},
    {"sweep", kAll, true},
    {"realizations", kAll, true},
    {"master_seed", kAll, true},
    {"output", kAll, false},
    {"prior.kind", kGrid, false},
    {"prior.lower", kGrid, true},
    {"prior.upper", kGrid, true},
    {"prior.points", kGrid, true},
    {"prior.mean", kGrid, false},
    {"prior.var", kGrid, false},
    {"observation.y", kGrid, true},
    {"noise.gamma", kGrid, true},
    {"forward.matrix", kAffine, true},
    {"forward.offset", kAffine, false},
    {"sketch.kind", kAffine, false},
    {"sketch.ell", kAffine, false},
    {"bound.c3", kBound, true},
    {"bound.p_star", kBound, false},
    {"bound.rho_star", kBound, false},
    {"ode.problem", kOde, true},
    {"ode.lambda", kOde, false},
    {"ode.rate", kOde, false},
    {"ode.dim", kOde, false},
    {"ode.horizon", kOde, false},
    {"ode.param", kOdeStrong, true},
    {"ode.stepper", kOde, true},
    {"ode.noise", kOde, true},
    {"ode.p", kOde, false},
    {"ode.c_xi", kOde, false},
    {"ode.times", kOde, true},
    {"ode.tau_star", kOdeStrong, true},
    {"ode.c_f", kOdeStrong, true},
    {"ode.c_psi", kOdeStrong, true},
};

unsigned kind_bit(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::sketch_rate: return kSketch;
        case ExperimentKind::bound_verify: return kBound;
        case ExperimentKind::ode_strong_rate: return kOdeStrong;
        case ExperimentKind::ode_posterior_rate: return kOdePost;
    }
    return 0;
}

// Raw key/value view of the file plus typed, presence-checked accessors.
class RawConfig {
  public:
    explicit RawConfig(std::string_view text) {
        std::size_t pos = 0;
        std::size_t line_no = 0;
        while (pos <= text.size()) {
            const std::size_t nl = text.find('\n', pos);
            std::string_view line =
                text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            line = trim(line);
            if (line.empty() || line.front() == '#') {
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": expected key = value");
            }
            const std::string key(trim(line.substr(0, eq)));
            const std::string value(trim(line.substr(eq + 1)));
            if (key.empty()) {
                throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
            }
            if (!kv_.emplace(key, value).second) {
                throw ConfigError("config: duplicate key '" + key + "'");
            }
        }
    }

    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    const std::string& raw(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) {
            throw ConfigError("config: missing required key '" + key + "'");
        }
        return it->second;
    }

    std::string quoted(const std::string& key) const {
        const std::string& v = raw(key);
        if (v.size() < 2 || v.front() != '"' || v.back() != '"') {
            throw ConfigError("config: key '" + key + "' must be a double-quoted string");
        }
        return v.substr(1, v.size() - 2);
    }

    double number(const std::string& key) const { return parse_double(raw(key), key); }
    std::uint64_t integer(const std::string& key) const { return parse_u64(raw(key), key); }

    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        for (const std::string& tok : split_ws(raw(key))) {
            out.push_back(parse_double(tok, key));
        }
        if (out.empty()) {
            throw ConfigError("config: key '" + key + "' must list at least one number");
        }
        return out;
    }

    std::vector<std::uint64_t> integers(const std::string& key) const {
        std::vector<std::uint64_t> out;
        for (const std::string& tok : split_ws(raw(key))) {
            out.push_back(parse_u64(tok, key));
        }
        if (out.empty()) {
            throw ConfigError("config: key '" + key + "' must list at least one integer");
        }
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return kv_; }

  private:
    std::map<std::string, std::string> kv_;
};

ExperimentKind parse_kind(const std::string& text) {
    if (text == "sketch-rate") {
        return ExperimentKind::sketch_rate;
    }
    if (text == "ode-strong-rate") {
        return ExperimentKind::ode_strong_rate;
    }
    if (text == "ode-posterior-rate") {
        return ExperimentKind::ode_posterior_rate;
    }
    if (text == "bound-verify") {
        return ExperimentKind::bound_verify;
    }
    throw ConfigError("config: unknown experiment.kind '" + text + "'");
}

void check_schema(const RawConfig& raw, ExperimentKind kind) {
    const unsigned bit = kind_bit(kind);
    for (const auto& [key, value] : raw.entries()) {
        const KeySpec* spec = nullptr;
        for (const KeySpec& candidate : kSchema) {
            if (key == candidate.name) {
                spec = &candidate;
                break;
            }
        }
        if (spec == nullptr) {
            throw ConfigError("config: unknown key '" + key + "'");
        }
        if ((spec->kinds & bit) == 0) {
            throw ConfigError("config: key '" + key +
                              "' is not used by this experiment kind");
        }
    }
    for (const KeySpec& spec : kSchema) {
        if (spec.required && (spec.kinds & bit) != 0 && !raw.has(spec.name)) {
            throw ConfigError("config: missing required key '" + std::string(spec.name) + "'");
        }
    }
}

void parse_grid_block(const RawConfig& raw, ExperimentConfig& cfg) {
    const std::string prior_kind = raw.has("prior.kind") ? raw.raw("prior.kind") : "uniform";
    cfg.lower = raw.numbers("prior.lower");
    cfg.upper = raw.numbers("prior.upper");
    const std::vector<std::uint64_t> pts = raw.integers("prior.points");
    cfg.points.assign(pts.begin(), pts.end());
    if (prior_kind == "uniform") {
        if (raw.has("prior.mean") || raw.has("prior.var")) {
            throw ConfigError("config: prior.mean/prior.var require a truncated-gaussian prior");
        }
        cfg.prior = measures::PriorSpec::uniform();
    } else if (prior_kind == "truncated-gaussian") {
        cfg.prior = measures::PriorSpec::truncated_gaussian(raw.numbers("prior.mean"),
                                                            raw.numbers("prior.var"));
    } else {
        throw ConfigError("config: unknown prior.kind '" + prior_kind + "'");
    }
    cfg.y = raw.numbers("observation.y");
    cfg.gamma = raw.numbers("noise.gamma");
    if (cfg.gamma.size() == 1 && cfg.y.size() > 1) {
        cfg.gamma.assign(cfg.y.size(), cfg.gamma.front());
    }
    if (cfg.gamma.size() != cfg.y.size()) {
        throw ConfigError("config: noise.gamma must have one entry or one per observation");
    }
}

void parse_affine_block(const RawConfig& raw, ExperimentConfig& cfg) {
    cfg.matrix = raw.numbers("forward.matrix");
    const std::size_t m = cfg.lower.size();
    const std::size_t j = cfg.y.size();
    if (cfg.matrix.size() != j * m) {
        throw ConfigError("config: forward.matrix must have observations x dim entries");
    }
    cfg.offset = raw.has("forward.offset") ? raw.numbers("forward.offset")
                                           : std::vector<double>(j, 0.0);
    if (cfg.offset.size() != j) {
        throw ConfigError("config: forward.offset must have one entry per observation");
    }
    const std::string sketch_kind = raw.has("sketch.kind") ? raw.raw("sketch.kind")
                                                           : "ell-sparse";
    if (sketch_kind == "ell-sparse") {
        if (!raw.has("sketch.ell")) {
            throw ConfigError("config: missing required key 'sketch.ell'");
        }
        cfg.sketch = randmisfit::ell_sparse_sketch(raw.number("sketch.ell"));
    } else if (sketch_kind == "gaussian") {
        if (raw.has("sketch.ell")) {
            throw ConfigError("config: sketch.ell only applies to ell-sparse sketches");
        }
        cfg.sketch = randmisfit::gaussian_sketch();
    } else {
        throw ConfigError("config: unknown sketch.kind '" + sketch_kind + "'");
    }
}

void parse_ode_block(const RawConfig& raw, ExperimentConfig& cfg) {
    cfg.ode_problem = raw.raw("ode.problem");
    if (cfg.ode_problem != "linear-decay" && cfg.ode_problem != "rotation" &&
        cfg.ode_problem != "logistic" && cfg.ode_problem != "zero-field") {
        throw ConfigError("config: unknown ode.problem '" + cfg.ode_problem + "'");
    }
    if (raw.has("ode.lambda")) {
        cfg.ode_lambda = raw.number("ode.lambda");
    }
    if (raw.has("ode.rate")) {
        cfg.ode_rate = raw.number("ode.rate");
    }
    if (raw.has("ode.dim")) {
        cfg.ode_dim = static_cast<std::size_t>(raw.integer("ode.dim"));
    }
    if (raw.has("ode.horizon")) {
        cfg.horizon = raw.number("ode.horizon");
    }
    const std::string stepper = raw.raw("ode.stepper");
    if (stepper == "euler" || stepper == "explicit-euler") {
        cfg.stepper.kind = probode::Stepper::Kind::explicit_euler;
    } else if (stepper == "rk4") {
        cfg.stepper.kind = probode::Stepper::Kind::rk4;
    } else {
        throw ConfigError("config: unknown ode.stepper '" + stepper + "'");
    }
    const std::string noise = raw.raw("ode.noise");
    if (noise == "gaussian-increment") {
        cfg.noise_process.kind = probode::NoiseProcess::Kind::gaussian_increment;
    } else if (noise == "uniform-increment") {
        cfg.noise_process.kind = probode::NoiseProcess::Kind::uniform_increment;
    } else if (noise == "zero") {
        cfg.noise_process.kind = probode::NoiseProcess::Kind::zero;
    } else {
        throw ConfigError("config: unknown ode.noise '" + noise + "'");
    }
    if (cfg.noise_process.kind == probode::NoiseProcess::Kind::zero) {
        cfg.noise_process.p = raw.has("ode.p") ? raw.number("ode.p") : 1.5;
        cfg.noise_process.amplitude = raw.has("ode.c_xi") ? raw.number("ode.c_xi") : 0.0;
    } else {
        if (!raw.has("ode.p") || !raw.has("ode.c_xi")) {
            throw ConfigError("config: ode.p and ode.c_xi are required for nonzero noise");
        }
        cfg.noise_process.p = raw.number("ode.p");
        cfg.noise_process.amplitude = raw.number("ode.c_xi");
    }
    cfg.obs_times = raw.numbers("ode.times");
}

}  // namespace

ExperimentConfig parse_config_text(std::string_view text) {
    const RawConfig raw(text);
    ExperimentConfig cfg;
    cfg.kind = parse_kind(raw.raw("experiment.kind"));
    check_schema(raw, cfg.kind);

    cfg.id = raw.raw("experiment.id");
    if (cfg.id.empty() || cfg.id.find(',') != std::string::npos) {
        throw ConfigError("config: experiment.id must be nonempty and comma-free");
    }
    cfg.claim = raw.quoted("experiment.claim");
    cfg.sweep = raw.integers("sweep");
    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        if (cfg.sweep[i] == 0 || (i > 0 && cfg.sweep[i] <= cfg.sweep[i - 1])) {
            throw ConfigError("config: sweep must be strictly increasing positive integers");
        }
    }
    cfg.realizations = static_cast<std::size_t>(raw.integer("realizations"));
    if (cfg.realizations < 2) {
        throw ConfigError("config: realizations must be at least 2");
    }
    cfg.master_seed = raw.integer("master_seed");
    cfg.output = raw.has("output") ? raw.raw("output") : cfg.id + ".csv";

    switch (cfg.kind) {
        case ExperimentKind::sketch_rate:
            parse_grid_block(raw, cfg);
            parse_affine_block(raw, cfg);
            break;
        case ExperimentKind::bound_verify:
            parse_grid_block(raw, cfg);
            parse_affine_block(raw, cfg);
            cfg.c3 = raw.number("bound.c3");
            if (raw.has("bound.p_star")) {
                cfg.p_star = raw.number("bound.p_star");
            }
            if (raw.has("bound.rho_star")) {
                cfg.rho_star = raw.number("bound.rho_star");
            }
            break;
        case ExperimentKind::ode_strong_rate:
            parse_ode_block(raw, cfg);
            cfg.ode_param = raw.numbers("ode.param");
            cfg.tau_star = raw.number("ode.tau_star");
            cfg.c_f = raw.number("ode.c_f");
            cfg.c_psi = raw.number("ode.c_psi");
            break;
        case ExperimentKind::ode_posterior_rate:
            parse_grid_block(raw, cfg);
            parse_ode_block(raw, cfg);
            break;
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("config not found: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_config_text(buffer.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

namespace {

probode::OdeProblem make_problem(const ExperimentConfig& cfg, bool with_constants) {
    probode::OdeProblem problem;
    if (cfg.ode_problem == "linear-decay") {
        problem = probode::linear_decay_problem(cfg.ode_lambda);
    } else if (cfg.ode_problem == "rotation") {
        problem = probode::rotation_problem();
    } else if (cfg.ode_problem == "logistic") {
        problem = probode::logistic_problem(cfg.ode_rate);
    } else {
        problem = probode::zero_field_problem(cfg.ode_dim);
    }
    problem.horizon = cfg.horizon;
    if (with_constants) {
        problem.lipschitz_data = probode::OdeProblem::LipschitzData{cfg.tau_star, cfg.c_f};
        problem.truncation_data = probode::OdeProblem::TruncationData{cfg.c_psi};
    }
    return problem;
}

struct RecordSink {
    const ExperimentConfig& cfg;
    std::vector<ConvergenceRecord> records;

    void push(std::uint64_t refinement, const char* metric, double value, double stderr_) {
        if (!std::isfinite(value) || !(stderr_ >= 0.0)) {
            throw Error("experiment produced a non-finite record for metric " +
                        std::string(metric));
        }
        records.push_back(ConvergenceRecord{cfg.id, refinement, metric, value, stderr_,
                                            static_cast<std::uint64_t>(cfg.realizations)});
    }
};

template <typename Body>
void for_each_sweep_point(const ExperimentConfig& cfg, Body&& body) {
    for (std::size_t si = 0; si < cfg.sweep.size(); ++si) {
        try {
            body(cfg.sweep[si], rng::derive_seed(cfg.master_seed, si));
        } catch (const std::exception& e) {
            throw Error("sweep point " + std::to_string(cfg.sweep[si]) + ": " + e.what());
        }
    }
}

std::vector<ConvergenceRecord> run_sketch(const ExperimentConfig& cfg, bool bounds) {
    const measures::ParameterGrid grid =
        measures::build_grid(cfg.lower, cfg.upper, cfg.points, cfg.prior);
    const forward::NoiseModel noise = forward::make_noise_model(cfg.gamma);
    const forward::Observation obs = forward::make_observation(cfg.y);
    const std::size_t j = cfg.y.size();
    const forward::ForwardModelSpec spec =
        forward::affine_model(j, cfg.lower.size(), cfg.matrix, cfg.offset);

    const std::size_t nodes = grid.node_count();
    std::vector<double> whitened(nodes * j);
    std::vector<double> phi(nodes);
    std::vector<double> residual(j);
    for (std::size_t i = 0; i < nodes; ++i) {
        const std::vector<double> g = forward::evaluate_forward(spec, grid.node(i));
        for (std::size_t c = 0; c < j; ++c) {
            residual[c] = g[c] - obs.y[c];
        }
        phi[i] = forward::quadratic_misfit(residual, noise);
        const std::vector<double> w = forward::whiten_residual(residual, noise);
        std::copy(w.begin(), w.end(), whitened.begin() + i * j);
    }
    const posterior::PotentialField potential = posterior::make_potential_field(grid, phi);
    const measures::DensityField exact = posterior::exact_posterior(grid, potential);

    RecordSink sink{cfg, {}};
    for_each_sweep_point(cfg, [&](std::uint64_t n, std::uint64_t point_seed) {
        const std::size_t m = cfg.realizations;
        std::vector<double> values(m * nodes);
        std::vector<std::uint64_t> seeds(m);
        parallel_for(0, m, [&](std::size_t r) {
            const std::uint64_t seed = rng::derive_seed(point_seed, r);
            seeds[r] = seed;
            const randmisfit::SketchEnsemble sketch =
                randmisfit::sample_ensemble(cfg.sketch, j, static_cast<std::size_t>(n), seed);
            double* row = values.data() + r * nodes;
            for (std::size_t i = 0; i < nodes; ++i) {
                row[i] = randmisfit::randomized_misfit_whitened(
                    sketch, {whitened.data() + i * j, j});
            }
        });
        const posterior::RandomPotentialEnsemble ensemble =
            posterior::make_ensemble(grid, m, std::move(values), std::move(seeds));
        if (!bounds) {
            const posterior::RmsHellinger rms =
                posterior::mean_square_hellinger(grid, exact, ensemble);
            const posterior::MarginalHellinger marg =
                posterior::marginal_hellinger(grid, exact, ensemble);
            sink.push(n, "rms_hellinger", rms.rms, rms.stderr_);
            sink.push(n, "marginal_hellinger", marg.value, marg.stderr_);
        } else {
            const posterior::BoundConstants constants = posterior::bounded_potential_constants(
                grid, potential, ensemble, cfg.c3, cfg.p_star, cfg.rho_star);
            const posterior::BoundVerification mb =
                posterior::verify_marginal_bound(grid, potential, ensemble, constants);
            const posterior::BoundVerification sb =
                posterior::verify_sample_bound(grid, potential, ensemble, constants);
            const posterior::MarginalHellinger marg =
                posterior::marginal_hellinger(grid, exact, ensemble);
            const posterior::RmsHellinger rms =
                posterior::mean_square_hellinger(grid, exact, ensemble);
            sink.push(n, "marginal_bound_lhs", mb.lhs, marg.stderr_);
            sink.push(n, "marginal_bound_rhs", mb.rhs, mb.rhs_slack / 3.0);
            sink.push(n, "sample_bound_lhs", sb.lhs, rms.stderr_);
            sink.push(n, "sample_bound_rhs", sb.rhs, sb.rhs_slack / 3.0);
        }
    });
    return std::move(sink.records);
}

std::vector<ConvergenceRecord> run_ode_posterior(const ExperimentConfig& cfg) {
    const measures::ParameterGrid grid =
        measures::build_grid(cfg.lower, cfg.upper, cfg.points, cfg.prior);
    const auto problem =
        std::make_shared<const probode::OdeProblem>(make_problem(cfg, false));
    if (grid.dim != problem->state_dim) {
        throw ConfigError("config: grid dimension must match the ode state dimension");
    }
    const std::size_t j = problem->state_dim * cfg.obs_times.size();
    if (cfg.y.size() != j) {
        throw ConfigError("config: observation.y must have state_dim x times entries");
    }
    const forward::NoiseModel noise = forward::make_noise_model(cfg.gamma);
    const forward::Observation obs = forward::make_observation(cfg.y);

    probode::RandomOdeForwardModel model;
    model.problem = problem;
    model.stepper = cfg.stepper;
    model.noise = cfg.noise_process;
    model.times.times = cfg.obs_times;

    const std::size_t nodes = grid.node_count();
    std::vector<double> phi(nodes);
    std::vector<double> residual(j);
    for (std::size_t i = 0; i < nodes; ++i) {
        const std::vector<double> g =
            probode::solve_reference(*problem, grid.node(i), model.times);
        for (std::size_t c = 0; c < j; ++c) {
            residual[c] = g[c] - obs.y[c];
        }
        phi[i] = forward::quadratic_misfit(residual, noise);
    }
    const posterior::PotentialField potential = posterior::make_potential_field(grid, phi);
    const measures::DensityField exact = posterior::exact_posterior(grid, potential);

    RecordSink sink{cfg, {}};
    for_each_sweep_point(cfg, [&](std::uint64_t n, std::uint64_t point_seed) {
        model.num_steps = static_cast<std::size_t>(n);
        const std::size_t m = cfg.realizations;
        std::vector<double> values(m * nodes);
        std::vector<std::uint64_t> seeds(m);
        parallel_for(0, m, [&](std::size_t r) {
            const std::uint64_t seed = rng::derive_seed(point_seed, r);
            seeds[r] = seed;
            const probode::NoiseDraws draws = probode::sample_noise(model, seed);
            double* row = values.data() + r * nodes;
            std::vector<double> res(j);
            for (std::size_t i = 0; i < nodes; ++i) {
                const std::vector<double> g =
                    probode::solve_randomized(model, grid.node(i), draws);
                for (std::size_t c = 0; c < j; ++c) {
                    res[c] = g[c] - obs.y[c];
                }
                row[i] = forward::quadratic_misfit(res, noise);
            }
        });
        const posterior::RandomPotentialEnsemble ensemble =
            posterior::make_ensemble(grid, m, std::move(values), std::move(seeds));
        const posterior::RmsHellinger rms =
            posterior::mean_square_hellinger(grid, exact, ensemble);
        const posterior::MarginalHellinger marg =
            posterior::marginal_hellinger(grid, exact, ensemble);
        sink.push(n, "rms_hellinger", rms.rms, rms.stderr_);
        sink.push(n, "marginal_hellinger", marg.value, marg.stderr_);
    });
    return std::move(sink.records);
}

std::vector<ConvergenceRecord> run_ode_strong(const ExperimentConfig& cfg) {
    const auto problem = std::make_shared<const probode::OdeProblem>(make_problem(cfg, true));
    if (cfg.ode_param.size() != problem->state_dim) {
        throw ConfigError("config: ode.param must have state_dim entries");
    }
    probode::RandomOdeForwardModel model;
    model.problem = problem;
    model.stepper = cfg.stepper;
    model.noise = cfg.noise_process;
    model.times.times = cfg.obs_times;

    RecordSink sink{cfg, {}};
    for_each_sweep_point(cfg, [&](std::uint64_t n, std::uint64_t point_seed) {
        model.num_steps = static_cast<std::size_t>(n);
        const probode::StrongErrorEstimate est = probode::strong_error_estimate(
            model, cfg.ode_param, 1, cfg.realizations, point_seed);
        const double bound = probode::strong_error_bound(model, 1);
        sink.push(n, "strong_error", est.mean, est.stderr_);
        sink.push(n, "strong_error_bound", bound, 0.0);
    });
    return std::move(sink.records);
}

}  // namespace

std::vector<ConvergenceRecord> run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::sketch_rate:
            return run_sketch(cfg, false);
        case ExperimentKind::bound_verify:
            return run_sketch(cfg, true);
        case ExperimentKind::ode_strong_rate:
            return run_ode_strong(cfg);
        case ExperimentKind::ode_posterior_rate:
            return run_ode_posterior(cfg);
    }
    throw ConfigError("config: unknown experiment kind");
}

namespace {

std::string format_real(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

}  // namespace

std::string csv_text(const ExperimentConfig& config,
                     std::span<const ConvergenceRecord> records) {
    std::string out = "# claim: " + config.claim + "\n";
    out += "experiment_id,refinement,metric,value,stderr,seeds_used\n";
    for (const ConvergenceRecord& r : records) {
        out += r.experiment_id;
        out += ',';
        out += std::to_string(r.refinement);
        out += ',';
        out += r.metric;
        out += ',';
        out += format_real(r.value);
        out += ',';
        out += format_real(r.stderr_);
        out += ',';
        out += std::to_string(r.seeds_used);
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const ExperimentConfig& config,
               std::span<const ConvergenceRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open output file: " + path);
    }
    out << csv_text(config, records);
    if (!out) {
        throw Error("failed writing output file: " + path);
    }
}

CsvData read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open csv file: " + path);
    }
    CsvData data;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            const std::string prefix = "# claim: ";
            if (line.rfind(prefix, 0) == 0) {
                data.claim = line.substr(prefix.size());
            }
            continue;
        }
        if (!header_seen) {
            if (line != "experiment_id,refinement,metric,value,stderr,seeds_used") {
                throw Error("csv: unexpected header '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 6) {
            throw Error("csv: malformed row '" + line + "'");
        }
        ConvergenceRecord r;
        r.experiment_id = fields[0];
        r.refinement = parse_u64(fields[1], "refinement");
        r.metric = fields[2];
        r.value = parse_double(fields[3], "value");
        r.stderr_ = parse_double(fields[4], "stderr");
        r.seeds_used = parse_u64(fields[5], "seeds_used");
        data.records.push_back(std::move(r));
    }
    if (!header_seen) {
        throw Error("csv: missing header row");
    }
    return data;
}

RateFit fit_rate(std::span<const ConvergenceRecord> records, std::string_view metric) {
    std::vector<const ConvergenceRecord*> rows;
    for (const ConvergenceRecord& r : records) {
        if (r.metric == metric) {
            rows.push_back(&r);
        }
    }
    if (rows.size() < 3) {
        throw DomainError("fit_rate: need at least 3 records for metric '" +
                          std::string(metric) + "'");
    }
    std::sort(rows.begin(), rows.end(), [](const ConvergenceRecord* a,
                                           const ConvergenceRecord* b) {
        return a->refinement < b->refinement;
    });
    const std::size_t keep = std::max<std::size_t>(3, (rows.size() + 1) / 2);
    rows.erase(rows.begin(), rows.end() - static_cast<std::ptrdiff_t>(keep));

    std::vector<double> x(keep), yv(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        if (!(rows[i]->value > 0.0)) {
            throw DomainError("fit_rate: metric values must be positive");
        }
        x[i] = std::log(static_cast<double>(rows[i]->refinement));
        yv[i] = std::log(rows[i]->value);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        mx += x[i];
        my += yv[i];
    }
    mx /= static_cast<double>(keep);
    my /= static_cast<double>(keep);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (yv[i] - my);
        syy += (yv[i] - my) * (yv[i] - my);
    }
    RateFit fit;
    fit.points_used = keep;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        const double pred = fit.intercept + fit.slope * x[i];
        ss_res += (yv[i] - pred) * (yv[i] - pred);
    }
    fit.r_squared = syy < 1e-30 ? (ss_res < 1e-30 ? 1.0 : 0.0) : 1.0 - ss_res / syy;
    return fit;
}

}  // namespace randlik::expharness
