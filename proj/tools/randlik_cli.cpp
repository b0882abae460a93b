// Command-line front end: runs experiment configs, fits convergence rates from
// their CSV output, lists shipped configs, and runs the built-in verification
// suite. Exit codes: 0 success, 1 failed run/verification, 2 usage or config
// lookup errors.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "randlik/errors.hpp"
#include "randlik/expharness.hpp"
#include "randlik/verify.hpp"

namespace {

namespace fs = std::filesystem;

std::string config_dir() {
    if (const char* env = std::getenv("RANDLIK_CONFIG_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
#if defined(RANDLIK_DEFAULT_CONFIG_DIR)
    return RANDLIK_DEFAULT_CONFIG_DIR;
#else
    return "configs";
#endif
}

int cmd_run(const std::string& config_path) {
    const randlik::expharness::ExperimentConfig cfg =
        randlik::expharness::load_config(config_path);
    std::printf("experiment %s: %zu sweep points, %zu realizations each\n", cfg.id.c_str(),
                cfg.sweep.size(), cfg.realizations);
    std::printf("claim: %s\n", cfg.claim.c_str());
    const std::vector<randlik::expharness::ConvergenceRecord> records =
        randlik::expharness::run_experiment(cfg);
    randlik::expharness::write_csv(cfg.output, cfg, records);
    std::printf("wrote %s (%zu records)\n", cfg.output.c_str(), records.size());
    return 0;
}

int cmd_rates(const std::string& csv_path, const std::string& metric) {
    const randlik::expharness::CsvData data = randlik::expharness::read_csv(csv_path);
    const randlik::expharness::RateFit fit =
        randlik::expharness::fit_rate(data.records, metric);
    if (!data.claim.empty()) {
        std::printf("claim:     %s\n", data.claim.c_str());
    }
    std::printf("metric:    %s\n", metric.c_str());
    std::printf("fit uses:  %zu records (largest refinements)\n", fit.points_used);
    std::printf("slope:     %.6g   (value ~ C * refinement^slope)\n", fit.slope);
    std::printf("order:     %.6g\n", -fit.slope);
    std::printf("intercept: %.6g   (log C)\n", fit.intercept);
    std::printf("r_squared: %.6g\n", fit.r_squared);
    return 0;
}

int cmd_verify() {
    const std::vector<randlik::verify::CheckResult> results =
        randlik::verify::run_all_checks();
    const randlik::verify::CheckResult* first_failure = nullptr;
    double total = 0.0;
    for (const randlik::verify::CheckResult& r : results) {
        total += r.seconds;
        if (r.passed) {
            std::printf("[PASS] %-32s (%.2fs)\n", r.name.c_str(), r.seconds);
        } else {
            std::printf("[FAIL] %-32s %s\n", r.name.c_str(), r.detail.c_str());
            if (first_failure == nullptr) {
                first_failure = &r;
            }
        }
    }
    if (first_failure != nullptr) {
        std::printf("FAILED: %s: %s\n", first_failure->name.c_str(),
                    first_failure->detail.c_str());
        return 1;
    }
    std::printf("all %zu checks passed (%.2fs)\n", results.size(), total);
    return 0;
}

int cmd_list() {
    const fs::path dir = config_dir();
    if (!fs::is_directory(dir)) {
        std::fprintf(stderr, "error: config directory not found: %s\n", dir.string().c_str());
        return 1;
    }
    std::vector<fs::path> files;
    for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".cfg") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::fprintf(stderr, "error: no .cfg files in %s\n", dir.string().c_str());
        return 1;
    }
    for (const fs::path& file : files) {
        try {
            const randlik::expharness::ExperimentConfig cfg =
                randlik::expharness::load_config(file.string());
            std::printf("%-28s %s\n", file.filename().string().c_str(), cfg.claim.c_str());
        } catch (const std::exception& e) {
            std::printf("%-28s (unreadable: %s)\n", file.filename().string().c_str(), e.what());
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"randlik: convergence experiments for randomized misfits, randomized ODE "
                 "solvers, and the posterior distances they induce"};
    app.require_subcommand(1);

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "Run an experiment config and write its CSV");
    run->add_option("config", config_path, "path to a key = value experiment config")
        ->required();

    std::string csv_path;
    std::string metric;
    CLI::App* rates =
        app.add_subcommand("rates", "Fit a log-log convergence rate from an output CSV");
    rates->add_option("csv", csv_path, "CSV file produced by `run`")->required();
    rates->add_option("--metric", metric, "metric column to fit (e.g. rms_hellinger)")
        ->required();

    CLI::App* verify = app.add_subcommand("verify", "Run the built-in verification suite");
    CLI::App* list = app.add_subcommand("list", "List shipped experiment configs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "%s\n\n%s", e.what(), app.help().c_str());
        return 2;
    }

    try {
        if (run->parsed()) {
            return cmd_run(config_path);
        }
        if (rates->parsed()) {
            return cmd_rates(csv_path, metric);
        }
        if (verify->parsed()) {
            return cmd_verify();
        }
        if (list->parsed()) {
            return cmd_list();
        }
    } catch (const randlik::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
