#pragma once

// Self-check suite behind `randlik verify`: every inequality, exact identity and
// reproducibility contract the library relies on, packaged as named checks with fixed
// seeds. A check either returns normally or throws randlik::Error with a description
// of the first violation; run_all_checks converts that into per-check results.

#include <string>
#include <vector>

namespace randlik::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;  // empty when passed, first failure description otherwise
    double seconds = 0.0;
};

// Names of all registered checks in execution order.
std::vector<std::string> check_names();

// Runs one check by name; throws Error on violation, DomainError on unknown name.
void run_check(const std::string& name);

// Runs every registered check, capturing failures instead of throwing.
std::vector<CheckResult> run_all_checks();

}  // namespace randlik::verify
