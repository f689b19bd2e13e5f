#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace isn {

struct SuiteResult {
    std::string name;
    int passed = 0;
    int total = 0;
    std::vector<std::string> failures;
    bool ok() const { return total > 0 && passed == total; }
};

// Every operator id the gradient suite has a fixture for (the full registry).
std::vector<std::string> grad_fixture_ops();

// Gradient check of one operator, dispatched through the registry so an
// injected faulty rule is exercised. Returns "" on pass, else a message
// naming the operator.
std::string grad_check_op(const std::string& op_id, uint64_t seed, double tol = 1e-4);

// Composite-stack checks on tiny configurations; which is one of
// "frontend", "attention", "dctcn".
std::string grad_check_composite(const std::string& which, uint64_t seed, double tol = 1e-4);

SuiteResult run_grad_suite();
SuiteResult run_shapes_suite();
SuiteResult run_oracle_suite();
SuiteResult run_determinism_suite();

// which: one suite name or "all". Unknown names are usage errors.
std::vector<SuiteResult> run_suites(const std::string& which);

// One line per suite, e.g. "grad: 24/24 pass", then failure details.
std::string format_report(const std::vector<SuiteResult>& results);

}  // namespace isn
