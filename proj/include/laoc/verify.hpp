#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace laoc {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct VerifyOptions {
    /// Reduced episode counts and training budgets.
    bool quick = false;
    /// Negative control: scale every reservation coefficient by zero so the
    /// safe set degenerates to the naive one.
    bool corrupt_q = false;
    unsigned jobs = 0;
    std::uint64_t seed = 2024;
    /// Subset of criterion ids to run; empty means all.
    std::vector<int> only;
    /// Called as soon as each check finishes.
    std::function<void(const CheckResult&)> on_result;
};

/// Runs the acceptance suite. Every tolerance is a named constant in the
/// implementation.
std::vector<CheckResult> run_acceptance(const VerifyOptions& options);

/// "[PASS] 3 name: detail (1.2 s)"
std::string format_check(const CheckResult& result);

} // namespace laoc
