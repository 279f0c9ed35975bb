#pragma once

#include <functional>
#include <span>
#include <vector>

namespace laoc {

/// Fills the gradient at x and returns the objective value.
using SmoothObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BoxPgdOptions {
    double lipschitz = 1.0;       ///< gradient Lipschitz bound (step = 1/L)
    double tolerance = 1e-8;      ///< on the norm of the projected-gradient mapping
    int max_iterations = 10'000;
};

struct BoxPgdResult {
    std::vector<double> x;
    double value = 0.0;
    double gradient_mapping_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Accelerated projected gradient descent (FISTA with gradient restart) for a
/// smooth convex objective over a box.
BoxPgdResult minimize_box(const SmoothObjective& objective, std::vector<double> start, double lower,
                          double upper, const BoxPgdOptions& options);

} // namespace laoc
