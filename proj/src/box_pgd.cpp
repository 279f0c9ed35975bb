#include "laoc/box_pgd.hpp"

#include <algorithm>
#include <cmath>

namespace laoc {

BoxPgdResult minimize_box(const SmoothObjective& objective, std::vector<double> start, double lower,
                          double upper, const BoxPgdOptions& options) {
    const std::size_t n = start.size();
    const double step = 1.0 / options.lipschitz;
    auto project = [&](double v) { return std::clamp(v, lower, upper); };

    std::vector<double> x(n), y(n), grad(n), x_next(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = project(start[i]);
    y = x;
    double momentum = 1.0;

    BoxPgdResult result;
    for (int it = 0; it < options.max_iterations; ++it) {
        // Convergence is judged at the current iterate, not the extrapolated point.
        objective(x, grad);
        double mapping = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = (x[i] - project(x[i] - step * grad[i])) / step;
            mapping += d * d;
        }
        mapping = std::sqrt(mapping);
        result.iterations = it;
        result.gradient_mapping_norm = mapping;
        if (mapping < options.tolerance) {
            result.converged = true;
            break;
        }

        objective(y, grad);
        for (std::size_t i = 0; i < n; ++i) x_next[i] = project(y[i] - step * grad[i]);

        // Restart when the step opposes the momentum direction.
        double restart = 0.0;
        for (std::size_t i = 0; i < n; ++i) restart += (y[i] - x_next[i]) * (x_next[i] - x[i]);
        double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        if (restart > 0.0) {
            momentum = 1.0;
            next_momentum = 1.0;
        }
        const double beta = (momentum - 1.0) / next_momentum;
        for (std::size_t i = 0; i < n; ++i) y[i] = x_next[i] + beta * (x_next[i] - x[i]);
        x = x_next;
        momentum = next_momentum;
        result.iterations = it + 1;
    }
    result.value = objective(x, grad);
    result.x = std::move(x);
    return result;
}

} // namespace laoc
