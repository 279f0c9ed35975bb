#pragma once

#include "laoc/model.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace laoc {

/// Feasibility slack on the cumulative-risk constraint (risk units).
inline constexpr double kFeasibilityTol = 1e-8;

/// Constants of the safe action set for one safety level lambda.
struct SafeSetParams {
    double lambda = 0.0;
    double c1 = 1.0;
    double c2 = 1.0;
    double lambda0 = 0.0; ///< sqrt(1 + lambda) - 1, evaluated as lambda / (sqrt(1 + lambda) + 1)
    /// Reservation coefficients q_0 .. q_{H-1}, followed by q_H = 0.
    std::vector<double> q;

    /// Builds the schedule with C1 = 1 + 1/sqrt(1+lambda) and C2 from
    /// choose_c2 unless given explicitly. lambda must be positive.
    static SafeSetParams build(const SystemParams& params, double lambda,
                               std::optional<double> c1 = std::nullopt,
                               std::optional<double> c2 = std::nullopt);

    int horizon() const noexcept { return static_cast<int>(q.size()) - 1; }
};

/// C1 = 1 + 1/sqrt(1 + lambda).
double default_c1(double lambda);

/// q_h = C1 (1 + 1/lambda) (beta/2) sum_{k=0}^{H-h-1} (C2 sigma_x^2)^k for
/// h = 0..H-1 and q_H = 0. Throws InvalidSafety for lambda <= 0 or C < 1.
std::vector<double> compute_q_schedule(const SystemParams& params, double lambda, double c1,
                                       double c2);

struct C2Choice {
    double value = 1.0;
    /// True when the objective was still decreasing at the search cap, in
    /// which case value == c_max.
    bool at_cap = false;
};

/// Objective c/(c-1) sigma_u^2 (1 - (c sigma_x^2)^n)/(1 - c sigma_x^2); the
/// removable singularity at c sigma_x^2 = 1 is evaluated as its limit n.
double c2_objective(double c, double sigma_x, double sigma_u, int n);

/// Minimizer of c2_objective over (1, c_max] for n = H (golden section).
C2Choice choose_c2(const SystemParams& params, int horizon, double c_max = 10.0);

/// q_h (x_h + g(u) - x_h^dag - g(u_h^dag))^2. The demand cancels between the
/// two trajectories, so this is known before w_h is observed.
double reservation_phi(double action, double level, double prior_level, double prior_action,
                       double q, const PumpCurve& pump = PumpCurve::identity());

/// Everything the round-h constraint depends on.
struct SafeSetQuery {
    double prev_live_risk = 0.0; ///< R_{h-1}
    double prior_risk = 0.0;     ///< R^dag_h (already including round h)
    double level = 0.0;          ///< x_h
    double prior_level = 0.0;    ///< x^dag_h
    double prior_action = 0.0;   ///< u^dag_h
    double q = 0.0;              ///< q_h
    double lambda = 0.0;

    double budget() const noexcept { return (1.0 + lambda) * prior_risk - prev_live_risk; }
};

/// R_{h-1} + r(x_h, u) + phi_h(u) - (1+lambda) R^dag_h; the action is safe
/// when this is <= 0.
double constraint_value(const SafeSetQuery& query, double action, const SystemParams& params);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double u) const noexcept { return u >= lo && u <= hi; }
    double width() const noexcept { return hi - lo; }
};

/// Closed-form safe interval for the scalar action with the identity pump.
/// Endpoints are tightened so the constraint holds (<= 0) at both of them in
/// floating point. The prior action is always included when it satisfies the
/// constraint within kFeasibilityTol. Throws EmptySet otherwise.
Interval safe_interval(const SafeSetQuery& query, const SystemParams& params);

/// Nearest point of the interval.
double map_projection(double ml_action, const Interval& interval);

struct LinearMap {
    double action = 0.0;
    double rho = 1.0;
};

/// Largest rho in [0,1] with g(rho) <= 0, where g is the constraint along the
/// segment from the prior action (rho = 0) to the ML action (rho = 1).
/// Bisection stops once the bracket is below rho_tol; 0 runs it until the
/// bracket ends are adjacent doubles. Throws
/// InvariantViolation when g(0) > kFeasibilityTol.
LinearMap map_linear(double ml_action, double prior_action,
                     const std::function<double(double)>& g, double rho_tol = 0.0);

/// map_linear with g built from the round's constraint.
LinearMap map_linear(double ml_action, const SafeSetQuery& query, const SystemParams& params,
                     double rho_tol = 0.0);

/// Verdict of the reservation-free constraint R_h <= (1+lambda) R^dag_h.
struct NaiveMembership {
    bool empty = false;    ///< no u in [0, u_max] satisfies it
    bool feasible = false; ///< the queried action satisfies it
    Interval interval;     ///< feasible actions, meaningful when !empty
};

/// Ignores query.q.
NaiveMembership naive_safe_set_membership(double action, const SafeSetQuery& query,
                                          const SystemParams& params);

} // namespace laoc
