#include "laoc/safeset.hpp"

#include "laoc/errors.hpp"
#include "laoc/log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace laoc {

double default_c1(double lambda) {
    if (!(lambda > 0.0)) throw InvalidSafety("lambda must be positive");
    return 1.0 + 1.0 / std::sqrt(1.0 + lambda);
}

std::vector<double> compute_q_schedule(const SystemParams& params, double lambda, double c1,
                                       double c2) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidSafety("lambda must be positive and finite");
    if (!(c1 >= 1.0) || !(c2 >= 1.0)) throw InvalidSafety("C1 and C2 must be >= 1");

    const int horizon = params.horizon;
    const double scale = c1 * (1.0 + 1.0 / lambda) * params.beta() / 2.0;
    const double ratio = c2 * params.sigma_x() * params.sigma_x();

    std::vector<double> q(static_cast<std::size_t>(horizon) + 1, 0.0);
    // Horner form of the geometric sum: S(n) = 1 + ratio * S(n - 1).
    double partial = 0.0;
    for (int h = horizon - 1; h >= 0; --h) {
        partial = 1.0 + ratio * partial;
        q[static_cast<std::size_t>(h)] = scale * partial;
    }
    return q;
}

SafeSetParams SafeSetParams::build(const SystemParams& params, double lambda,
                                   std::optional<double> c1, std::optional<double> c2) {
    SafeSetParams s;
    s.lambda = lambda;
    s.c1 = c1 ? *c1 : default_c1(lambda);
    s.c2 = c2 ? *c2 : choose_c2(params, params.horizon).value;
    s.lambda0 = lambda / (std::sqrt(1.0 + lambda) + 1.0); // no cancellation for small lambda
    s.q = compute_q_schedule(params, lambda, s.c1, s.c2);
    return s;
}

double c2_objective(double c, double sigma_x, double sigma_u, int n) {
    const double r = c * sigma_x * sigma_x;
    const double sum = std::abs(1.0 - r) < 1e-12
                           ? static_cast<double>(n)
                           : (1.0 - std::pow(r, n)) / (1.0 - r);
    return c / (c - 1.0) * sigma_u * sigma_u * sum;
}

C2Choice choose_c2(const SystemParams& params, int horizon, double c_max) {
    if (horizon < 1) throw InvalidInput("choose_c2: horizon must be at least 1");
    const double sx = params.sigma_x();
    const double su = params.sigma_u();
    auto f = [&](double c) { return c2_objective(c, sx, su, horizon); };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = 1.0 + 1e-6;
    double b = c_max;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > 1e-6) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    C2Choice choice;
    choice.value = 0.5 * (a + b);
    if (c_max - choice.value < 1e-5 || f(c_max) <= f(choice.value)) {
        choice.value = c_max;
        choice.at_cap = true;
        std::ostringstream msg;
        msg << "C2 objective is decreasing up to c_max = " << c_max << " (sigma_x = " << sx
            << ", H = " << horizon << "); using c_max";
        log_info(msg.str());
    }
    return choice;
}

double reservation_phi(double action, double level, double prior_level, double prior_action,
                       double q, const PumpCurve& pump) {
    const double diff = level + pump(action) - prior_level - pump(prior_action);
    return q * diff * diff;
}

double constraint_value(const SafeSetQuery& query, double action, const SystemParams& params) {
    return query.prev_live_risk + risk(query.level, action, params) +
           reservation_phi(action, query.level, query.prior_level, query.prior_action, query.q,
                           params.pump) -
           (1.0 + query.lambda) * query.prior_risk;
}

namespace {

// Largest (or smallest) feasible point between an infeasible endpoint and a
// feasible interior point.
double tighten(double infeasible, double feasible, const std::function<double(double)>& f) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (infeasible + feasible);
        if (mid == infeasible || mid == feasible) break;
        (f(mid) <= 0.0 ? feasible : infeasible) = mid;
    }
    return feasible;
}

} // namespace

Interval safe_interval(const SafeSetQuery& query, const SystemParams& params) {
    if (!params.pump.is_identity())
        throw InvalidInput("safe_interval: closed form needs the identity pump curve");

    auto f = [&](double u) { return constraint_value(query, u, params); };
    const double u_prior = query.prior_action;
    const bool prior_in_box = u_prior >= 0.0 && u_prior <= params.u_max;
    const bool prior_ok = prior_in_box && f(u_prior) <= kFeasibilityTol;

    auto degenerate = [&]() -> Interval {
        if (prior_ok) return {u_prior, u_prior};
        std::ostringstream msg;
        msg << "safe action set is empty (budget " << query.budget() << ", constraint at prior "
            << f(u_prior) << ")";
        throw EmptySet(msg.str());
    };

    const double ee = params.eta * params.eta;
    const double d0 = query.level - query.prior_level - u_prior;
    const double a = params.gamma_b * ee + query.q;
    const double b = 2.0 * query.q * d0;
    const double c = query.prev_live_risk + level_penalty(query.level, params) +
                     query.q * d0 * d0 - (1.0 + query.lambda) * query.prior_risk;

    double lo = 0.0;
    double hi = params.u_max;
    if (a == 0.0) {
        if (c > 0.0) return degenerate();
    } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) return degenerate();
        const double sq = std::sqrt(disc);
        const double t = -0.5 * (b + std::copysign(sq, b));
        double r1 = t / a;
        double r2 = t != 0.0 ? c / t : r1;
        if (r1 > r2) std::swap(r1, r2);
        lo = std::max(lo, r1);
        hi = std::min(hi, r2);
        if (lo > hi) return degenerate();

        // Roots carry rounding error; pull endpoints inward until the
        // constraint holds exactly in floating point.
        const double vertex = std::clamp(-b / (2.0 * a), lo, hi);
        if (f(vertex) > 0.0) return degenerate();
        if (f(lo) > 0.0) lo = tighten(lo, vertex, f);
        if (f(hi) > 0.0) hi = tighten(hi, vertex, f);
    }

    if (prior_ok) {
        lo = std::min(lo, u_prior);
        hi = std::max(hi, u_prior);
    }
    return {lo, hi};
}

double map_projection(double ml_action, const Interval& interval) {
    if (interval.lo > interval.hi) throw EmptySet("map_projection: empty interval");
    return std::clamp(ml_action, interval.lo, interval.hi);
}

LinearMap map_linear(double ml_action, double prior_action,
                     const std::function<double(double)>& g, double rho_tol) {
    const double g0 = g(0.0);
    if (g0 > kFeasibilityTol) {
        std::ostringstream msg;
        msg << "map_linear: prior action violates the constraint (g(0) = " << g0 << ")";
        throw InvariantViolation(msg.str());
    }
    if (g(1.0) <= 0.0) return {ml_action, 1.0};

    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > rho_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(mid) <= 0.0 ? lo : hi) = mid;
    }
    return {lo * ml_action + (1.0 - lo) * prior_action, lo};
}

LinearMap map_linear(double ml_action, const SafeSetQuery& query, const SystemParams& params,
                     double rho_tol) {
    const double u_prior = query.prior_action;
    return map_linear(
        ml_action, u_prior,
        [&](double rho) {
            return constraint_value(query, rho * ml_action + (1.0 - rho) * u_prior, params);
        },
        rho_tol);
}

NaiveMembership naive_safe_set_membership(double action, const SafeSetQuery& query,
                                          const SystemParams& params) {
    const double slack = query.budget() - level_penalty(query.level, params);
    const double ee = params.gamma_b * params.eta * params.eta;
    NaiveMembership m;
    if (slack < -kFeasibilityTol) {
        m.empty = true;
        return m;
    }
    double hi = params.u_max;
    if (ee > 0.0) hi = std::min(hi, std::sqrt(std::max(slack, 0.0) / ee));
    m.interval = {0.0, hi};
    const double value = query.prev_live_risk + risk(query.level, action, params) -
                         (1.0 + query.lambda) * query.prior_risk;
    m.feasible = action >= 0.0 && action <= params.u_max && value <= kFeasibilityTol;
    return m;
}

} // namespace laoc
