#include "laoc/model.hpp"

#include "laoc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace laoc {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw InvalidInput(what);
}

bool finite(double v) { return std::isfinite(v); }

} // namespace

PumpCurve PumpCurve::piecewise(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw InvalidInput("pump curve needs at least two knots");
    if (knots.front().first != 0.0) throw InvalidInput("pump curve must start at u = 0");
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!finite(knots[i].first) || !finite(knots[i].second))
            throw InvalidInput("pump curve knots must be finite");
        if (i > 0 && knots[i].first <= knots[i - 1].first)
            throw InvalidInput("pump curve knots must be strictly increasing in u");
        if (i > 0 && knots[i].second < knots[i - 1].second)
            throw InvalidInput("pump curve must be non-decreasing");
    }
    if (knots.front().second < 0.0) throw InvalidInput("pump curve must be non-negative");
    PumpCurve curve;
    curve.knots_ = std::move(knots);
    return curve;
}

std::size_t PumpCurve::segment(double u) const {
    // Index i of the segment [u_i, u_{i+1}); the last segment extends to infinity.
    std::size_t i = 0;
    while (i + 2 < knots_.size() && u >= knots_[i + 1].first) ++i;
    return i;
}

double PumpCurve::operator()(double u) const {
    if (is_identity()) return u;
    const auto i = segment(u);
    const auto [u0, g0] = knots_[i];
    return g0 + slope(u) * (u - u0);
}

double PumpCurve::slope(double u) const {
    if (is_identity()) return 1.0;
    const auto i = segment(u);
    return (knots_[i + 1].second - knots_[i].second) / (knots_[i + 1].first - knots_[i].first);
}

double PumpCurve::lipschitz() const {
    if (is_identity()) return 1.0;
    double best = 0.0;
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
        best = std::max(best, (knots_[i + 1].second - knots_[i].second) /
                                  (knots_[i + 1].first - knots_[i].first));
    return best;
}

void SystemParams::validate() const {
    require(finite(tank_capacity) && finite(nominal_level) && finite(u_max) && finite(eta),
            "system parameters must be finite");
    require(nominal_level > 0.0 && nominal_level <= tank_capacity,
            "nominal level must lie in (0, tank_capacity]");
    require(u_max > 0.0, "u_max must be positive");
    require(eta > 0.0, "eta must be positive");
    for (double g : {gamma1, gamma2, gamma3, gamma_w, gamma_b, gamma_w_lo, gamma_w_hi})
        require(finite(g) && g >= 0.0, "weights must be finite and non-negative");
    require(horizon >= 1, "horizon must be at least 1");
    require(alpha() > 0.0, "risk must be strongly convex (all risk weights positive)");
}

double SystemParams::beta() const noexcept {
    return 2.0 * std::max({weight_below(), weight_above(), gamma_b * eta * eta});
}

double SystemParams::alpha() const noexcept {
    return 2.0 * std::min({weight_below(), weight_above(), gamma_b * eta * eta});
}

void validate_episode(const Episode& episode, const SystemParams& params) {
    if (static_cast<int>(episode.size()) != params.horizon)
        throw InvalidInput("episode '" + episode.id + "' has " + std::to_string(episode.size()) +
                           " steps, horizon is " + std::to_string(params.horizon));
    for (const auto& s : episode.steps) {
        if (!finite(s.demand) || !finite(s.carbon_intensity) || !finite(s.price) ||
            s.demand < 0.0 || s.carbon_intensity < 0.0 || s.price < 0.0)
            throw InvalidInput("episode '" + episode.id + "' has a negative or non-finite step");
    }
    if (!finite(episode.initial_level))
        throw InvalidInput("episode '" + episode.id + "' has a non-finite initial level");
}

double step_dynamics(double level, double action, double demand, const PumpCurve& pump) {
    if (!finite(level) || !finite(action) || !finite(demand))
        throw InvalidInput("step_dynamics: non-finite input");
    return level + pump(action) - demand;
}

double step_dynamics(const SystemParams& params, double level, double action, double demand) {
    if (!(action >= 0.0 && action <= params.u_max))
        throw InvalidInput("step_dynamics: action outside [0, u_max]");
    return step_dynamics(level, action, demand, params.pump);
}

LossTerms loss(double level, double action, double carbon_intensity, double price,
               const SystemParams& params) {
    LossTerms t;
    const double d = level - params.nominal_level;
    const double kwh = params.eta * action;
    t.deviation_sq = d * d;
    t.carbon_g = carbon_intensity * kwh;
    t.energy_usd = price * kwh;
    t.deviation = params.gamma1 * t.deviation_sq;
    t.carbon = params.gamma2 * t.carbon_g;
    t.energy = params.gamma3 * t.energy_usd;
    t.total = t.deviation + t.carbon + t.energy;
    return t;
}

Gradient2 loss_gradient(double level, double /*action*/, double carbon_intensity, double price,
                        const SystemParams& params) {
    return {2.0 * params.gamma1 * (level - params.nominal_level),
            params.eta * (params.gamma2 * carbon_intensity + params.gamma3 * price)};
}

double level_penalty(double level, const SystemParams& params) {
    const double d = level - params.nominal_level;
    return (d <= 0.0 ? params.weight_below() : params.weight_above()) * d * d;
}

double level_penalty_derivative(double level, const SystemParams& params) {
    const double d = level - params.nominal_level;
    return 2.0 * (d <= 0.0 ? params.weight_below() : params.weight_above()) * d;
}

double risk(double level, double action, const SystemParams& params) {
    const double kwh = params.eta * action;
    return level_penalty(level, params) + params.gamma_b * kwh * kwh;
}

Gradient2 risk_gradient(double level, double action, const SystemParams& params) {
    return {level_penalty_derivative(level, params),
            2.0 * params.gamma_b * params.eta * params.eta * action};
}

void RiskLedger::record(double live_risk, double prior_risk, double round_loss) {
    if (!(live_risk >= 0.0) || !(prior_risk >= 0.0) || !(round_loss >= 0.0))
        throw InvariantViolation("risk ledger entries must be non-negative");
    live_ += live_risk;
    prior_ += prior_risk;
    loss_ += round_loss;
    ++rounds_;
}

} // namespace laoc
