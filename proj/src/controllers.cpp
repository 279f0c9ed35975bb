#include "laoc/controllers.hpp"

#include "laoc/box_pgd.hpp"
#include "laoc/errors.hpp"
#include "laoc/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace laoc {

std::string to_string(ControllerKind kind) {
    switch (kind) {
    case ControllerKind::Laoc: return "laoc";
    case ControllerKind::Lin: return "lin";
    case ControllerKind::LinPlus: return "linplus";
    case ControllerKind::PureMl: return "ml";
    case ControllerKind::PriorOnly: return "prior";
    case ControllerKind::Opt: return "opt";
    }
    return "?";
}

ControllerKind parse_controller_kind(const std::string& name) {
    if (name == "laoc") return ControllerKind::Laoc;
    if (name == "lin") return ControllerKind::Lin;
    if (name == "linplus" || name == "lin+") return ControllerKind::LinPlus;
    if (name == "ml" || name == "pure_ml") return ControllerKind::PureMl;
    if (name == "prior" || name == "prior_only") return ControllerKind::PriorOnly;
    if (name == "opt") return ControllerKind::Opt;
    throw InvalidInput("unknown controller '" + name + "' (expected laoc|lin|linplus|ml|prior|opt)");
}

std::string to_string(Mapping mapping) {
    return mapping == Mapping::Projection ? "projection" : "linear";
}

Mapping parse_mapping(const std::string& name) {
    if (name == "projection") return Mapping::Projection;
    if (name == "linear") return Mapping::Linear;
    throw InvalidInput("unknown mapping '" + name + "' (expected projection|linear)");
}

void ControllerConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw InvalidSafety("lambda must be finite and non-negative");
    if (kind == ControllerKind::Lin && !(rho >= 0.0 && rho <= 1.0))
        throw InvalidInput("Lin requires rho in [0, 1]");
    if (kind == ControllerKind::LinPlus && !(lambda > 0.0))
        throw InvalidSafety("Lin+ requires lambda > 0");
}

double EpisodeResult::total_energy_usd() const {
    double s = 0.0;
    for (const auto& t : loss) s += t.energy_usd;
    return s;
}

double EpisodeResult::total_carbon_g() const {
    double s = 0.0;
    for (const auto& t : loss) s += t.carbon_g;
    return s;
}

int EpisodeResult::binding_count() const {
    return static_cast<int>(std::count(binding.begin(), binding.end(), true));
}

int EpisodeResult::empty_event_count() const {
    return static_cast<int>(std::count(empty_event.begin(), empty_event.end(), true));
}

bool EpisodeResult::any_violation() const {
    return std::find(violation.begin(), violation.end(), true) != violation.end();
}

double EpisodeResult::risk_ratio() const {
    const double live = total_risk();
    const double prior = total_prior_risk();
    if (prior > 0.0) return live / prior;
    return live > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

namespace {

/// Accumulates the per-round record shared by every controller.
class Recorder {
public:
    Recorder(const Episode& episode, const SystemParams& params, std::string controller,
             double lambda)
        : episode_(episode), params_(params) {
        const auto horizon = episode.size();
        r_.controller = std::move(controller);
        r_.trace_id = episode.id;
        r_.lambda = lambda;
        r_.level.reserve(horizon + 1);
        r_.prior_level.reserve(horizon + 1);
        r_.level.push_back(episode.start_level(params));
        r_.prior_level.push_back(episode.start_level(params));
    }

    double level() const { return r_.level.back(); }
    double prior_level() const { return r_.prior_level.back(); }
    double cum_risk() const { return ledger_.live(); }
    double cum_prior_risk() const { return ledger_.prior(); }

    /// Prior risk enters the ledger before the live action is chosen.
    double add_prior(double prior_action) {
        pending_prior_risk_ = risk(prior_level(), prior_action, params_);
        return ledger_.prior() + pending_prior_risk_;
    }

    void commit(int h, double action, double ml_action, double prior_action, double rho,
                bool empty, Interval safe_set = {}, bool prior_in_set = true) {
        const auto& step = episode_.steps[static_cast<std::size_t>(h)];
        const double x = level();
        const double xd = prior_level();
        const auto terms = loss(x, action, step.carbon_intensity, step.price, params_);
        const double r = risk(x, action, params_);
        ledger_.record(r, pending_prior_risk_, terms.total);

        r_.action.push_back(action);
        r_.ml_action.push_back(ml_action);
        r_.prior_action.push_back(prior_action);
        r_.loss.push_back(terms);
        r_.risk.push_back(r);
        r_.prior_risk.push_back(pending_prior_risk_);
        r_.cum_risk.push_back(ledger_.live());
        r_.cum_prior_risk.push_back(ledger_.prior());
        r_.cum_loss.push_back(ledger_.loss());
        r_.violation.push_back(ledger_.live() >
                               (1.0 + r_.lambda) * ledger_.prior() + kViolationTol);
        r_.binding.push_back(std::abs(action - ml_action) > kBindingTol);
        r_.empty_event.push_back(empty);
        r_.rho.push_back(rho);
        r_.safe_set.push_back(safe_set);
        r_.prior_in_safe_set.push_back(prior_in_set);

        r_.level.push_back(step_dynamics(params_, x, action, step.demand));
        r_.prior_level.push_back(step_dynamics(params_, xd, prior_action, step.demand));
    }

    EpisodeResult finish() { return std::move(r_); }

private:
    const Episode& episode_;
    const SystemParams& params_;
    EpisodeResult r_;
    RiskLedger ledger_;
    double pending_prior_risk_ = 0.0;
};

double clamp_action(double u, const SystemParams& params) {
    if (!std::isfinite(u)) throw InvalidInput("ML action is not finite");
    return std::clamp(u, 0.0, params.u_max);
}

void prepare(const Episode& episode, const SystemParams& params, const ControllerConfig& config) {
    params.validate();
    validate_episode(episode, params);
    config.validate();
}

} // namespace

PriorTrajectory run_prior(const Episode& episode, const SystemParams& params,
                          const PriorConfig& config) {
    validate_episode(episode, params);
    auto prior = make_prior(config, params);
    prior->reset(episode);
    PriorTrajectory t;
    t.level.push_back(episode.start_level(params));
    double cum = 0.0;
    for (int h = 0; h < params.horizon; ++h) {
        const double x = t.level.back();
        const double u = prior->act(h, x);
        cum += risk(x, u, params);
        const double w = episode.steps[static_cast<std::size_t>(h)].demand;
        prior->observe(h, x, u, w);
        t.action.push_back(u);
        t.cum_risk.push_back(cum);
        t.level.push_back(step_dynamics(params, x, u, w));
    }
    return t;
}

EpisodeResult laoc_run(const Episode& episode, const SystemParams& params,
                       const ControllerConfig& config, Advisor& ml, const SafeSetParams* safe) {
    prepare(episode, params, config);
    const bool copy_prior = config.lambda == 0.0;
    if (config.mapping == Mapping::Projection && !params.pump.is_identity())
        throw InvalidInput("projection mapping needs the identity pump curve; use linear");

    SafeSetParams built;
    if (!copy_prior && safe == nullptr) {
        built = SafeSetParams::build(params, config.lambda, config.c1, config.c2);
        safe = &built;
    }
    if (safe != nullptr && !copy_prior &&
        (safe->horizon() != params.horizon || safe->lambda != config.lambda))
        throw InvalidInput("safe-set parameters do not match the controller");

    auto prior = make_prior(config.prior, params);
    prior->reset(episode);
    ml.reset(episode);
    Recorder rec(episode, params, "laoc", config.lambda);

    for (int h = 0; h < params.horizon; ++h) {
        const double xd = rec.prior_level();
        const double x = rec.level();
        const double ud = prior->act(h, xd);
        const double prior_risk = rec.add_prior(ud);
        const double uml = clamp_action(ml.advise(h, x), params);

        if (copy_prior) {
            rec.commit(h, ud, uml, ud, 0.0, false, {ud, ud}, true);
        } else {
            const SafeSetQuery query{rec.cum_risk(), prior_risk, x, xd, ud,
                                     safe->q[static_cast<std::size_t>(h)], config.lambda};
            Interval interval{ud, ud};
            bool prior_in = false;
            if (params.pump.is_identity()) {
                try {
                    interval = safe_interval(query, params);
                } catch (const EmptySet& e) {
                    throw InvariantViolation(std::string("LAOC safe set empty at round ") +
                                             std::to_string(h) + " of '" + episode.id +
                                             "': " + e.what());
                }
                prior_in = interval.contains(ud);
            } else {
                prior_in = constraint_value(query, ud, params) <= kFeasibilityTol;
            }
            if (!prior_in)
                throw InvariantViolation("LAOC safe set excludes the prior action at round " +
                                         std::to_string(h) + " of '" + episode.id + "'");

            double u = uml;
            double rho = 1.0;
            if (config.mapping == Mapping::Projection) {
                u = map_projection(uml, interval);
                rho = u == uml ? 1.0 : std::numeric_limits<double>::quiet_NaN();
            } else if (constraint_value(query, uml, params) > 0.0) {
                const auto mapped = map_linear(uml, query, params, 0.0);
                u = mapped.action;
                rho = mapped.rho;
            }
            rec.commit(h, u, uml, ud, rho, false, interval, prior_in);
        }
        prior->observe(h, xd, ud, episode.steps[static_cast<std::size_t>(h)].demand);
    }
    return rec.finish();
}

EpisodeResult lin_run(const Episode& episode, const SystemParams& params,
                      const ControllerConfig& config, Advisor& ml) {
    prepare(episode, params, config);
    auto prior = make_prior(config.prior, params);
    prior->reset(episode);
    std::unique_ptr<ControlPrior> live_prior;
    if (config.lin_prior_on_live_state) {
        live_prior = make_prior(config.prior, params);
        live_prior->reset(episode);
    }
    ml.reset(episode);
    Recorder rec(episode, params, "lin", config.lambda);

    for (int h = 0; h < params.horizon; ++h) {
        const double xd = rec.prior_level();
        const double x = rec.level();
        const double ud = prior->act(h, xd);
        rec.add_prior(ud);
        const double uml = clamp_action(ml.advise(h, x), params);
        const double anchor = live_prior ? live_prior->act(h, x) : ud;
        const double u = config.rho * uml + (1.0 - config.rho) * anchor;
        rec.commit(h, std::clamp(u, 0.0, params.u_max), uml, ud, config.rho, false);
        const double w = episode.steps[static_cast<std::size_t>(h)].demand;
        prior->observe(h, xd, ud, w);
        if (live_prior) live_prior->observe(h, x, anchor, w);
    }
    return rec.finish();
}

EpisodeResult lin_plus_run(const Episode& episode, const SystemParams& params,
                           const ControllerConfig& config, Advisor& ml) {
    prepare(episode, params, config);
    auto prior = make_prior(config.prior, params);
    prior->reset(episode);
    ml.reset(episode);
    Recorder rec(episode, params, "linplus", config.lambda);

    for (int h = 0; h < params.horizon; ++h) {
        const double xd = rec.prior_level();
        const double x = rec.level();
        const double ud = prior->act(h, xd);
        const double prior_risk = rec.add_prior(ud);
        const double uml = clamp_action(ml.advise(h, x), params);

        const SafeSetQuery query{rec.cum_risk(), prior_risk, x, xd, ud, 0.0, config.lambda};
        const auto naive = naive_safe_set_membership(uml, query, params);
        double u = uml;
        double rho = 1.0;
        if (naive.empty) {
            u = ud;
            rho = 0.0;
        } else if (!naive.feasible) {
            // Feasible point of the segment [u_prior, u_ml] closest to u_ml;
            // when the segment misses the set, the point of the set closest to it.
            const double seg_lo = std::min(uml, ud);
            const double seg_hi = std::max(uml, ud);
            const double lo = std::max(seg_lo, naive.interval.lo);
            const double hi = std::min(seg_hi, naive.interval.hi);
            u = lo <= hi ? std::clamp(uml, lo, hi) : map_projection(ud, naive.interval);
            rho = uml != ud ? (u - ud) / (uml - ud) : 1.0;
        }
        rec.commit(h, u, uml, ud, rho, naive.empty, naive.interval);
        prior->observe(h, xd, ud, episode.steps[static_cast<std::size_t>(h)].demand);
    }
    return rec.finish();
}

EpisodeResult pure_ml_run(const Episode& episode, const SystemParams& params,
                          const ControllerConfig& config, Advisor& ml) {
    prepare(episode, params, config);
    auto prior = make_prior(config.prior, params);
    prior->reset(episode);
    ml.reset(episode);
    Recorder rec(episode, params, "ml", config.lambda);
    for (int h = 0; h < params.horizon; ++h) {
        const double xd = rec.prior_level();
        const double ud = prior->act(h, xd);
        rec.add_prior(ud);
        const double uml = clamp_action(ml.advise(h, rec.level()), params);
        rec.commit(h, uml, uml, ud, 1.0, false);
        prior->observe(h, xd, ud, episode.steps[static_cast<std::size_t>(h)].demand);
    }
    return rec.finish();
}

EpisodeResult prior_only_run(const Episode& episode, const SystemParams& params,
                             const ControllerConfig& config) {
    prepare(episode, params, config);
    auto prior = make_prior(config.prior, params);
    prior->reset(episode);
    Recorder rec(episode, params, "prior", config.lambda);
    for (int h = 0; h < params.horizon; ++h) {
        const double xd = rec.prior_level();
        const double ud = prior->act(h, xd);
        rec.add_prior(ud);
        rec.commit(h, ud, ud, ud, 0.0, false, {ud, ud});
        prior->observe(h, xd, ud, episode.steps[static_cast<std::size_t>(h)].demand);
    }
    return rec.finish();
}

EpisodeResult opt_run(const Episode& episode, const SystemParams& params,
                      const ControllerConfig& config) {
    prepare(episode, params, config);
    const auto plan = opt_offline(episode, params, OptObjective::Loss);
    auto prior = make_prior(config.prior, params);
    prior->reset(episode);
    Recorder rec(episode, params, "opt", config.lambda);
    for (int h = 0; h < params.horizon; ++h) {
        const double xd = rec.prior_level();
        const double ud = prior->act(h, xd);
        rec.add_prior(ud);
        const double u = plan.actions[static_cast<std::size_t>(h)];
        rec.commit(h, u, u, ud, 1.0, false);
        prior->observe(h, xd, ud, episode.steps[static_cast<std::size_t>(h)].demand);
    }
    return rec.finish();
}

EpisodeResult run_controller(const Episode& episode, const SystemParams& params,
                             const ControllerConfig& config, Advisor* ml,
                             const SafeSetParams* safe) {
    auto need_ml = [&]() -> Advisor& {
        if (ml == nullptr)
            throw InvalidInput("controller '" + to_string(config.kind) + "' needs an ML policy");
        return *ml;
    };
    switch (config.kind) {
    case ControllerKind::Laoc: return laoc_run(episode, params, config, need_ml(), safe);
    case ControllerKind::Lin: return lin_run(episode, params, config, need_ml());
    case ControllerKind::LinPlus: return lin_plus_run(episode, params, config, need_ml());
    case ControllerKind::PureMl: return pure_ml_run(episode, params, config, need_ml());
    case ControllerKind::PriorOnly: return prior_only_run(episode, params, config);
    case ControllerKind::Opt: return opt_run(episode, params, config);
    }
    throw InvalidInput("unknown controller kind");
}

double offline_objective(const Episode& episode, const SystemParams& params,
                         std::span<const double> actions, OptObjective objective) {
    const double x0 = episode.start_level(params);
    if (objective == OptObjective::Risk) {
        std::vector<double> demand;
        for (const auto& s : episode.steps) demand.push_back(s.demand);
        return lookahead_risk(x0, actions, demand, params);
    }
    double x = x0;
    double total = 0.0;
    for (std::size_t h = 0; h < actions.size(); ++h) {
        const auto& s = episode.steps[h];
        total += loss(x, actions[h], s.carbon_intensity, s.price, params).total;
        x = step_dynamics(x, actions[h], s.demand, params.pump);
    }
    return total;
}

OptResult opt_offline(const Episode& episode, const SystemParams& params, OptObjective objective) {
    params.validate();
    validate_episode(episode, params);
    if (!params.pump.is_identity()) throw InvalidInput("offline oracle needs the identity pump");

    const std::size_t n = episode.size();
    const double x0 = episode.start_level(params);
    const double kb = params.gamma_b * params.eta * params.eta;
    std::vector<double> level_grad(n + 1);

    SmoothObjective f = [&](std::span<const double> u, std::span<double> grad) {
        double x = x0;
        double total = 0.0;
        if (objective == OptObjective::Loss) {
            // level_grad[h] = dJ/dx_h for h = 0..H-1; x_H is not charged.
            for (std::size_t h = 0; h < n; ++h) {
                const auto& s = episode.steps[h];
                const double d = x - params.nominal_level;
                const double lin = params.eta * (params.gamma2 * s.carbon_intensity +
                                                 params.gamma3 * s.price);
                total += params.gamma1 * d * d + lin * u[h];
                level_grad[h] = 2.0 * params.gamma1 * d;
                grad[h] = lin;
                x = x + u[h] - s.demand;
            }
            double suffix = 0.0;
            for (std::size_t j = n; j-- > 0;) {
                grad[j] += suffix; // x_h for h > j depends on u_j
                suffix += level_grad[j];
            }
            return total;
        }
        for (std::size_t h = 0; h < n; ++h) {
            x = x + u[h] - episode.steps[h].demand;
            total += kb * u[h] * u[h] + level_penalty(x, params);
            level_grad[h] = level_penalty_derivative(x, params);
        }
        double suffix = 0.0;
        for (std::size_t j = n; j-- > 0;) {
            suffix += level_grad[j];
            grad[j] = 2.0 * kb * u[j] + suffix;
        }
        return total;
    };

    std::vector<double> start(n);
    for (std::size_t h = 0; h < n; ++h) {
        const double correction = h == 0 ? params.nominal_level - x0 : 0.0;
        start[h] = std::clamp(episode.steps[h].demand + correction, 0.0, params.u_max);
    }

    const double hn = static_cast<double>(n);
    BoxPgdOptions options;
    options.tolerance = 1e-8;
    options.max_iterations = 200'000;
    if (objective == OptObjective::Loss) {
        options.lipschitz = std::max(params.gamma1 * hn * (hn - 1.0), 1e-12);
    } else {
        const double wmax = std::max(params.weight_below(), params.weight_above());
        options.lipschitz = 2.0 * kb + wmax * hn * (hn + 1.0);
    }
    auto result = minimize_box(f, std::move(start), 0.0, params.u_max, options);
    if (!result.converged) {
        std::ostringstream msg;
        msg << "offline oracle on '" << episode.id << "' stopped after " << result.iterations
            << " iterations (gradient mapping " << result.gradient_mapping_norm << ")";
        log_warning(msg.str());
    }
    return {std::move(result.x), result.value, result.iterations, result.converged};
}

} // namespace laoc
