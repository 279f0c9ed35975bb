#pragma once

#include "laoc/model.hpp"
#include "laoc/policy.hpp"
#include "laoc/priors.hpp"
#include "laoc/safeset.hpp"

#include <optional>
#include <string>
#include <vector>

namespace laoc {

enum class ControllerKind { Laoc, Lin, LinPlus, PureMl, PriorOnly, Opt };
enum class Mapping { Projection, Linear };

std::string to_string(ControllerKind kind);
ControllerKind parse_controller_kind(const std::string& name);
std::string to_string(Mapping mapping);
Mapping parse_mapping(const std::string& name);

/// Ledger comparisons tolerate this much floating-point slack.
inline constexpr double kViolationTol = 1e-8;
/// A round is binding when the executed action differs from the ML action by more.
inline constexpr double kBindingTol = 1e-9;

struct ControllerConfig {
    ControllerKind kind = ControllerKind::Laoc;
    /// Safety slack. For LAOC, 0 means "copy the prior". For the other
    /// controllers it only sets the threshold of the recorded violation flags.
    double lambda = 0.4;
    double rho = 0.5; ///< Lin combination weight on the ML action
    Mapping mapping = Mapping::Projection;
    PriorConfig prior;
    /// Lin only: query the prior at the live level instead of its own trajectory.
    bool lin_prior_on_live_state = false;
    std::optional<double> c1;
    std::optional<double> c2;

    void validate() const;
};

/// Full per-round record of one controller on one episode. Vectors of levels
/// have H+1 entries, everything else H.
struct EpisodeResult {
    std::string controller;
    std::string trace_id;
    double lambda = 0.0;

    std::vector<double> level;
    std::vector<double> action;
    std::vector<double> ml_action;
    std::vector<double> prior_level;
    std::vector<double> prior_action;

    std::vector<LossTerms> loss;
    std::vector<double> risk;
    std::vector<double> prior_risk;
    std::vector<double> cum_risk;       ///< R_h
    std::vector<double> cum_prior_risk; ///< R^dag_h
    std::vector<double> cum_loss;       ///< J_h

    std::vector<bool> violation;
    std::vector<bool> binding;
    std::vector<bool> empty_event; ///< Lin+: naive set empty this round
    std::vector<double> rho;       ///< combination weight used (1 when unmapped)
    std::vector<Interval> safe_set;
    /// LAOC: the prior action was inside the computed safe set.
    std::vector<bool> prior_in_safe_set;

    double total_risk() const { return cum_risk.empty() ? 0.0 : cum_risk.back(); }
    double total_prior_risk() const {
        return cum_prior_risk.empty() ? 0.0 : cum_prior_risk.back();
    }
    double total_loss() const { return cum_loss.empty() ? 0.0 : cum_loss.back(); }
    double total_energy_usd() const;
    double total_carbon_g() const;
    int binding_count() const;
    int empty_event_count() const;
    bool any_violation() const;
    /// R_H / R^dag_H; 1 when both are zero, +inf when only the prior's is.
    double risk_ratio() const;
};

/// Prior trajectory under the episode's demand, independent of the live policy.
struct PriorTrajectory {
    std::vector<double> level;    ///< H+1
    std::vector<double> action;   ///< H
    std::vector<double> cum_risk; ///< H
};

PriorTrajectory run_prior(const Episode& episode, const SystemParams& params,
                          const PriorConfig& config);

/// Algorithm 1. safe may be null, in which case it is built from config.
/// Throws InvariantViolation if a safe set is ever empty.
EpisodeResult laoc_run(const Episode& episode, const SystemParams& params,
                       const ControllerConfig& config, Advisor& ml,
                       const SafeSetParams* safe = nullptr);
EpisodeResult lin_run(const Episode& episode, const SystemParams& params,
                      const ControllerConfig& config, Advisor& ml);
EpisodeResult lin_plus_run(const Episode& episode, const SystemParams& params,
                           const ControllerConfig& config, Advisor& ml);
EpisodeResult pure_ml_run(const Episode& episode, const SystemParams& params,
                          const ControllerConfig& config, Advisor& ml);
EpisodeResult prior_only_run(const Episode& episode, const SystemParams& params,
                             const ControllerConfig& config);
EpisodeResult opt_run(const Episode& episode, const SystemParams& params,
                      const ControllerConfig& config);

/// Dispatches on config.kind. ml may be null for PRIOR_ONLY and OPT.
EpisodeResult run_controller(const Episode& episode, const SystemParams& params,
                             const ControllerConfig& config, Advisor* ml,
                             const SafeSetParams* safe = nullptr);

enum class OptObjective {
    Loss, ///< J_H
    Risk  ///< lookahead risk: energy-draw risk plus deviation of the produced level
};

struct OptResult {
    std::vector<double> actions;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Offline optimum over [0, u_max]^H with full knowledge of the episode.
OptResult opt_offline(const Episode& episode, const SystemParams& params, OptObjective objective);

/// Objective value of an action sequence, as minimized by opt_offline.
double offline_objective(const Episode& episode, const SystemParams& params,
                         std::span<const double> actions, OptObjective objective);

} // namespace laoc
