#pragma once

#include "laoc/model.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace laoc {

enum class PriorKind { Ogd, Robd, Mpc, Greedy };

std::string to_string(PriorKind kind);
PriorKind parse_prior_kind(const std::string& name);

struct PriorConfig {
    PriorKind kind = PriorKind::Ogd;
    /// OGD step; <= 0 selects 0.5 / beta.
    double ogd_step = 0.0;
    /// ROBD regularizer toward the previous action; < 0 selects gamma_w.
    double robd_lambda1 = -1.0;
    int mpc_window = 4;
    /// Target normalized prediction error of the MPC forecaster.
    double mpc_epsilon = 0.0;
    /// Gaussian noise scale realizing mpc_epsilon (see calibrate_mpc_noise).
    /// Negative means "not calibrated"; only valid when mpc_epsilon == 0.
    double mpc_noise_sigma = -1.0;
    std::uint64_t mpc_seed = 17;
    /// Hours of observed demand averaged by the trailing estimator.
    int trailing_window = 8;
    /// Hourly demand assumed before anything has been observed (m^3).
    double initial_demand_estimate = 3.0;
};

/// A trusted policy run on its own (virtual) trajectory.
///
/// Per round the owner calls act() with the level the prior is tracking and
/// then observe() with the action taken from that level and the realized
/// demand. Instances are per-episode and single-threaded.
class ControlPrior {
public:
    virtual ~ControlPrior() = default;
    virtual void reset(const Episode& episode) = 0;
    virtual double act(int h, double level) = 0;
    virtual void observe(int h, double level, double action, double demand) = 0;
};

std::unique_ptr<ControlPrior> make_prior(const PriorConfig& config, const SystemParams& params);

/// One projected gradient step on the risk incurred by the previous action:
/// its energy draw plus the deviation of the level it produced.
double ogd_update(double prev_action, double resulting_level, const SystemParams& params,
                  double step);

/// argmin over [0, u_max] of dist(x + u - w) + gamma_b (eta u)^2
/// + lambda1 (u - u_prev)^2, in closed form.
double robd_action(double level, double demand, double prev_action, const SystemParams& params,
                   double lambda1);

/// clamp(xbar - x + mean_demand, 0, u_max).
double greedy_level_tracker(double level, double mean_demand, const SystemParams& params);

/// Window objective used by MPC and the risk-mode offline oracle: for every
/// planned action, its energy-draw risk plus the deviation of the level it
/// produces.
double lookahead_risk(double level, std::span<const double> actions,
                      std::span<const double> demand, const SystemParams& params);

struct MpcPlan {
    std::vector<double> actions;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Minimizes lookahead_risk over [0, u_max]^n, n = predicted_demand.size().
MpcPlan mpc_plan(double level, std::span<const double> predicted_demand,
                 const SystemParams& params, std::span<const double> warm_start = {});

/// Forecasts used by the MPC prior: row h holds predictions for hours
/// h..H-1, each the true demand plus N(0, sigma^2) noise, clamped at zero.
std::vector<std::vector<double>> mpc_forecasts(const Episode& episode, double sigma,
                                               std::uint64_t seed);

/// Mean over episodes and rounds of ||w_{h:H} - w_hat_{h:H}|| / ((H-h) w_max).
double forecast_error(const std::vector<Episode>& episodes, double sigma, std::uint64_t seed);

/// Noise scale whose realized forecast_error matches epsilon (bisection).
double calibrate_mpc_noise(const std::vector<Episode>& episodes, double epsilon,
                           std::uint64_t seed);

} // namespace laoc
