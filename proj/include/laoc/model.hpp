#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace laoc {

/// Maps the pump control signal to the volume delivered in one hour.
///
/// The default curve is the identity (on/off pumping with a fixed flow, where
/// the control signal is the pumped volume itself). A monotone non-decreasing
/// piecewise-linear curve models variable-speed pumps; it is defined by knots
/// (u_i, g_i) with u_0 = 0 and is extended linearly past the last knot.
class PumpCurve {
public:
    PumpCurve() = default;

    static PumpCurve identity() { return {}; }
    static PumpCurve piecewise(std::vector<std::pair<double, double>> knots);

    double operator()(double u) const;
    /// Right derivative (slope of the segment containing u).
    double slope(double u) const;
    /// Largest segment slope; the dynamics' sensitivity to the action.
    double lipschitz() const;
    bool is_identity() const noexcept { return knots_.empty(); }

    const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }

private:
    std::size_t segment(double u) const;

    std::vector<std::pair<double, double>> knots_;
};

enum class DistanceMode { Symmetric, Asymmetric };

/// Physical and weighting constants of the single-tank water model.
///
/// Units: hours, m^3, kWh, g, $. The smoothness/strong-convexity constants of
/// the risk are derived from the weights, never supplied.
struct SystemParams {
    double tank_capacity = 80.0; ///< m^3
    double nominal_level = 40.0; ///< m^3
    double u_max = 12.0;         ///< m^3 pumped per hour
    double eta = 0.272;          ///< kWh per m^3

    double gamma1 = 0.01; ///< loss weight on squared deviation
    double gamma2 = 0.01; ///< loss weight on carbon (per g)
    double gamma3 = 10.0; ///< loss weight on energy cost (per $)

    double gamma_w = 1.0; ///< risk weight on squared deviation (symmetric mode)
    double gamma_b = 1.0; ///< risk weight on squared energy draw
    double gamma_w_lo = 1.0;
    double gamma_w_hi = 1.0;
    DistanceMode distance = DistanceMode::Symmetric;

    int horizon = 24;
    PumpCurve pump;

    /// Throws InvalidInput when any invariant fails.
    void validate() const;

    /// Deviation weight below the nominal level.
    double weight_below() const noexcept {
        return distance == DistanceMode::Symmetric ? gamma_w : gamma_w_lo;
    }
    /// Deviation weight above the nominal level.
    double weight_above() const noexcept {
        return distance == DistanceMode::Symmetric ? gamma_w : gamma_w_hi;
    }

    double sigma_x() const noexcept { return 1.0; }
    double sigma_u() const { return pump.lipschitz(); }
    /// Smoothness of the risk in (x, u).
    double beta() const noexcept;
    /// Strong convexity of the risk in (x, u).
    double alpha() const noexcept;
};

/// Context observed for one hour.
struct TraceStep {
    double demand = 0.0;           ///< m^3
    double carbon_intensity = 0.0; ///< g/kWh
    double price = 0.0;            ///< $/kWh
};

struct Episode {
    std::string id;
    std::vector<TraceStep> steps;
    /// Water level at the start of the first hour. Negative means "use the
    /// nominal level".
    double initial_level = -1.0;
    /// First hour of the episode, in hours since 1970-01-01T00:00Z.
    std::int64_t start_hour = 0;

    std::size_t size() const noexcept { return steps.size(); }
    double start_level(const SystemParams& params) const noexcept {
        return initial_level < 0.0 ? params.nominal_level : initial_level;
    }
};

/// Throws InvalidInput unless every step is finite and non-negative and the
/// length matches the configured horizon.
void validate_episode(const Episode& episode, const SystemParams& params);

struct StateAction {
    double level = 0.0;
    double action = 0.0;
};

/// x + g(u) - w. The level is not clamped to the tank.
double step_dynamics(double level, double action, double demand,
                     const PumpCurve& pump = PumpCurve::identity());
/// Same, additionally rejecting actions outside [0, u_max].
double step_dynamics(const SystemParams& params, double level, double action, double demand);

/// Per-hour loss split into its three weighted terms plus the raw physical
/// quantities used for metric accounting.
struct LossTerms {
    double deviation_sq = 0.0; ///< (x - xbar)^2
    double carbon_g = 0.0;     ///< e * eta * u
    double energy_usd = 0.0;   ///< p * eta * u

    double deviation = 0.0; ///< gamma1 * deviation_sq
    double carbon = 0.0;    ///< gamma2 * carbon_g
    double energy = 0.0;    ///< gamma3 * energy_usd
    double total = 0.0;
};

LossTerms loss(double level, double action, double carbon_intensity, double price,
               const SystemParams& params);

/// Partial derivatives of the hourly loss.
struct Gradient2 {
    double d_level = 0.0;
    double d_action = 0.0;
};

Gradient2 loss_gradient(double level, double action, double carbon_intensity, double price,
                        const SystemParams& params);

/// Weighted squared distance to the nominal level (symmetric or asymmetric).
double level_penalty(double level, const SystemParams& params);
double level_penalty_derivative(double level, const SystemParams& params);

/// Hourly safety risk: level penalty plus gamma_b * (eta * u)^2.
double risk(double level, double action, const SystemParams& params);
Gradient2 risk_gradient(double level, double action, const SystemParams& params);

/// Cumulative totals for one episode. Mutable, one per episode.
class RiskLedger {
public:
    /// Records one round. Risks and loss must be non-negative.
    void record(double live_risk, double prior_risk, double round_loss);

    double live() const noexcept { return live_; }
    double prior() const noexcept { return prior_; }
    double loss() const noexcept { return loss_; }
    int rounds() const noexcept { return rounds_; }

private:
    double live_ = 0.0;
    double prior_ = 0.0;
    double loss_ = 0.0;
    int rounds_ = 0;
};

} // namespace laoc
