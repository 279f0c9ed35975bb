#include "laoc/priors.hpp"

#include "laoc/box_pgd.hpp"
#include "laoc/errors.hpp"
#include "laoc/log.hpp"
#include "laoc/util.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <sstream>

namespace laoc {

std::string to_string(PriorKind kind) {
    switch (kind) {
    case PriorKind::Ogd: return "ogd";
    case PriorKind::Robd: return "robd";
    case PriorKind::Mpc: return "mpc";
    case PriorKind::Greedy: return "greedy";
    }
    return "?";
}

PriorKind parse_prior_kind(const std::string& name) {
    if (name == "ogd") return PriorKind::Ogd;
    if (name == "robd") return PriorKind::Robd;
    if (name == "mpc") return PriorKind::Mpc;
    if (name == "greedy") return PriorKind::Greedy;
    throw InvalidInput("unknown prior '" + name + "' (expected ogd|robd|mpc|greedy)");
}

double ogd_update(double prev_action, double resulting_level, const SystemParams& params,
                  double step) {
    const double grad = 2.0 * params.gamma_b * params.eta * params.eta * prev_action +
                        level_penalty_derivative(resulting_level, params) *
                            params.pump.slope(prev_action);
    return std::clamp(prev_action - step * grad, 0.0, params.u_max);
}

double robd_action(double level, double demand, double prev_action, const SystemParams& params,
                   double lambda1) {
    if (!params.pump.is_identity()) throw InvalidInput("ROBD needs the identity pump curve");
    const double kb = params.gamma_b * params.eta * params.eta;
    const double target = params.nominal_level - level + demand; // u giving zero deviation
    auto solve = [&](double weight) {
        return (weight * target + lambda1 * prev_action) / (weight + kb + lambda1);
    };
    double u = solve(params.weight_below());
    if (u > target) {
        u = solve(params.weight_above());
        if (u < target) u = target;
    }
    return std::clamp(u, 0.0, params.u_max);
}

double greedy_level_tracker(double level, double mean_demand, const SystemParams& params) {
    return std::clamp(params.nominal_level - level + mean_demand, 0.0, params.u_max);
}

double lookahead_risk(double level, std::span<const double> actions,
                      std::span<const double> demand, const SystemParams& params) {
    const double kb = params.gamma_b * params.eta * params.eta;
    double x = level;
    double total = 0.0;
    for (std::size_t k = 0; k < actions.size(); ++k) {
        x = x + params.pump(actions[k]) - demand[k];
        total += kb * actions[k] * actions[k] + level_penalty(x, params);
    }
    return total;
}

MpcPlan mpc_plan(double level, std::span<const double> predicted_demand,
                 const SystemParams& params, std::span<const double> warm_start) {
    if (!params.pump.is_identity()) throw InvalidInput("MPC needs the identity pump curve");
    const std::size_t n = predicted_demand.size();
    MpcPlan plan;
    if (n == 0) return plan;
    const double kb = params.gamma_b * params.eta * params.eta;

    std::vector<double> penalty_grad(n);
    SmoothObjective objective = [&](std::span<const double> u, std::span<double> grad) {
        double x = level;
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            x = x + u[k] - predicted_demand[k];
            total += kb * u[k] * u[k] + level_penalty(x, params);
            penalty_grad[k] = level_penalty_derivative(x, params);
        }
        // d/du_j sum_{k>=j} penalty(x_{k+1}): suffix sums.
        double suffix = 0.0;
        for (std::size_t j = n; j-- > 0;) {
            suffix += penalty_grad[j];
            grad[j] = 2.0 * kb * u[j] + suffix;
        }
        return total;
    };

    const double wmax = std::max(params.weight_below(), params.weight_above());
    BoxPgdOptions options;
    options.lipschitz = 2.0 * kb + wmax * static_cast<double>(n * (n + 1));
    options.tolerance = 1e-8;
    options.max_iterations = 10'000;

    std::vector<double> start(n, 0.0);
    for (std::size_t k = 0; k < std::min(n, warm_start.size()); ++k) start[k] = warm_start[k];
    auto result = minimize_box(objective, std::move(start), 0.0, params.u_max, options);
    if (!result.converged) {
        std::ostringstream msg;
        msg << "MPC solve stopped after " << result.iterations
            << " iterations, gradient mapping norm " << result.gradient_mapping_norm;
        log_warning(msg.str());
    }
    plan.actions = std::move(result.x);
    plan.objective = result.value;
    plan.iterations = result.iterations;
    plan.converged = result.converged;
    return plan;
}

std::vector<std::vector<double>> mpc_forecasts(const Episode& episode, double sigma,
                                               std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, fnv1a(episode.id)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t horizon = episode.size();
    std::vector<std::vector<double>> rows(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        rows[h].resize(horizon - h);
        for (std::size_t k = h; k < horizon; ++k) {
            const double z = normal(rng);
            rows[h][k - h] = std::max(0.0, episode.steps[k].demand + sigma * z);
        }
    }
    return rows;
}

double forecast_error(const std::vector<Episode>& episodes, double sigma, std::uint64_t seed) {
    double wmax = 0.0;
    for (const auto& e : episodes)
        for (const auto& s : e.steps) wmax = std::max(wmax, s.demand);
    if (wmax <= 0.0 || episodes.empty()) return 0.0;

    double total = 0.0;
    std::size_t count = 0;
    for (const auto& e : episodes) {
        const auto rows = mpc_forecasts(e, sigma, seed);
        for (std::size_t h = 0; h < rows.size(); ++h) {
            double sq = 0.0;
            for (std::size_t k = 0; k < rows[h].size(); ++k) {
                const double d = rows[h][k] - e.steps[h + k].demand;
                sq += d * d;
            }
            total += std::sqrt(sq) / (static_cast<double>(rows[h].size()) * wmax);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double calibrate_mpc_noise(const std::vector<Episode>& episodes, double epsilon,
                           std::uint64_t seed) {
    if (!(epsilon >= 0.0)) throw InvalidInput("MPC prediction error must be non-negative");
    if (epsilon == 0.0) return 0.0;
    if (episodes.empty()) throw InvalidInput("MPC calibration needs episodes");
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 60 && forecast_error(episodes, hi, seed) < epsilon; ++i) hi *= 2.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double err = forecast_error(episodes, mid, seed);
        if (std::abs(err - epsilon) <= 1e-4 * epsilon) return mid;
        (err < epsilon ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

class TrailingDemand {
public:
    TrailingDemand(int window, double initial) : window_(window), initial_(initial) {}

    void clear() { values_.clear(); }
    void push(double w) {
        values_.push_back(w);
        if (static_cast<int>(values_.size()) > window_) values_.pop_front();
    }
    double mean() const {
        if (values_.empty()) return initial_;
        return std::accumulate(values_.begin(), values_.end(), 0.0) /
               static_cast<double>(values_.size());
    }

private:
    int window_;
    double initial_;
    std::deque<double> values_;
};

class OgdPrior final : public ControlPrior {
public:
    OgdPrior(const PriorConfig& config, const SystemParams& params)
        : params_(params),
          step_(config.ogd_step > 0.0 ? config.ogd_step : 0.5 / params.beta()),
          trailing_(config.trailing_window, config.initial_demand_estimate) {}

    void reset(const Episode&) override {
        trailing_.clear();
        prev_action_ = 0.0;
    }
    double act(int h, double level) override {
        if (h == 0) return greedy_level_tracker(level, trailing_.mean(), params_);
        return ogd_update(prev_action_, level, params_, step_);
    }
    void observe(int, double, double action, double demand) override {
        prev_action_ = action;
        trailing_.push(demand);
    }

private:
    SystemParams params_;
    double step_;
    TrailingDemand trailing_;
    double prev_action_ = 0.0;
};

class RobdPrior final : public ControlPrior {
public:
    RobdPrior(const PriorConfig& config, const SystemParams& params)
        : params_(params),
          lambda1_(config.robd_lambda1 >= 0.0 ? config.robd_lambda1 : params.gamma_w) {}

    void reset(const Episode& episode) override {
        demand_.clear();
        for (const auto& s : episode.steps) demand_.push_back(s.demand);
        prev_action_ = 0.0;
    }
    double act(int h, double level) override {
        return robd_action(level, demand_.at(static_cast<std::size_t>(h)), prev_action_, params_,
                           h == 0 ? 0.0 : lambda1_);
    }
    void observe(int, double, double action, double) override { prev_action_ = action; }

private:
    SystemParams params_;
    double lambda1_;
    std::vector<double> demand_;
    double prev_action_ = 0.0;
};

class MpcPrior final : public ControlPrior {
public:
    MpcPrior(const PriorConfig& config, const SystemParams& params)
        : params_(params), window_(config.mpc_window), seed_(config.mpc_seed) {
        if (window_ < 1) throw InvalidInput("MPC window must be at least 1");
        if (config.mpc_noise_sigma >= 0.0) {
            sigma_ = config.mpc_noise_sigma;
        } else if (config.mpc_epsilon == 0.0) {
            sigma_ = 0.0;
        } else {
            throw InvalidInput("MPC prior with epsilon > 0 needs a calibrated noise sigma");
        }
    }

    void reset(const Episode& episode) override {
        forecasts_ = mpc_forecasts(episode, sigma_, seed_);
        plan_.clear();
    }
    double act(int h, double level) override {
        const auto& row = forecasts_.at(static_cast<std::size_t>(h));
        const std::size_t n = std::min(static_cast<std::size_t>(window_), row.size());
        std::vector<double> warm;
        if (plan_.size() > 1) warm.assign(plan_.begin() + 1, plan_.end());
        auto plan = mpc_plan(level, std::span<const double>(row.data(), n), params_, warm);
        plan_ = std::move(plan.actions);
        return plan_.empty() ? 0.0 : plan_.front();
    }
    void observe(int, double, double, double) override {}

private:
    SystemParams params_;
    int window_;
    std::uint64_t seed_;
    double sigma_ = 0.0;
    std::vector<std::vector<double>> forecasts_;
    std::vector<double> plan_;
};

class GreedyPrior final : public ControlPrior {
public:
    GreedyPrior(const PriorConfig& config, const SystemParams& params)
        : params_(params), trailing_(config.trailing_window, config.initial_demand_estimate) {}

    void reset(const Episode&) override { trailing_.clear(); }
    double act(int, double level) override {
        return greedy_level_tracker(level, trailing_.mean(), params_);
    }
    void observe(int, double, double, double demand) override { trailing_.push(demand); }

private:
    SystemParams params_;
    TrailingDemand trailing_;
};

} // namespace

std::unique_ptr<ControlPrior> make_prior(const PriorConfig& config, const SystemParams& params) {
    if (config.trailing_window < 1) throw InvalidInput("trailing window must be at least 1");
    switch (config.kind) {
    case PriorKind::Ogd: return std::make_unique<OgdPrior>(config, params);
    case PriorKind::Robd: return std::make_unique<RobdPrior>(config, params);
    case PriorKind::Mpc: return std::make_unique<MpcPrior>(config, params);
    case PriorKind::Greedy: return std::make_unique<GreedyPrior>(config, params);
    }
    throw InvalidInput("unknown prior kind");
}

} // namespace laoc
