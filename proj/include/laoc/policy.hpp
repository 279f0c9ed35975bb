#pragma once

#include "laoc/model.hpp"
#include "laoc/priors.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace laoc {

inline constexpr int kFeatureCount = 7;
inline constexpr int kHiddenUnits = 12;
inline constexpr int kTrailingHours = 8;

using Features = std::array<double, kFeatureCount>;

/// Normalizers for the price, carbon and demand features (training-set means).
struct FeatureScales {
    double carbon_ref = 1.0;
    double price_ref = 1.0;
    double demand_ref = 1.0;
};

FeatureScales feature_scales(const std::vector<Episode>& episodes);

/// Causal features at round h:
///   level/capacity, sin(2 pi h/24), cos(2 pi h/24), e_h/e_ref, p_h/p_ref,
///   mean demand over the previous 8 hours / w_ref (1 before any observation),
///   h/H.
Features policy_features(const Episode& episode, int h, double level, const SystemParams& params,
                         const FeatureScales& scales);

/// d(features)/d(level); only the first feature depends on the level.
inline double feature_level_sensitivity(const SystemParams& params) {
    return 1.0 / params.tank_capacity;
}

/// Feed-forward policy 7 -> 12 -> 12 -> 1 with tanh hidden layers and a
/// logistic output scaled to [0, u_max].
///
/// Parameter layout (row-major): W1[12x7], b1[12], W2[12x12], b2[12],
/// W3[1x12], b3[1].
class PolicyNet {
public:
    struct Tape {
        Features input{};
        std::array<double, kHiddenUnits> h1{};
        std::array<double, kHiddenUnits> h2{};
        double logit = 0.0;
        double output = 0.0;
    };

    PolicyNet(double u_max, FeatureScales scales, std::vector<double> theta);

    static constexpr std::size_t parameter_count() {
        return kHiddenUnits * kFeatureCount + kHiddenUnits + kHiddenUnits * kHiddenUnits +
               kHiddenUnits + kHiddenUnits + 1;
    }
    static PolicyNet zeros(double u_max, FeatureScales scales = {});
    /// Glorot-uniform weights, zero biases.
    static PolicyNet random(double u_max, FeatureScales scales, std::uint64_t seed);

    /// Throws InvalidInput on non-finite features.
    double forward(const Features& features) const;
    double forward(const Features& features, Tape& tape) const;
    /// Accumulates d_output * d(output)/d(theta) into d_theta and returns
    /// d_output * d(output)/d(features).
    Features backward(const Tape& tape, double d_output, std::span<double> d_theta) const;

    double u_max() const noexcept { return u_max_; }
    const FeatureScales& scales() const noexcept { return scales_; }
    const std::vector<double>& theta() const noexcept { return theta_; }
    std::vector<double>& theta() noexcept { return theta_; }

private:
    double u_max_;
    FeatureScales scales_;
    std::vector<double> theta_;
};

/// Source of the untrusted (ML) action in every round. One clone per episode
/// worker; reset() is called at the start of each episode.
class Advisor {
public:
    virtual ~Advisor() = default;
    virtual std::unique_ptr<Advisor> clone() const = 0;
    virtual void reset(const Episode& episode) = 0;
    /// Action for round h given the live level. Demand of rounds < h is known.
    virtual double advise(int h, double level) = 0;
};

class NetAdvisor final : public Advisor {
public:
    NetAdvisor(PolicyNet net, SystemParams params);
    std::unique_ptr<Advisor> clone() const override;
    void reset(const Episode& episode) override;
    double advise(int h, double level) override;

private:
    PolicyNet net_;
    SystemParams params_;
    const Episode* episode_ = nullptr;
};

/// Uniform actions on [0, u_max], seeded per episode from (seed, episode id).
class UniformRandomAdvisor final : public Advisor {
public:
    UniformRandomAdvisor(double u_max, std::uint64_t seed);
    std::unique_ptr<Advisor> clone() const override;
    void reset(const Episode& episode) override;
    double advise(int h, double level) override;

private:
    double u_max_;
    std::uint64_t seed_;
    std::uint64_t state_ = 0;
};

class ConstantAdvisor final : public Advisor {
public:
    explicit ConstantAdvisor(double action) : action_(action) {}
    std::unique_ptr<Advisor> clone() const override;
    void reset(const Episode&) override {}
    double advise(int, double) override { return action_; }

private:
    double action_;
};

/// Replays a control prior on the live trajectory.
class PriorAdvisor final : public Advisor {
public:
    PriorAdvisor(PriorConfig config, SystemParams params);
    std::unique_ptr<Advisor> clone() const override;
    void reset(const Episode& episode) override;
    double advise(int h, double level) override;

private:
    PriorConfig config_;
    SystemParams params_;
    std::unique_ptr<ControlPrior> prior_;
    const Episode* episode_ = nullptr;
    int pending_round_ = -1;
    double pending_level_ = 0.0;
    double pending_action_ = 0.0;
};

} // namespace laoc
