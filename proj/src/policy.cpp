#include "laoc/policy.hpp"

#include "laoc/errors.hpp"
#include "laoc/util.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace laoc {

namespace {

constexpr std::size_t kW1 = 0;
constexpr std::size_t kB1 = kW1 + kHiddenUnits * kFeatureCount;
constexpr std::size_t kW2 = kB1 + kHiddenUnits;
constexpr std::size_t kB2 = kW2 + kHiddenUnits * kHiddenUnits;
constexpr std::size_t kW3 = kB2 + kHiddenUnits;
constexpr std::size_t kB3 = kW3 + kHiddenUnits;
static_assert(kB3 + 1 == PolicyNet::parameter_count());

double logistic(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

} // namespace

FeatureScales feature_scales(const std::vector<Episode>& episodes) {
    double e = 0.0, p = 0.0, w = 0.0;
    std::size_t n = 0;
    for (const auto& ep : episodes) {
        for (const auto& s : ep.steps) {
            e += s.carbon_intensity;
            p += s.price;
            w += s.demand;
            ++n;
        }
    }
    FeatureScales scales;
    if (n == 0) return scales;
    const double count = static_cast<double>(n);
    // Guard against all-zero columns; the feature then stays zero.
    scales.carbon_ref = e > 0.0 ? e / count : 1.0;
    scales.price_ref = p > 0.0 ? p / count : 1.0;
    scales.demand_ref = w > 0.0 ? w / count : 1.0;
    return scales;
}

Features policy_features(const Episode& episode, int h, double level, const SystemParams& params,
                         const FeatureScales& scales) {
    const auto& step = episode.steps.at(static_cast<std::size_t>(h));
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(h) / 24.0;

    double trailing = 1.0;
    const int first = std::max(0, h - kTrailingHours);
    if (h > first) {
        double sum = 0.0;
        for (int k = first; k < h; ++k) sum += episode.steps[static_cast<std::size_t>(k)].demand;
        trailing = sum / static_cast<double>(h - first) / scales.demand_ref;
    }
    return {level / params.tank_capacity,
            std::sin(phase),
            std::cos(phase),
            step.carbon_intensity / scales.carbon_ref,
            step.price / scales.price_ref,
            trailing,
            static_cast<double>(h) / static_cast<double>(params.horizon)};
}

PolicyNet::PolicyNet(double u_max, FeatureScales scales, std::vector<double> theta)
    : u_max_(u_max), scales_(scales), theta_(std::move(theta)) {
    if (theta_.size() != parameter_count())
        throw InvalidInput("policy parameter vector has " + std::to_string(theta_.size()) +
                           " entries, expected " + std::to_string(parameter_count()));
    if (!(u_max_ > 0.0)) throw InvalidInput("policy u_max must be positive");
}

PolicyNet PolicyNet::zeros(double u_max, FeatureScales scales) {
    return {u_max, scales, std::vector<double>(parameter_count(), 0.0)};
}

PolicyNet PolicyNet::random(double u_max, FeatureScales scales, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, 0x5eedULL));
    auto uniform = [&](double limit) {
        const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return (2.0 * unit - 1.0) * limit;
    };
    std::vector<double> theta(parameter_count(), 0.0);
    auto fill = [&](std::size_t offset, int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (int i = 0; i < fan_in * fan_out; ++i) theta[offset + static_cast<std::size_t>(i)] = uniform(limit);
    };
    fill(kW1, kFeatureCount, kHiddenUnits);
    fill(kW2, kHiddenUnits, kHiddenUnits);
    fill(kW3, kHiddenUnits, 1);
    return {u_max, scales, std::move(theta)};
}

double PolicyNet::forward(const Features& features) const {
    Tape tape;
    return forward(features, tape);
}

double PolicyNet::forward(const Features& features, Tape& tape) const {
    for (double f : features)
        if (!std::isfinite(f)) throw InvalidInput("policy features must be finite");
    const double* t = theta_.data();
    tape.input = features;
    for (int i = 0; i < kHiddenUnits; ++i) {
        double z = t[kB1 + i];
        for (int j = 0; j < kFeatureCount; ++j) z += t[kW1 + i * kFeatureCount + j] * features[j];
        tape.h1[i] = std::tanh(z);
    }
    for (int i = 0; i < kHiddenUnits; ++i) {
        double z = t[kB2 + i];
        for (int j = 0; j < kHiddenUnits; ++j) z += t[kW2 + i * kHiddenUnits + j] * tape.h1[j];
        tape.h2[i] = std::tanh(z);
    }
    double z = t[kB3];
    for (int j = 0; j < kHiddenUnits; ++j) z += t[kW3 + j] * tape.h2[j];
    tape.logit = z;
    tape.output = u_max_ * logistic(z);
    return tape.output;
}

Features PolicyNet::backward(const Tape& tape, double d_output, std::span<double> d_theta) const {
    const double* t = theta_.data();
    const double s = tape.output / u_max_;
    const double d_logit = d_output * u_max_ * s * (1.0 - s);

    std::array<double, kHiddenUnits> d_z2{};
    d_theta[kB3] += d_logit;
    for (int j = 0; j < kHiddenUnits; ++j) {
        d_theta[kW3 + j] += d_logit * tape.h2[j];
        d_z2[j] = d_logit * t[kW3 + j] * (1.0 - tape.h2[j] * tape.h2[j]);
    }
    std::array<double, kHiddenUnits> d_z1{};
    for (int i = 0; i < kHiddenUnits; ++i) {
        d_theta[kB2 + i] += d_z2[i];
        for (int j = 0; j < kHiddenUnits; ++j) {
            d_theta[kW2 + i * kHiddenUnits + j] += d_z2[i] * tape.h1[j];
            d_z1[j] += d_z2[i] * t[kW2 + i * kHiddenUnits + j];
        }
    }
    Features d_input{};
    for (int i = 0; i < kHiddenUnits; ++i) {
        const double dz = d_z1[i] * (1.0 - tape.h1[i] * tape.h1[i]);
        d_theta[kB1 + i] += dz;
        for (int j = 0; j < kFeatureCount; ++j) {
            d_theta[kW1 + i * kFeatureCount + j] += dz * tape.input[j];
            d_input[j] += dz * t[kW1 + i * kFeatureCount + j];
        }
    }
    return d_input;
}

NetAdvisor::NetAdvisor(PolicyNet net, SystemParams params)
    : net_(std::move(net)), params_(std::move(params)) {}

std::unique_ptr<Advisor> NetAdvisor::clone() const {
    return std::make_unique<NetAdvisor>(net_, params_);
}

void NetAdvisor::reset(const Episode& episode) { episode_ = &episode; }

double NetAdvisor::advise(int h, double level) {
    return net_.forward(policy_features(*episode_, h, level, params_, net_.scales()));
}

UniformRandomAdvisor::UniformRandomAdvisor(double u_max, std::uint64_t seed)
    : u_max_(u_max), seed_(seed) {}

std::unique_ptr<Advisor> UniformRandomAdvisor::clone() const {
    return std::make_unique<UniformRandomAdvisor>(u_max_, seed_);
}

void UniformRandomAdvisor::reset(const Episode& episode) {
    state_ = mix_seed(seed_, fnv1a(episode.id));
}

double UniformRandomAdvisor::advise(int, double) {
    state_ = mix_seed(state_, 0xa5a5ULL);
    return static_cast<double>(state_ >> 11) * 0x1.0p-53 * u_max_;
}

std::unique_ptr<Advisor> ConstantAdvisor::clone() const {
    return std::make_unique<ConstantAdvisor>(action_);
}

PriorAdvisor::PriorAdvisor(PriorConfig config, SystemParams params)
    : config_(config), params_(std::move(params)), prior_(make_prior(config_, params_)) {}

std::unique_ptr<Advisor> PriorAdvisor::clone() const {
    return std::make_unique<PriorAdvisor>(config_, params_);
}

void PriorAdvisor::reset(const Episode& episode) {
    episode_ = &episode;
    prior_->reset(episode);
    pending_round_ = -1;
}

double PriorAdvisor::advise(int h, double level) {
    if (pending_round_ >= 0 && pending_round_ == h - 1)
        prior_->observe(pending_round_, pending_level_, pending_action_,
                        episode_->steps[static_cast<std::size_t>(pending_round_)].demand);
    pending_round_ = h;
    pending_level_ = level;
    pending_action_ = prior_->act(h, level);
    return pending_action_;
}

} // namespace laoc
