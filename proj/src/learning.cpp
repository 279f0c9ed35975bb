#include "laoc/learning.hpp"

#include "laoc/errors.hpp"
#include "laoc/log.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace laoc {

std::string to_string(TrainMode mode) { return mode == TrainMode::Pure ? "pure" : "finetune"; }

TrainMode parse_train_mode(const std::string& name) {
    if (name == "pure") return TrainMode::Pure;
    if (name == "finetune") return TrainMode::Finetune;
    throw InvalidInput("unknown training mode '" + name + "' (expected pure|finetune)");
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw InvalidInput("learning rate must be finite and non-negative");
    if (epochs < 1) throw InvalidInput("epochs must be at least 1");
    if (batch_size < 1) throw InvalidInput("batch size must be at least 1");
    if (mode == TrainMode::Finetune && !(lambda > 0.0))
        throw InvalidInput("finetuning needs lambda > 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) ||
        !(adam_epsilon > 0.0))
        throw InvalidInput("invalid Adam hyperparameters");
}

namespace {

struct PureRound {
    PolicyNet::Tape tape;
    double level = 0.0;
    double action = 0.0;
};

struct SafeRound {
    PolicyNet::Tape tape;
    double level = 0.0;
    double action = 0.0;
    // Partials of the executed action with respect to the ML action, the
    // level and the previous cumulative risk.
    double d_ml = 1.0;
    double d_level = 0.0;
    double d_prev_risk = 0.0;
};

} // namespace

EpisodeGradient pure_episode_gradient(const PolicyNet& net, const Episode& episode,
                                      const SystemParams& params) {
    validate_episode(episode, params);
    const auto horizon = episode.size();
    std::vector<PureRound> rounds(horizon);
    EpisodeGradient out;
    out.grad.assign(PolicyNet::parameter_count(), 0.0);

    double x = episode.start_level(params);
    for (std::size_t h = 0; h < horizon; ++h) {
        const auto& s = episode.steps[h];
        auto& r = rounds[h];
        r.level = x;
        r.action = net.forward(policy_features(episode, static_cast<int>(h), x, params, net.scales()),
                               r.tape);
        out.loss += loss(x, r.action, s.carbon_intensity, s.price, params).total;
        x = step_dynamics(x, r.action, s.demand, params.pump);
    }

    const double level_sens = feature_level_sensitivity(params);
    double adj_level = 0.0; // dJ/dx_{h+1}
    for (std::size_t h = horizon; h-- > 0;) {
        const auto& s = episode.steps[h];
        const auto& r = rounds[h];
        const auto g = loss_gradient(r.level, r.action, s.carbon_intensity, s.price, params);
        const double d_action = g.d_action + adj_level * params.pump.slope(r.action);
        const auto d_feat = net.backward(r.tape, d_action, out.grad);
        adj_level = g.d_level + adj_level + d_feat[0] * level_sens;
    }
    return out;
}

EpisodeGradient safe_episode_gradient(const PolicyNet& net, const Episode& episode,
                                      const SystemParams& params, const SafeSetParams& safe,
                                      const PriorConfig& prior_config) {
    validate_episode(episode, params);
    if (!(safe.lambda > 0.0)) throw InvalidSafety("safe finetuning needs lambda > 0");
    if (safe.horizon() != params.horizon)
        throw InvalidInput("safe-set parameters do not match the horizon");

    const auto horizon = episode.size();
    const auto& pump = params.pump;
    const double kb = params.gamma_b * params.eta * params.eta;
    std::vector<SafeRound> rounds(horizon);
    EpisodeGradient out;
    out.grad.assign(PolicyNet::parameter_count(), 0.0);

    auto prior = make_prior(prior_config, params);
    prior->reset(episode);
    double x = episode.start_level(params);
    double xd = x;
    double live_risk = 0.0;
    double prior_risk = 0.0;

    for (std::size_t h = 0; h < horizon; ++h) {
        const auto& s = episode.steps[h];
        auto& r = rounds[h];
        const double ud = prior->act(static_cast<int>(h), xd);
        prior_risk += risk(xd, ud, params);
        const double uml = net.forward(
            policy_features(episode, static_cast<int>(h), x, params, net.scales()), r.tape);

        const SafeSetQuery query{live_risk, prior_risk, x, xd, ud, safe.q[h], safe.lambda};
        if (constraint_value(query, ud, params) > kFeasibilityTol)
            throw InvariantViolation("safe set excludes the prior action during finetuning");

        r.level = x;
        r.action = uml;
        if (constraint_value(query, uml, params) > 0.0) {
            ++out.binding_rounds;
            const auto mapped = map_linear(uml, query, params, 0.0);
            const double u = mapped.action;
            const double rho = mapped.rho;
            r.action = u;
            // G(rho, uml, x, R) = R + r(x, u) + q (x + g(u) - xd - g(ud))^2 - budget
            const double gap = x + pump(u) - xd - pump(ud);
            const double dg_du = 2.0 * kb * u + 2.0 * query.q * gap * pump.slope(u);
            const double dg_drho = dg_du * (uml - ud);
            if (std::abs(dg_drho) < 1e-12) {
                ++out.flat_rounds;
                r.d_ml = rho;
                r.d_level = 0.0;
                r.d_prev_risk = 0.0;
            } else {
                const double dg_dx = level_penalty_derivative(x, params) + 2.0 * query.q * gap;
                const double span = uml - ud;
                r.d_ml = rho - span * (dg_du * rho) / dg_drho;
                r.d_level = -span * dg_dx / dg_drho;
                r.d_prev_risk = -span / dg_drho;
            }
        }
        if (constraint_value(query, r.action, params) > kFeasibilityTol)
            throw InvariantViolation("finetuning executed an unsafe action");

        out.loss += loss(x, r.action, s.carbon_intensity, s.price, params).total;
        live_risk += risk(x, r.action, params);
        prior->observe(static_cast<int>(h), xd, ud, s.demand);
        xd = step_dynamics(xd, ud, s.demand, pump);
        x = step_dynamics(x, r.action, s.demand, pump);
    }
    if (out.flat_rounds > 0)
        log_info("finetuning: " + std::to_string(out.flat_rounds) +
                 " binding round(s) with a flat constraint on '" + episode.id + "'");

    const double level_sens = feature_level_sensitivity(params);
    double adj_level = 0.0; // dJ/dx_{h+1}
    double adj_risk = 0.0;  // dJ/dR_h
    for (std::size_t h = horizon; h-- > 0;) {
        const auto& s = episode.steps[h];
        const auto& r = rounds[h];
        const auto gl = loss_gradient(r.level, r.action, s.carbon_intensity, s.price, params);
        const auto gr = risk_gradient(r.level, r.action, params);
        const double d_action =
            gl.d_action + adj_level * pump.slope(r.action) + adj_risk * gr.d_action;
        double d_level = gl.d_level + adj_level + adj_risk * gr.d_level + d_action * r.d_level;
        const double d_prev_risk = adj_risk + d_action * r.d_prev_risk;
        const auto d_feat = net.backward(r.tape, d_action * r.d_ml, out.grad);
        d_level += d_feat[0] * level_sens;
        adj_level = d_level;
        adj_risk = d_prev_risk;
    }
    return out;
}

EpisodeGradient batch_gradient(const PolicyNet& net, const std::vector<Episode>& episodes,
                               std::span<const std::size_t> indices, const SystemParams& params,
                               const SafeSetParams* safe, const PriorConfig& prior) {
    EpisodeGradient total;
    total.grad.assign(PolicyNet::parameter_count(), 0.0);
    if (indices.empty()) return total;
    for (auto i : indices) {
        const auto& ep = episodes.at(i);
        auto g = safe ? safe_episode_gradient(net, ep, params, *safe, prior)
                      : pure_episode_gradient(net, ep, params);
        total.loss += g.loss;
        for (std::size_t k = 0; k < total.grad.size(); ++k) total.grad[k] += g.grad[k];
        total.binding_rounds += g.binding_rounds;
        total.flat_rounds += g.flat_rounds;
    }
    const double n = static_cast<double>(indices.size());
    total.loss /= n;
    for (auto& v : total.grad) v /= n;
    return total;
}

namespace {

class Adam {
public:
    Adam(std::size_t n, const TrainConfig& c) : m_(n, 0.0), v_(n, 0.0), c_(c) {}

    void step(std::vector<double>& theta, const std::vector<double>& grad) {
        ++t_;
        const double b1t = 1.0 - std::pow(c_.adam_beta1, t_);
        const double b2t = 1.0 - std::pow(c_.adam_beta2, t_);
        for (std::size_t k = 0; k < theta.size(); ++k) {
            m_[k] = c_.adam_beta1 * m_[k] + (1.0 - c_.adam_beta1) * grad[k];
            v_[k] = c_.adam_beta2 * v_[k] + (1.0 - c_.adam_beta2) * grad[k] * grad[k];
            theta[k] -= c_.learning_rate * (m_[k] / b1t) / (std::sqrt(v_[k] / b2t) + c_.adam_epsilon);
        }
    }

private:
    std::vector<double> m_, v_;
    const TrainConfig& c_;
    int t_ = 0;
};

TrainResult run_training(PolicyNet net, const std::vector<Episode>& episodes,
                         const SystemParams& params, const SafeSetParams* safe,
                         const TrainConfig& config) {
    config.validate();
    params.validate();
    if (episodes.empty()) throw InvalidInput("training needs at least one episode");

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(episodes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Adam adam(PolicyNet::parameter_count(), config);

    TrainResult result{std::move(net), {}, 0};
    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t len = std::min(batch, order.size() - start);
            auto g = batch_gradient(result.net, episodes,
                                    std::span<const std::size_t>(order.data() + start, len),
                                    params, safe, config.prior);
            const bool finite = std::isfinite(g.loss) &&
                                std::all_of(g.grad.begin(), g.grad.end(),
                                            [](double v) { return std::isfinite(v); });
            if (!finite) {
                std::ostringstream msg;
                msg << "training diverged at epoch " << epoch + 1 << ", batch " << batches + 1
                    << " (batch loss " << g.loss << ", learning rate " << config.learning_rate
                    << ")";
                throw TrainingDiverged(msg.str());
            }
            adam.step(result.net.theta(), g.grad);
            epoch_loss += g.loss;
            result.flat_rounds += g.flat_rounds;
            ++batches;
        }
        result.loss_curve.push_back(epoch_loss / batches);
    }
    return result;
}

} // namespace

TrainResult train_pure(const std::vector<Episode>& episodes, const SystemParams& params,
                       const TrainConfig& config, std::optional<PolicyNet> init) {
    if (episodes.empty()) throw InvalidInput("training needs at least one episode");
    PolicyNet net = init ? std::move(*init)
                         : PolicyNet::random(params.u_max, feature_scales(episodes), config.seed);
    return run_training(std::move(net), episodes, params, nullptr, config);
}

TrainResult finetune_safe(PolicyNet init, const std::vector<Episode>& episodes,
                          const SystemParams& params, const SafeSetParams& safe,
                          const TrainConfig& config) {
    if (!(safe.lambda > 0.0)) throw InvalidSafety("finetuning needs lambda > 0");
    return run_training(std::move(init), episodes, params, &safe, config);
}

namespace {

using nlohmann::json;

json architecture_json() {
    return {{"inputs", kFeatureCount},
            {"hidden", {kHiddenUnits, kHiddenUnits}},
            {"outputs", 1},
            {"activation", "tanh"},
            {"output_activation", "scaled_logistic"},
            {"parameters", PolicyNet::parameter_count()}};
}

json prior_json(const PriorConfig& p) {
    return {{"kind", to_string(p.kind)},
            {"ogd_step", p.ogd_step},
            {"robd_lambda1", p.robd_lambda1},
            {"mpc_window", p.mpc_window},
            {"mpc_epsilon", p.mpc_epsilon},
            {"mpc_noise_sigma", p.mpc_noise_sigma},
            {"mpc_seed", p.mpc_seed},
            {"trailing_window", p.trailing_window},
            {"initial_demand_estimate", p.initial_demand_estimate}};
}

PriorConfig prior_from_json(const json& j) {
    PriorConfig p;
    p.kind = parse_prior_kind(j.at("kind").get<std::string>());
    p.ogd_step = j.at("ogd_step").get<double>();
    p.robd_lambda1 = j.at("robd_lambda1").get<double>();
    p.mpc_window = j.at("mpc_window").get<int>();
    p.mpc_epsilon = j.at("mpc_epsilon").get<double>();
    p.mpc_noise_sigma = j.at("mpc_noise_sigma").get<double>();
    p.mpc_seed = j.at("mpc_seed").get<std::uint64_t>();
    p.trailing_window = j.at("trailing_window").get<int>();
    p.initial_demand_estimate = j.at("initial_demand_estimate").get<double>();
    return p;
}

} // namespace

void save_policy(const std::filesystem::path& path, const PolicyFile& file) {
    const auto& t = file.train;
    json j;
    j["format"] = "laoc-policy";
    j["version"] = kPolicyFormatVersion;
    j["architecture"] = architecture_json();
    j["u_max"] = file.net.u_max();
    j["scales"] = {{"carbon_ref", file.net.scales().carbon_ref},
                   {"price_ref", file.net.scales().price_ref},
                   {"demand_ref", file.net.scales().demand_ref}};
    j["train"] = {{"learning_rate", t.learning_rate},
                  {"epochs", t.epochs},
                  {"batch_size", t.batch_size},
                  {"seed", t.seed},
                  {"mode", to_string(t.mode)},
                  {"lambda", t.lambda},
                  {"prior", prior_json(t.prior)}};
    j["config"] = file.config_echo;
    j["loss_curve"] = file.loss_curve;
    j["theta"] = file.net.theta();

    std::ofstream out(path);
    if (!out) throw Error("cannot write policy file '" + path.string() + "'");
    out << j.dump(1) << '\n';
    if (!out) throw Error("failed writing policy file '" + path.string() + "'");
}

PolicyFile load_policy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open policy file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidInput("policy file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        if (j.at("format") != "laoc-policy")
            throw InvalidInput("'" + path.string() + "' is not a policy file");
        if (j.at("version").get<int>() != kPolicyFormatVersion)
            throw InvalidInput("unsupported policy file version " + j.at("version").dump());
        if (j.at("architecture") != architecture_json())
            throw InvalidInput("policy architecture " + j.at("architecture").dump() +
                               " does not match " + architecture_json().dump());
        FeatureScales scales;
        scales.carbon_ref = j.at("scales").at("carbon_ref").get<double>();
        scales.price_ref = j.at("scales").at("price_ref").get<double>();
        scales.demand_ref = j.at("scales").at("demand_ref").get<double>();
        PolicyNet net(j.at("u_max").get<double>(), scales,
                      j.at("theta").get<std::vector<double>>());
        TrainConfig t;
        const auto& tj = j.at("train");
        t.learning_rate = tj.at("learning_rate").get<double>();
        t.epochs = tj.at("epochs").get<int>();
        t.batch_size = tj.at("batch_size").get<int>();
        t.seed = tj.at("seed").get<std::uint64_t>();
        t.mode = parse_train_mode(tj.at("mode").get<std::string>());
        t.lambda = tj.at("lambda").get<double>();
        t.prior = prior_from_json(tj.at("prior"));
        return {std::move(net), t, j.value("loss_curve", std::vector<double>{}),
                j.value("config", std::string{})};
    } catch (const json::exception& e) {
        throw InvalidInput("policy file '" + path.string() + "' is malformed: " + e.what());
    }
}

} // namespace laoc
