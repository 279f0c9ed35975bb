#include "laoc/config.hpp"

#include "laoc/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace laoc {

namespace {

using nlohmann::json;

void reject_unknown(const json& section, const std::string& name,
                    const std::set<std::string>& known) {
    if (!section.is_object()) throw InvalidInput("config section '" + name + "' must be an object");
    for (const auto& [key, _] : section.items())
        if (!known.count(key)) throw InvalidInput("unknown config key '" + name + "." + key + "'");
}

template <typename T>
void read(const json& section, const char* key, T& out) {
    if (section.contains(key)) out = section.at(key).get<T>();
}

void read_system(const json& j, SystemParams& s) {
    reject_unknown(j, "system",
                   {"tank_capacity", "nominal_level", "u_max", "eta", "gamma1", "gamma2", "gamma3",
                    "gamma_w", "gamma_b", "gamma_w_lo", "gamma_w_hi", "distance", "horizon",
                    "pump_knots"});
    read(j, "tank_capacity", s.tank_capacity);
    read(j, "nominal_level", s.nominal_level);
    read(j, "u_max", s.u_max);
    read(j, "eta", s.eta);
    read(j, "gamma1", s.gamma1);
    read(j, "gamma2", s.gamma2);
    read(j, "gamma3", s.gamma3);
    read(j, "gamma_w", s.gamma_w);
    read(j, "gamma_b", s.gamma_b);
    read(j, "gamma_w_lo", s.gamma_w_lo);
    read(j, "gamma_w_hi", s.gamma_w_hi);
    read(j, "horizon", s.horizon);
    if (j.contains("distance")) {
        const auto d = j.at("distance").get<std::string>();
        if (d == "symmetric") s.distance = DistanceMode::Symmetric;
        else if (d == "asymmetric") s.distance = DistanceMode::Asymmetric;
        else throw InvalidInput("system.distance must be 'symmetric' or 'asymmetric'");
    }
    if (j.contains("pump_knots")) {
        const auto knots = j.at("pump_knots").get<std::vector<std::pair<double, double>>>();
        s.pump = knots.empty() ? PumpCurve::identity() : PumpCurve::piecewise(knots);
    }
}

void read_prior(const json& j, PriorConfig& p) {
    reject_unknown(j, "prior",
                   {"kind", "ogd_step", "robd_lambda1", "mpc_window", "mpc_epsilon",
                    "mpc_noise_sigma", "mpc_seed", "trailing_window", "initial_demand_estimate"});
    if (j.contains("kind")) p.kind = parse_prior_kind(j.at("kind").get<std::string>());
    read(j, "ogd_step", p.ogd_step);
    read(j, "robd_lambda1", p.robd_lambda1);
    read(j, "mpc_window", p.mpc_window);
    read(j, "mpc_epsilon", p.mpc_epsilon);
    read(j, "mpc_noise_sigma", p.mpc_noise_sigma);
    read(j, "mpc_seed", p.mpc_seed);
    read(j, "trailing_window", p.trailing_window);
    read(j, "initial_demand_estimate", p.initial_demand_estimate);
}

void read_train(const json& j, TrainConfig& t) {
    reject_unknown(j, "train",
                   {"learning_rate", "epochs", "batch_size", "seed", "mode", "lambda", "adam_beta1",
                    "adam_beta2", "adam_epsilon"});
    read(j, "learning_rate", t.learning_rate);
    read(j, "epochs", t.epochs);
    read(j, "batch_size", t.batch_size);
    read(j, "seed", t.seed);
    if (j.contains("mode")) t.mode = parse_train_mode(j.at("mode").get<std::string>());
    read(j, "lambda", t.lambda);
    read(j, "adam_beta1", t.adam_beta1);
    read(j, "adam_beta2", t.adam_beta2);
    read(j, "adam_epsilon", t.adam_epsilon);
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    try {
        const auto j = json::parse(text);
        reject_unknown(j, "(root)", {"system", "safe_set", "train", "prior"});
        if (j.contains("system")) read_system(j.at("system"), c.system);
        if (j.contains("safe_set")) {
            const auto& s = j.at("safe_set");
            reject_unknown(s, "safe_set", {"lambda", "c1", "c2"});
            read(s, "lambda", c.lambda);
            if (s.contains("c1")) c.c1 = s.at("c1").get<double>();
            if (s.contains("c2")) c.c2 = s.at("c2").get<double>();
        }
        if (j.contains("train")) read_train(j.at("train"), c.train);
        if (j.contains("prior")) read_prior(j.at("prior"), c.prior);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("invalid config: ") + e.what());
    }
    c.train.prior = c.prior;
    c.system.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file '" + path.string() + "'");
    std::stringstream text;
    text << in.rdbuf();
    try {
        return parse_config(text.str());
    } catch (const InvalidInput& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

std::string echo_config(const RunConfig& c) {
    const auto& s = c.system;
    json knots = json::array();
    for (const auto& [u, g] : s.pump.knots()) knots.push_back({u, g});
    json j;
    j["system"] = {{"tank_capacity", s.tank_capacity},
                   {"nominal_level", s.nominal_level},
                   {"u_max", s.u_max},
                   {"eta", s.eta},
                   {"gamma1", s.gamma1},
                   {"gamma2", s.gamma2},
                   {"gamma3", s.gamma3},
                   {"gamma_w", s.gamma_w},
                   {"gamma_b", s.gamma_b},
                   {"gamma_w_lo", s.gamma_w_lo},
                   {"gamma_w_hi", s.gamma_w_hi},
                   {"distance", s.distance == DistanceMode::Symmetric ? "symmetric" : "asymmetric"},
                   {"horizon", s.horizon},
                   {"pump_knots", knots}};
    j["safe_set"] = {{"lambda", c.lambda}};
    if (c.c1) j["safe_set"]["c1"] = *c.c1;
    if (c.c2) j["safe_set"]["c2"] = *c.c2;
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"seed", c.train.seed},
                  {"mode", to_string(c.train.mode)},
                  {"lambda", c.train.lambda}};
    j["prior"] = {{"kind", to_string(c.prior.kind)},
                  {"ogd_step", c.prior.ogd_step},
                  {"robd_lambda1", c.prior.robd_lambda1},
                  {"mpc_window", c.prior.mpc_window},
                  {"mpc_epsilon", c.prior.mpc_epsilon},
                  {"mpc_noise_sigma", c.prior.mpc_noise_sigma},
                  {"mpc_seed", c.prior.mpc_seed},
                  {"trailing_window", c.prior.trailing_window},
                  {"initial_demand_estimate", c.prior.initial_demand_estimate}};
    return j.dump();
}

} // namespace laoc
