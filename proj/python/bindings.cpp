// Python bindings: the data types, trace helpers, controllers, training and
// the benchmark harness. Heavy loops release the GIL.

#include "laoc/config.hpp"
#include "laoc/controllers.hpp"
#include "laoc/errors.hpp"
#include "laoc/harness.hpp"
#include "laoc/learning.hpp"
#include "laoc/safeset.hpp"
#include "laoc/traces.hpp"
#include "laoc/verify.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace laoc;

namespace {

EpisodeResult run_one(const Episode& episode, const SystemParams& params,
                      const ControllerConfig& config, const PolicyNet* policy, double constant) {
    std::unique_ptr<Advisor> ml;
    if (policy != nullptr) ml = std::make_unique<NetAdvisor>(*policy, params);
    else if (constant >= 0.0) ml = std::make_unique<ConstantAdvisor>(constant);
    return run_controller(episode, params, config, ml.get());
}

} // namespace

PYBIND11_MODULE(_laoc, m) {
    m.doc() = "Safe learning-augmented pump scheduling";

    auto base = py::register_exception<Error>(m, "LaocError");
    py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
    py::register_exception<InvalidSafety>(m, "InvalidSafety", base.ptr());
    py::register_exception<EmptySet>(m, "EmptySet", base.ptr());
    py::register_exception<InvariantViolation>(m, "InvariantViolation", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<TrainingDiverged>(m, "TrainingDiverged", base.ptr());

    py::enum_<DistanceMode>(m, "DistanceMode")
        .value("SYMMETRIC", DistanceMode::Symmetric)
        .value("ASYMMETRIC", DistanceMode::Asymmetric);

    py::class_<SystemParams>(m, "SystemParams")
        .def(py::init<>())
        .def_readwrite("tank_capacity", &SystemParams::tank_capacity)
        .def_readwrite("nominal_level", &SystemParams::nominal_level)
        .def_readwrite("u_max", &SystemParams::u_max)
        .def_readwrite("eta", &SystemParams::eta)
        .def_readwrite("gamma1", &SystemParams::gamma1)
        .def_readwrite("gamma2", &SystemParams::gamma2)
        .def_readwrite("gamma3", &SystemParams::gamma3)
        .def_readwrite("gamma_w", &SystemParams::gamma_w)
        .def_readwrite("gamma_b", &SystemParams::gamma_b)
        .def_readwrite("gamma_w_lo", &SystemParams::gamma_w_lo)
        .def_readwrite("gamma_w_hi", &SystemParams::gamma_w_hi)
        .def_readwrite("distance", &SystemParams::distance)
        .def_readwrite("horizon", &SystemParams::horizon)
        .def_property_readonly("beta", &SystemParams::beta)
        .def_property_readonly("alpha", &SystemParams::alpha)
        .def("validate", &SystemParams::validate);

    py::class_<TraceStep>(m, "TraceStep")
        .def(py::init<>())
        .def(py::init([](double w, double e, double p) { return TraceStep{w, e, p}; }),
             py::arg("demand"), py::arg("carbon_intensity"), py::arg("price"))
        .def_readwrite("demand", &TraceStep::demand)
        .def_readwrite("carbon_intensity", &TraceStep::carbon_intensity)
        .def_readwrite("price", &TraceStep::price);

    py::class_<Episode>(m, "Episode")
        .def(py::init<>())
        .def_readwrite("id", &Episode::id)
        .def_readwrite("steps", &Episode::steps)
        .def_readwrite("initial_level", &Episode::initial_level)
        .def_readwrite("start_hour", &Episode::start_hour)
        .def("__len__", &Episode::size);

    m.def("step_dynamics", py::overload_cast<const SystemParams&, double, double, double>(&step_dynamics),
          py::arg("params"), py::arg("level"), py::arg("action"), py::arg("demand"));
    m.def("loss", [](double x, double u, double e, double p, const SystemParams& s) {
        return loss(x, u, e, p, s).total;
    });
    m.def("risk", &risk, py::arg("level"), py::arg("action"), py::arg("params"));

    py::class_<SafeSetParams>(m, "SafeSetParams")
        .def_static("build", &SafeSetParams::build, py::arg("params"), py::arg("lambda_"),
                    py::arg("c1") = py::none(), py::arg("c2") = py::none())
        .def_readonly("lambda_", &SafeSetParams::lambda)
        .def_readonly("c1", &SafeSetParams::c1)
        .def_readonly("c2", &SafeSetParams::c2)
        .def_readonly("lambda0", &SafeSetParams::lambda0)
        .def_readonly("q", &SafeSetParams::q);

    py::class_<Interval>(m, "Interval")
        .def_readonly("lo", &Interval::lo)
        .def_readonly("hi", &Interval::hi);

    py::class_<SafeSetQuery>(m, "SafeSetQuery")
        .def(py::init<>())
        .def_readwrite("prev_live_risk", &SafeSetQuery::prev_live_risk)
        .def_readwrite("prior_risk", &SafeSetQuery::prior_risk)
        .def_readwrite("level", &SafeSetQuery::level)
        .def_readwrite("prior_level", &SafeSetQuery::prior_level)
        .def_readwrite("prior_action", &SafeSetQuery::prior_action)
        .def_readwrite("q", &SafeSetQuery::q)
        .def_readwrite("lambda_", &SafeSetQuery::lambda);
    m.def("safe_interval", &safe_interval);
    m.def("constraint_value", &constraint_value);

    // Traces.
    m.def("gen_synthetic",
          [](std::uint64_t seed, int n, int horizon) { return gen_synthetic(seed, n, horizon); },
          py::arg("seed"), py::arg("n_episodes"), py::arg("horizon") = 24);
    m.def("perturb_ood", &perturb_ood, py::arg("episodes"), py::arg("seed"),
          py::arg("fraction") = 0.3);
    m.def("load_csv", [](const std::filesystem::path& path, int horizon) {
        return load_csv(path, horizon).episodes;
    }, py::arg("path"), py::arg("horizon") = 24);
    m.def("write_csv",
          py::overload_cast<const std::filesystem::path&, const std::vector<Episode>&,
                            const std::string&>(&write_csv),
          py::arg("path"), py::arg("episodes"), py::arg("comment") = "");

    // Controllers.
    py::enum_<ControllerKind>(m, "ControllerKind")
        .value("LAOC", ControllerKind::Laoc)
        .value("LIN", ControllerKind::Lin)
        .value("LIN_PLUS", ControllerKind::LinPlus)
        .value("PURE_ML", ControllerKind::PureMl)
        .value("PRIOR_ONLY", ControllerKind::PriorOnly)
        .value("OPT", ControllerKind::Opt);
    py::enum_<Mapping>(m, "Mapping")
        .value("PROJECTION", Mapping::Projection)
        .value("LINEAR", Mapping::Linear);
    py::enum_<PriorKind>(m, "PriorKind")
        .value("OGD", PriorKind::Ogd)
        .value("ROBD", PriorKind::Robd)
        .value("MPC", PriorKind::Mpc)
        .value("GREEDY", PriorKind::Greedy);

    py::class_<PriorConfig>(m, "PriorConfig")
        .def(py::init<>())
        .def_readwrite("kind", &PriorConfig::kind)
        .def_readwrite("ogd_step", &PriorConfig::ogd_step)
        .def_readwrite("robd_lambda1", &PriorConfig::robd_lambda1)
        .def_readwrite("mpc_window", &PriorConfig::mpc_window)
        .def_readwrite("mpc_epsilon", &PriorConfig::mpc_epsilon)
        .def_readwrite("mpc_noise_sigma", &PriorConfig::mpc_noise_sigma);

    py::class_<ControllerConfig>(m, "ControllerConfig")
        .def(py::init<>())
        .def(py::init([](ControllerKind kind, double lambda) {
                 ControllerConfig c;
                 c.kind = kind;
                 c.lambda = lambda;
                 return c;
             }),
             py::arg("kind"), py::arg("lambda_") = 0.4)
        .def_readwrite("kind", &ControllerConfig::kind)
        .def_readwrite("lambda_", &ControllerConfig::lambda)
        .def_readwrite("rho", &ControllerConfig::rho)
        .def_readwrite("mapping", &ControllerConfig::mapping)
        .def_readwrite("prior", &ControllerConfig::prior);

    py::class_<EpisodeResult>(m, "EpisodeResult")
        .def_readonly("trace_id", &EpisodeResult::trace_id)
        .def_readonly("level", &EpisodeResult::level)
        .def_readonly("action", &EpisodeResult::action)
        .def_readonly("ml_action", &EpisodeResult::ml_action)
        .def_readonly("prior_action", &EpisodeResult::prior_action)
        .def_readonly("cum_risk", &EpisodeResult::cum_risk)
        .def_readonly("cum_prior_risk", &EpisodeResult::cum_prior_risk)
        .def_readonly("cum_loss", &EpisodeResult::cum_loss)
        .def_readonly("binding", &EpisodeResult::binding)
        .def_readonly("violation", &EpisodeResult::violation)
        .def_property_readonly("total_loss", &EpisodeResult::total_loss)
        .def_property_readonly("risk_ratio", &EpisodeResult::risk_ratio)
        .def("any_violation", &EpisodeResult::any_violation);

    py::class_<FeatureScales>(m, "FeatureScales").def(py::init<>());
    py::class_<PolicyNet>(m, "PolicyNet")
        .def_static("zeros", &PolicyNet::zeros, py::arg("u_max"), py::arg("scales") = FeatureScales{})
        .def_property_readonly("u_max", &PolicyNet::u_max)
        .def_property_readonly("theta", py::overload_cast<>(&PolicyNet::theta, py::const_));

    m.def("run_controller", &run_one, py::arg("episode"), py::arg("params"), py::arg("config"),
          py::arg("policy") = nullptr, py::arg("constant_action") = -1.0,
          py::call_guard<py::gil_scoped_release>(),
          "Runs one episode. The ML advice comes from `policy`, else from a constant action.");

    // Training.
    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("lambda_", &TrainConfig::lambda)
        .def_readwrite("prior", &TrainConfig::prior);
    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("net", &TrainResult::net)
        .def_readonly("loss_curve", &TrainResult::loss_curve);
    m.def("train_pure",
          [](const std::vector<Episode>& e, const SystemParams& p, const TrainConfig& c) {
              return train_pure(e, p, c);
          },
          py::call_guard<py::gil_scoped_release>());
    m.def("finetune_safe", &finetune_safe, py::call_guard<py::gil_scoped_release>());
    m.def("save_policy", [](const std::filesystem::path& path, const PolicyNet& net,
                            const TrainConfig& c, const std::vector<double>& curve) {
        save_policy(path, {net, c, curve, ""});
    });
    m.def("load_policy", [](const std::filesystem::path& path) { return load_policy(path).net; });

    // Harness.
    py::class_<MetricsRow>(m, "MetricsRow")
        .def_readonly("controller", &MetricsRow::controller)
        .def_readonly("lambda_", &MetricsRow::lambda)
        .def_readonly("dataset", &MetricsRow::dataset)
        .def_readonly("avg_loss", &MetricsRow::avg_loss)
        .def_readonly("avg_energy_usd", &MetricsRow::avg_energy_usd)
        .def_readonly("avg_carbon_g", &MetricsRow::avg_carbon_g)
        .def_readonly("max_risk_ratio", &MetricsRow::max_risk_ratio)
        .def_readonly("violation_prob", &MetricsRow::violation_prob)
        .def_readonly("n_episodes", &MetricsRow::n_episodes);
    m.def("evaluate",
          [](const std::vector<std::pair<std::string, ControllerConfig>>& controllers,
             const std::vector<Episode>& episodes, const std::vector<double>& lambdas,
             const SystemParams& params, const PolicyNet* policy, const std::string& dataset,
             unsigned jobs) {
              std::vector<ControllerSpec> specs;
              for (const auto& [label, config] : controllers) specs.push_back({label, config});
              std::unique_ptr<Advisor> ml;
              if (policy != nullptr) ml = std::make_unique<NetAdvisor>(*policy, params);
              return evaluate(specs, episodes, lambdas, params, ml.get(), dataset, jobs);
          },
          py::arg("controllers"), py::arg("episodes"), py::arg("lambdas"), py::arg("params"),
          py::arg("policy") = nullptr, py::arg("dataset") = "", py::arg("jobs") = 0,
          py::call_guard<py::gil_scoped_release>());

    py::class_<CheckResult>(m, "CheckResult")
        .def_readonly("id", &CheckResult::id)
        .def_readonly("name", &CheckResult::name)
        .def_readonly("passed", &CheckResult::pass)
        .def_readonly("detail", &CheckResult::detail)
        .def("__str__", &format_check);
    m.def("run_acceptance",
          [](bool quick, std::vector<int> only, unsigned jobs) {
              VerifyOptions o;
              o.quick = quick;
              o.only = std::move(only);
              o.jobs = jobs;
              return run_acceptance(o);
          },
          py::arg("quick") = true, py::arg("only") = std::vector<int>{}, py::arg("jobs") = 0,
          py::call_guard<py::gil_scoped_release>());
}
