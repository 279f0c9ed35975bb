// laoc command-line entry point.
//
//   laoc gen    --seed 1 --episodes 10 --horizon 24 --out traces.csv [--ood]
//   laoc train  --traces traces.csv --out policy.json [--mode finetune --lambda 0.4]
//   laoc bench  --traces test.csv --policy policy.json --controllers prior,ml,laoc --lambdas 0.4
//   laoc verify [--quick]
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include "laoc/config.hpp"
#include "laoc/errors.hpp"
#include "laoc/harness.hpp"
#include "laoc/learning.hpp"
#include "laoc/log.hpp"
#include "laoc/traces.hpp"
#include "laoc/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    unsigned jobs = 0;
};

laoc::RunConfig base_config(const Common& common) {
    if (common.config_path.empty()) return {};
    try {
        return laoc::load_config(common.config_path);
    } catch (const laoc::InvalidInput& e) {
        throw UsageError(e.what());
    }
}

bool given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }

std::vector<laoc::Episode> read_traces(const std::string& path, int horizon) {
    auto loaded = laoc::load_csv(std::filesystem::path(path), horizon);
    if (loaded.episodes.empty())
        throw laoc::Error("no complete " + std::to_string(horizon) + "-hour episode in '" + path + "'");
    return loaded.episodes;
}

// ---- gen

struct GenArgs {
    std::uint64_t seed = 1;
    int episodes = 100;
    int horizon = 24;
    std::string out;
    bool ood = false;
    CLI::Option* horizon_opt = nullptr;
};

int cmd_gen(const Common& common, const GenArgs& a) {
    auto config = base_config(common);
    if (given(a.horizon_opt) || common.config_path.empty()) config.system.horizon = a.horizon;
    if (config.system.horizon < 1) throw UsageError("--horizon must be at least 1");
    if (a.episodes < 1) throw UsageError("--episodes must be at least 1");

    auto episodes = laoc::gen_synthetic(a.seed, a.episodes, config.system.horizon);
    if (a.ood) episodes = laoc::perturb_ood(episodes, a.seed);
    std::ostringstream echo;
    echo << "laoc gen seed=" << a.seed << " episodes=" << a.episodes
         << " horizon=" << config.system.horizon << " ood=" << (a.ood ? 1 : 0);
    laoc::write_csv(std::filesystem::path(a.out), episodes, echo.str());
    return 0;
}

// ---- train

struct TrainArgs {
    std::string traces;
    std::string out;
    std::string init;
    std::string mode = "pure";
    std::string prior = "ogd";
    int epochs = 400;
    double lr = 5e-4;
    int batch_size = 20;
    std::uint64_t seed = 7;
    double lambda = 0.0;
    CLI::Option *epochs_opt = nullptr, *lr_opt = nullptr, *batch_opt = nullptr, *seed_opt = nullptr,
                *mode_opt = nullptr, *lambda_opt = nullptr, *prior_opt = nullptr;
};

int cmd_train(const Common& common, const TrainArgs& a) {
    auto config = base_config(common);
    auto& t = config.train;
    if (given(a.epochs_opt)) t.epochs = a.epochs;
    if (given(a.lr_opt)) t.learning_rate = a.lr;
    if (given(a.batch_opt)) t.batch_size = a.batch_size;
    if (given(a.seed_opt)) t.seed = a.seed;
    if (given(a.mode_opt)) t.mode = laoc::parse_train_mode(a.mode);
    if (given(a.prior_opt)) config.prior.kind = laoc::parse_prior_kind(a.prior);
    t.prior = config.prior;
    if (t.mode == laoc::TrainMode::Finetune) {
        if (!given(a.lambda_opt) && !(t.lambda > 0.0))
            throw UsageError("--mode finetune requires --lambda");
        if (given(a.lambda_opt)) t.lambda = a.lambda;
        config.lambda = t.lambda;
    }
    try {
        t.validate();
    } catch (const laoc::InvalidInput& e) {
        throw UsageError(e.what());
    }

    const auto episodes = read_traces(a.traces, config.system.horizon);
    const auto& params = config.system;
    std::vector<double> curve;
    std::optional<laoc::PolicyNet> net;
    if (!a.init.empty()) net = laoc::load_policy(a.init).net;

    if (t.mode == laoc::TrainMode::Pure) {
        auto result = laoc::train_pure(episodes, params, t, net);
        curve = std::move(result.loss_curve);
        net = std::move(result.net);
    } else {
        if (!net) {
            // Finetuning starts from a pure policy trained with the same budget.
            auto pure = t;
            pure.mode = laoc::TrainMode::Pure;
            net = laoc::train_pure(episodes, params, pure).net;
        }
        const auto safe = laoc::SafeSetParams::build(params, t.lambda, config.c1, config.c2);
        auto result = laoc::finetune_safe(std::move(*net), episodes, params, safe, t);
        curve = std::move(result.loss_curve);
        net = std::move(result.net);
    }
    laoc::save_policy(a.out, {std::move(*net), t, curve, laoc::echo_config(config)});
    std::fprintf(stderr, "trained %d epochs: loss %.6g -> %.6g\n", t.epochs, curve.front(),
                 curve.back());
    return 0;
}

// ---- bench

struct BenchArgs {
    std::string traces;
    std::string policy;
    std::string out = "-";
    std::string dataset;
    std::string mapping = "projection";
    std::string prior = "ogd";
    std::vector<std::string> controllers{"prior", "ml", "laoc"};
    std::vector<double> lambdas{0.4};
    double rho = 0.5;
    bool ood = false;
    std::uint64_t seed = 1;
    CLI::Option *lambdas_opt = nullptr, *prior_opt = nullptr;
};

int cmd_bench(const Common& common, const BenchArgs& a) {
    auto config = base_config(common);
    if (given(a.prior_opt)) config.prior.kind = laoc::parse_prior_kind(a.prior);
    std::vector<double> lambdas = a.lambdas;
    if (!given(a.lambdas_opt) && !common.config_path.empty()) lambdas = {config.lambda};
    for (double l : lambdas)
        if (!(l >= 0.0)) throw UsageError("lambdas must be non-negative");

    std::vector<laoc::ControllerSpec> specs;
    bool needs_ml = false;
    for (const auto& name : a.controllers) {
        laoc::ControllerConfig c;
        try {
            c.kind = laoc::parse_controller_kind(name);
            c.mapping = laoc::parse_mapping(a.mapping);
        } catch (const laoc::InvalidInput& e) {
            throw UsageError(e.what());
        }
        c.rho = a.rho;
        c.prior = config.prior;
        c.c1 = config.c1;
        c.c2 = config.c2;
        needs_ml = needs_ml || (c.kind != laoc::ControllerKind::PriorOnly &&
                                c.kind != laoc::ControllerKind::Opt);
        specs.push_back({laoc::to_string(c.kind), c});
    }
    if (needs_ml && a.policy.empty()) throw UsageError("the selected controllers need --policy");

    auto episodes = read_traces(a.traces, config.system.horizon);
    if (a.ood) episodes = laoc::perturb_ood(episodes, a.seed);
    auto& prior = config.prior;
    if (prior.kind == laoc::PriorKind::Mpc && prior.mpc_epsilon > 0.0 && prior.mpc_noise_sigma < 0.0) {
        prior.mpc_noise_sigma = laoc::calibrate_mpc_noise(episodes, prior.mpc_epsilon, prior.mpc_seed);
        for (auto& s : specs) s.config.prior = prior;
    }

    std::unique_ptr<laoc::Advisor> ml;
    if (!a.policy.empty()) {
        auto file = laoc::load_policy(a.policy);
        if (file.net.u_max() != config.system.u_max)
            laoc::log_warning("policy u_max differs from the system's; ML actions are clamped");
        ml = std::make_unique<laoc::NetAdvisor>(std::move(file.net), config.system);
    }
    std::string dataset = a.dataset;
    if (dataset.empty()) dataset = std::filesystem::path(a.traces).stem().string() + (a.ood ? "-ood" : "");

    const auto rows = laoc::evaluate(specs, episodes, lambdas, config.system, ml.get(), dataset, common.jobs);
    std::ostringstream echo;
    echo << "laoc bench traces=" << std::filesystem::path(a.traces).filename().string()
         << " policy=" << (a.policy.empty() ? "-" : std::filesystem::path(a.policy).filename().string())
         << " mapping=" << a.mapping << " rho=" << a.rho << " config=" << laoc::echo_config(config);
    if (a.out == "-") {
        laoc::write_results_csv(std::cout, rows, echo.str());
    } else {
        std::ofstream out(a.out);
        if (!out) throw laoc::Error("cannot write results file '" + a.out + "'");
        laoc::write_results_csv(out, rows, echo.str());
    }
    return 0;
}

// ---- verify

struct VerifyArgs {
    bool quick = false;
    bool corrupt_q = false;
    std::uint64_t seed = 2024;
    std::vector<int> only;
};

int cmd_verify(const Common& common, const VerifyArgs& a) {
    laoc::VerifyOptions options;
    options.quick = a.quick;
    options.corrupt_q = a.corrupt_q;
    options.jobs = common.jobs;
    options.seed = a.seed;
    options.only = a.only;
    options.on_result = [](const laoc::CheckResult& r) {
        std::printf("%s\n", laoc::format_check(r).c_str());
        std::fflush(stdout);
    };
    laoc::set_log_sink({});
    const auto results = laoc::run_acceptance(options);
    int failed = 0;
    for (const auto& r : results) failed += r.pass ? 0 : 1;
    std::printf("%d of %zu checks passed\n", static_cast<int>(results.size()) - failed, results.size());
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learning-augmented safe pump scheduling"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "JSON config (flags override it)");
    app.add_option("--jobs", common.jobs, "worker threads (0 = all cores)");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate synthetic traces");
    gen_cmd->add_option("--seed", gen.seed);
    gen_cmd->add_option("--episodes", gen.episodes);
    gen.horizon_opt = gen_cmd->add_option("--horizon", gen.horizon);
    gen_cmd->add_option("--out", gen.out)->required();
    gen_cmd->add_flag("--ood", gen.ood, "add Gaussian demand noise (sigma = 0.3 max demand)");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "train or finetune a policy");
    train_cmd->add_option("--traces", train.traces)->required();
    train_cmd->add_option("--out", train.out)->required();
    train_cmd->add_option("--init", train.init, "policy file to start from");
    train.epochs_opt = train_cmd->add_option("--epochs", train.epochs);
    train.lr_opt = train_cmd->add_option("--lr", train.lr);
    train.batch_opt = train_cmd->add_option("--batch-size", train.batch_size);
    train.seed_opt = train_cmd->add_option("--seed", train.seed);
    train.mode_opt = train_cmd->add_option("--mode", train.mode)->check(CLI::IsMember({"pure", "finetune"}));
    train.lambda_opt = train_cmd->add_option("--lambda", train.lambda);
    train.prior_opt = train_cmd->add_option("--prior", train.prior)
                          ->check(CLI::IsMember({"ogd", "robd", "mpc", "greedy"}));

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "evaluate controllers and write a results CSV");
    bench_cmd->add_option("--traces", bench.traces)->required();
    bench_cmd->add_option("--policy", bench.policy);
    bench_cmd->add_option("--controllers", bench.controllers, "prior,ml,laoc,lin,linplus,opt")
        ->delimiter(',');
    bench.lambdas_opt = bench_cmd->add_option("--lambdas", bench.lambdas)->delimiter(',');
    bench_cmd->add_option("--out", bench.out, "results CSV ('-' = stdout)");
    bench_cmd->add_option("--dataset", bench.dataset, "label for the dataset column");
    bench_cmd->add_option("--mapping", bench.mapping)->check(CLI::IsMember({"projection", "linear"}));
    bench.prior_opt = bench_cmd->add_option("--prior", bench.prior)
                          ->check(CLI::IsMember({"ogd", "robd", "mpc", "greedy"}));
    bench_cmd->add_option("--rho", bench.rho, "Lin combination weight");
    bench_cmd->add_flag("--ood", bench.ood, "perturb the loaded traces");
    bench_cmd->add_option("--seed", bench.seed, "seed of the OOD perturbation");

    VerifyArgs verify;
    auto* verify_cmd = app.add_subcommand("verify", "run the acceptance checks");
    verify_cmd->add_flag("--quick", verify.quick, "reduced episode counts");
    verify_cmd->add_option("--seed", verify.seed);
    verify_cmd->add_option("--only", verify.only, "criterion ids to run")->delimiter(',');
    verify_cmd->add_flag("--corrupt-q", verify.corrupt_q)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen_cmd) return cmd_gen(common, gen);
        if (*train_cmd) return cmd_train(common, train);
        if (*bench_cmd) return cmd_bench(common, bench);
        if (*verify_cmd) return cmd_verify(common, verify);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const laoc::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
