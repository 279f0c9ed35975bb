#include "laoc/harness.hpp"

#include "laoc/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace laoc {

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs == 0) jobs = default_jobs();
    const auto workers = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<EpisodeResult> run_batch(const std::vector<Episode>& episodes,
                                     const SystemParams& params, const ControllerConfig& config,
                                     const Advisor* ml, unsigned jobs) {
    config.validate();
    const SafeSetParams* safe = nullptr;
    SafeSetParams built;
    if (config.kind == ControllerKind::Laoc && config.lambda > 0.0) {
        built = SafeSetParams::build(params, config.lambda, config.c1, config.c2);
        safe = &built;
    }
    std::vector<EpisodeResult> results(episodes.size());
    parallel_for(episodes.size(), jobs, [&](std::size_t i) {
        auto advisor = ml ? ml->clone() : nullptr;
        results[i] = run_controller(episodes[i], params, config, advisor.get(), safe);
    });
    return results;
}

MetricsRow summarize(const std::vector<EpisodeResult>& results, const std::string& controller,
                     double lambda, const std::string& dataset) {
    MetricsRow row;
    row.controller = controller;
    row.lambda = lambda;
    row.dataset = dataset;
    row.n_episodes = static_cast<int>(results.size());
    if (results.empty()) return row;

    std::vector<std::size_t> order(results.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return results[a].trace_id < results[b].trace_id;
    });
    int violating = 0;
    for (auto i : order) {
        const auto& r = results[i];
        row.avg_loss += r.total_loss();
        row.avg_energy_usd += r.total_energy_usd();
        row.avg_carbon_g += r.total_carbon_g();
        row.max_risk_ratio = std::max(row.max_risk_ratio, r.risk_ratio());
        if (r.any_violation()) ++violating;
    }
    const double n = static_cast<double>(results.size());
    row.avg_loss /= n;
    row.avg_energy_usd /= n;
    row.avg_carbon_g /= n;
    row.violation_prob = violating / n;
    return row;
}

std::vector<MetricsRow> evaluate(const std::vector<ControllerSpec>& controllers,
                                 const std::vector<Episode>& episodes,
                                 const std::vector<double>& lambdas, const SystemParams& params,
                                 const Advisor* ml, const std::string& dataset, unsigned jobs) {
    if (episodes.empty()) throw InvalidInput("evaluation needs at least one episode");
    std::vector<MetricsRow> rows;
    for (const auto& spec : controllers) {
        for (double lambda : lambdas) {
            auto config = spec.config;
            config.lambda = lambda;
            const auto results = run_batch(episodes, params, config, ml, jobs);
            rows.push_back(summarize(results, spec.label, lambda, dataset));
        }
    }
    return rows;
}

std::vector<MetricsRow> sweep_lambda(const std::vector<double>& lambdas,
                                     const std::vector<Episode>& episodes,
                                     const SystemParams& params, const ControllerConfig& base,
                                     const Advisor& ml, const std::string& dataset,
                                     unsigned jobs) {
    if (!std::is_sorted(lambdas.begin(), lambdas.end()))
        throw InvalidInput("lambda list must be sorted ascending");
    auto config = base;
    config.kind = ControllerKind::Laoc;
    return evaluate({{"laoc", config}}, episodes, lambdas, params, &ml, dataset, jobs);
}

void write_results_csv(std::ostream& out, const std::vector<MetricsRow>& rows,
                       const std::string& comment) {
    out << kResultsCsvHeader << '\n';
    if (!comment.empty()) out << "# " << comment << '\n';
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, ",%.10g,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%d\n", r.lambda,
                      r.dataset.c_str(), r.avg_loss, r.avg_energy_usd, r.avg_carbon_g,
                      r.max_risk_ratio, r.violation_prob, r.n_episodes);
        out << r.controller << buf;
    }
}

} // namespace laoc
