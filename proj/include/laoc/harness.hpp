#pragma once

#include "laoc/controllers.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace laoc {

/// Runs fn(i) for i in [0, n) on at most `jobs` threads (0 = hardware
/// concurrency). The first exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

unsigned default_jobs();

/// One result per episode, in input order. ml is cloned per episode and may
/// be null for controllers that do not use it. The safe set is built once.
std::vector<EpisodeResult> run_batch(const std::vector<Episode>& episodes,
                                     const SystemParams& params, const ControllerConfig& config,
                                     const Advisor* ml, unsigned jobs = 0);

struct MetricsRow {
    std::string controller;
    double lambda = 0.0;
    std::string dataset;
    double avg_loss = 0.0;
    double avg_energy_usd = 0.0;
    double avg_carbon_g = 0.0;
    double max_risk_ratio = 0.0;
    double violation_prob = 0.0;
    int n_episodes = 0;
};

/// Folds results in episode-id order.
MetricsRow summarize(const std::vector<EpisodeResult>& results, const std::string& controller,
                     double lambda, const std::string& dataset);

struct ControllerSpec {
    std::string label;
    ControllerConfig config; ///< lambda is overwritten by the grid
};

/// One row per controller and lambda, controllers outermost.
std::vector<MetricsRow> evaluate(const std::vector<ControllerSpec>& controllers,
                                 const std::vector<Episode>& episodes,
                                 const std::vector<double>& lambdas, const SystemParams& params,
                                 const Advisor* ml, const std::string& dataset,
                                 unsigned jobs = 0);

/// LAOC rows over an ascending lambda list.
std::vector<MetricsRow> sweep_lambda(const std::vector<double>& lambdas,
                                     const std::vector<Episode>& episodes,
                                     const SystemParams& params, const ControllerConfig& base,
                                     const Advisor& ml, const std::string& dataset,
                                     unsigned jobs = 0);

inline constexpr const char* kResultsCsvHeader =
    "controller,lambda,dataset,avg_loss,avg_energy_usd,avg_carbon_g,max_risk_ratio,"
    "violation_prob,n_episodes";

/// Header, optional '#' comment line, then one row per entry (%.10g).
void write_results_csv(std::ostream& out, const std::vector<MetricsRow>& rows,
                       const std::string& comment = {});

} // namespace laoc
