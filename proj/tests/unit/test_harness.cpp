#include "laoc/errors.hpp"
#include "laoc/harness.hpp"
#include "laoc/traces.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <sstream>

using namespace laoc;

namespace {

// Three hours, constant ML action 5, greedy prior starting from a 3 m^3 estimate.
//   ML levels 40, 43, 44; prior actions 3, 1, 5 with levels 40, 41, 38.
Episode hand_episode() {
    Episode e;
    e.id = "hand";
    e.steps = {{2, 100, 0.1}, {4, 200, 0.2}, {3, 300, 0.3}};
    return e;
}

SystemParams hand_params() {
    SystemParams p;
    p.horizon = 3;
    return p;
}

ControllerConfig hand_config(ControllerKind kind) {
    ControllerConfig c;
    c.kind = kind;
    c.lambda = 0.4;
    c.prior.kind = PriorKind::Greedy;
    return c;
}

} // namespace

TEST(Metrics, HandComputedThreeRounds) {
    const auto p = hand_params();
    ConstantAdvisor ml(5.0);
    const auto r = run_controller(hand_episode(), p, hand_config(ControllerKind::PureMl), &ml);
    const auto row = summarize({r}, "ml", 0.4, "hand");

    // Each hour pumps 5 m^3 = 1.36 kWh.
    const double loss = (0.0 + 1.36 + 1.36) + (0.09 + 2.72 + 2.72) + (0.16 + 4.08 + 4.08);
    EXPECT_NEAR(row.avg_loss, loss, 1e-12);
    EXPECT_NEAR(row.avg_energy_usd, 1.36 * 0.6, 1e-12);
    EXPECT_NEAR(row.avg_carbon_g, 1.36 * 600, 1e-9);

    const double draw = 1.36 * 1.36;
    const double ml_risk = draw + (9 + draw) + (16 + draw);
    const double prior_risk = 0.816 * 0.816 + (1 + 0.272 * 0.272) + (4 + draw);
    EXPECT_NEAR(r.total_prior_risk(), prior_risk, 1e-12);
    EXPECT_NEAR(row.max_risk_ratio, ml_risk / prior_risk, 1e-12);
    EXPECT_EQ(row.violation_prob, 1.0); // first hour: 1.8496 > 1.4 * 0.665856
    EXPECT_EQ(row.n_episodes, 1);
    EXPECT_EQ(r.prior_action, (std::vector<double>{3, 1, 5}));
}

TEST(Metrics, PriorOnlyIsItsOwnReference) {
    SystemParams p;
    const auto e = gen_synthetic(3, 30, 24);
    ControllerConfig c;
    c.kind = ControllerKind::PriorOnly;
    const auto rows = evaluate({{"prior", c}}, e, {0.1, 0.4}, p, nullptr, "d");
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& row : rows) {
        EXPECT_EQ(row.max_risk_ratio, 1.0);
        EXPECT_EQ(row.violation_prob, 0.0);
    }
}

TEST(Metrics, LaocNeverViolatesAndAccountingRecomputes) {
    SystemParams p;
    const auto e = gen_synthetic(4, 60, 24);
    UniformRandomAdvisor ml(p.u_max, 2);
    ControllerConfig c;
    for (double lambda : {0.1, 0.4, 0.8}) {
        c.lambda = lambda;
        const auto results = run_batch(e, p, c, &ml, 2);
        const auto row = summarize(results, "laoc", lambda, "d");
        EXPECT_EQ(row.violation_prob, 0.0);
        EXPECT_LE(row.max_risk_ratio, 1 + lambda + 1e-9);
        double energy = 0, carbon = 0;
        for (std::size_t i = 0; i < results.size(); ++i)
            for (std::size_t h = 0; h < 24; ++h) {
                const auto& s = e[i].steps[h];
                energy += s.price * p.eta * results[i].action[h];
                carbon += s.carbon_intensity * p.eta * results[i].action[h];
            }
        EXPECT_NEAR(row.avg_energy_usd, energy / 60, 1e-9);
        EXPECT_NEAR(row.avg_carbon_g, carbon / 60, 1e-9);
    }
}

TEST(Metrics, SweepEndpoints) {
    SystemParams p;
    const auto e = gen_synthetic(5, 30, 24);
    PriorConfig prior;
    PriorAdvisor ml(prior, p);
    ControllerConfig base;
    const auto rows = sweep_lambda({0.0, 1e6}, e, p, base, ml, "d");
    ControllerConfig pc;
    pc.kind = ControllerKind::PriorOnly;
    const auto prior_row = summarize(run_batch(e, p, pc, nullptr), "prior", 0.0, "d");
    EXPECT_EQ(rows[0].avg_loss, prior_row.avg_loss);
    EXPECT_EQ(rows[0].avg_energy_usd, prior_row.avg_energy_usd);

    UniformRandomAdvisor wild(p.u_max, 3);
    ControllerConfig mc;
    mc.kind = ControllerKind::PureMl;
    const auto big = sweep_lambda({1e6}, e, p, base, wild, "d");
    const auto ml_row = summarize(run_batch(e, p, mc, &wild), "ml", 1e6, "d");
    EXPECT_EQ(big[0].avg_loss, ml_row.avg_loss);

    EXPECT_THROW(sweep_lambda({0.4, 0.1}, e, p, base, ml, "d"), InvalidInput);
}

TEST(Harness, ResultsIndependentOfWorkerCount) {
    SystemParams p;
    const auto e = gen_synthetic(6, 40, 24);
    UniformRandomAdvisor ml(p.u_max, 9);
    std::vector<ControllerSpec> specs;
    for (auto kind : {ControllerKind::PriorOnly, ControllerKind::PureMl, ControllerKind::Laoc,
                      ControllerKind::Lin, ControllerKind::LinPlus}) {
        ControllerConfig c;
        c.kind = kind;
        specs.push_back({to_string(kind), c});
    }
    std::ostringstream a, b;
    write_results_csv(a, evaluate(specs, e, {0.2, 0.8}, p, &ml, "d", 1), "x");
    write_results_csv(b, evaluate(specs, e, {0.2, 0.8}, p, &ml, "d", 4), "x");
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().substr(0, a.str().find('\n')), kResultsCsvHeader);
}

TEST(Harness, ParallelForRunsEverythingAndRethrows) {
    std::atomic<int> count{0};
    parallel_for(1000, 4, [&](std::size_t) { ++count; });
    EXPECT_EQ(count.load(), 1000);
    EXPECT_THROW(parallel_for(100, 3,
                              [](std::size_t i) {
                                  if (i == 37) throw InvalidInput("boom");
                              }),
                 InvalidInput);
    EXPECT_GE(default_jobs(), 1u);
}
