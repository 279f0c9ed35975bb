#include "laoc/controllers.hpp"
#include "laoc/errors.hpp"
#include "laoc/traces.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace laoc;

namespace {

const std::vector<Episode>& episodes() {
    static const auto e = gen_synthetic(77, 40, 24);
    return e;
}

ControllerConfig config_for(ControllerKind kind, double lambda) {
    ControllerConfig c;
    c.kind = kind;
    c.lambda = lambda;
    return c;
}

void expect_same_actions(const EpisodeResult& a, const EpisodeResult& b) {
    ASSERT_EQ(a.action.size(), b.action.size());
    for (std::size_t h = 0; h < a.action.size(); ++h) EXPECT_EQ(a.action[h], b.action[h]) << "round " << h;
    EXPECT_EQ(a.total_loss(), b.total_loss());
}

} // namespace

TEST(Names, RoundTrip) {
    for (auto k : {ControllerKind::Laoc, ControllerKind::Lin, ControllerKind::LinPlus,
                   ControllerKind::PureMl, ControllerKind::PriorOnly, ControllerKind::Opt})
        EXPECT_EQ(parse_controller_kind(to_string(k)), k);
    EXPECT_EQ(parse_controller_kind("lin+"), ControllerKind::LinPlus);
    EXPECT_EQ(parse_mapping("linear"), Mapping::Linear);
    EXPECT_THROW(parse_controller_kind("pid"), InvalidInput);
}

TEST(Config, Validation) {
    auto c = config_for(ControllerKind::Laoc, -0.1);
    EXPECT_THROW(c.validate(), InvalidSafety);
    c = config_for(ControllerKind::Lin, 0.4);
    c.rho = 1.5;
    EXPECT_THROW(c.validate(), InvalidInput);
    c = config_for(ControllerKind::LinPlus, 0.0);
    EXPECT_THROW(c.validate(), InvalidSafety);
}

TEST(Laoc, ZeroLambdaCopiesPrior) {
    SystemParams p;
    UniformRandomAdvisor ml(p.u_max, 1);
    for (const auto& e : episodes()) {
        const auto a = laoc_run(e, p, config_for(ControllerKind::Laoc, 0.0), ml);
        const auto b = prior_only_run(e, p, config_for(ControllerKind::PriorOnly, 0.0));
        expect_same_actions(a, b);
    }
}

TEST(Laoc, PriorAsAdvisorIsAFixedPoint) {
    SystemParams p;
    for (auto kind : {PriorKind::Ogd, PriorKind::Robd, PriorKind::Greedy}) {
        for (auto mapping : {Mapping::Projection, Mapping::Linear}) {
            auto c = config_for(ControllerKind::Laoc, 0.4);
            c.prior.kind = kind;
            c.mapping = mapping;
            PriorAdvisor ml(c.prior, p);
            for (const auto& e : episodes()) {
                const auto a = laoc_run(e, p, c, ml);
                EXPECT_EQ(a.binding_count(), 0);
                auto pc = c;
                pc.kind = ControllerKind::PriorOnly;
                expect_same_actions(a, prior_only_run(e, p, pc));
            }
        }
    }
}

TEST(Laoc, AdversaryNeverViolates) {
    SystemParams p;
    const auto test = gen_synthetic(78, 300, 24);
    for (double lambda : {0.1, 0.4, 0.8}) {
        UniformRandomAdvisor ml(p.u_max, 5);
        const auto safe = SafeSetParams::build(p, lambda);
        for (const auto& e : test) {
            const auto r = laoc_run(e, p, config_for(ControllerKind::Laoc, lambda), ml, &safe);
            for (std::size_t h = 0; h < r.cum_risk.size(); ++h) {
                EXPECT_LE(r.cum_risk[h], (1 + lambda) * r.cum_prior_risk[h] + kViolationTol);
                EXPECT_TRUE(r.prior_in_safe_set[h]);
                EXPECT_TRUE(r.safe_set[h].contains(r.action[h]));
            }
            EXPECT_FALSE(r.any_violation());
        }
    }
}

TEST(Laoc, MappingsCoincideForScalarAction) {
    // The interval holds the prior action, so the largest feasible point of the
    // segment toward the ML action is the nearest feasible point to it.
    SystemParams p;
    UniformRandomAdvisor ml(p.u_max, 3);
    auto proj = config_for(ControllerKind::Laoc, 0.4);
    auto lin = proj;
    lin.mapping = Mapping::Linear;
    for (const auto& e : episodes()) {
        const auto a = laoc_run(e, p, proj, ml);
        const auto b = laoc_run(e, p, lin, ml);
        for (std::size_t h = 0; h < a.action.size(); ++h) EXPECT_NEAR(a.action[h], b.action[h], 1e-9);
    }
}

TEST(Laoc, NonlinearPumpNeedsLinearMapping) {
    SystemParams p;
    p.pump = PumpCurve::piecewise({{0, 0}, {6, 7}, {12, 11}});
    UniformRandomAdvisor ml(p.u_max, 4);
    auto c = config_for(ControllerKind::Laoc, 0.4);
    EXPECT_THROW(laoc_run(episodes()[0], p, c, ml), InvalidInput);
    c.mapping = Mapping::Linear;
    c.prior.kind = PriorKind::Greedy;
    for (const auto& e : episodes()) EXPECT_FALSE(laoc_run(e, p, c, ml).any_violation());
}

TEST(Laoc, HugeLambdaFollowsMl) {
    SystemParams p;
    UniformRandomAdvisor ml(p.u_max, 6);
    for (const auto& e : episodes()) {
        const auto a = laoc_run(e, p, config_for(ControllerKind::Laoc, 1e6), ml);
        EXPECT_EQ(a.binding_count(), 0);
        expect_same_actions(a, pure_ml_run(e, p, config_for(ControllerKind::PureMl, 1e6), ml));
    }
}

TEST(Lin, EndpointsReduceToPriorAndMl) {
    SystemParams p;
    UniformRandomAdvisor ml(p.u_max, 7);
    for (const auto& e : episodes()) {
        auto c = config_for(ControllerKind::Lin, 0.4);
        c.rho = 0.0;
        expect_same_actions(lin_run(e, p, c, ml), prior_only_run(e, p, c));
        c.rho = 1.0;
        expect_same_actions(lin_run(e, p, c, ml), pure_ml_run(e, p, c, ml));
    }
}

TEST(LinPlus, PriorAsAdvisorHasNoEmptyEvents) {
    SystemParams p;
    const auto c = config_for(ControllerKind::LinPlus, 0.4);
    PriorAdvisor ml(c.prior, p);
    for (const auto& e : episodes()) {
        const auto r = lin_plus_run(e, p, c, ml);
        EXPECT_EQ(r.empty_event_count(), 0);
        expect_same_actions(r, prior_only_run(e, p, c));
    }
}

TEST(LinPlus, HugeLambdaFollowsMl) {
    SystemParams p;
    UniformRandomAdvisor ml(p.u_max, 8);
    const auto c = config_for(ControllerKind::LinPlus, 1e6);
    for (const auto& e : episodes()) {
        const auto r = lin_plus_run(e, p, c, ml);
        EXPECT_EQ(r.empty_event_count(), 0);
        expect_same_actions(r, pure_ml_run(e, p, c, ml));
    }
}

TEST(Dispatch, NeedsMlWhereUsed) {
    SystemParams p;
    EXPECT_THROW(run_controller(episodes()[0], p, config_for(ControllerKind::Laoc, 0.4), nullptr),
                 InvalidInput);
    const auto r =
        run_controller(episodes()[0], p, config_for(ControllerKind::PriorOnly, 0.4), nullptr);
    EXPECT_EQ(r.risk_ratio(), 1.0);
}

TEST(Opt, ZeroDemandIsIdle) {
    SystemParams p;
    p.horizon = 6;
    Episode e;
    e.id = "zero";
    e.steps.assign(6, TraceStep{0.0, 300.0, 0.1});
    const auto r = opt_offline(e, p, OptObjective::Loss);
    for (double u : r.actions) EXPECT_NEAR(u, 0.0, 1e-9);
    EXPECT_NEAR(r.objective, 0.0, 1e-12);
}

TEST(Opt, ConstantDemandIsTracked) {
    SystemParams p;
    p.horizon = 6;
    p.gamma2 = p.gamma3 = 0.0;
    Episode e;
    e.id = "flat";
    e.steps.assign(6, TraceStep{4.0, 300.0, 0.1});
    const auto r = opt_offline(e, p, OptObjective::Loss);
    // The last action does not affect any counted level, so only the first H-1 are pinned.
    for (std::size_t h = 0; h + 1 < r.actions.size(); ++h) EXPECT_NEAR(r.actions[h], 4.0, 1e-6);
    EXPECT_NEAR(r.objective, 0.0, 1e-10);
}

TEST(Opt, RiskObjectiveMatchesRefinedGrid) {
    SystemParams p;
    p.horizon = 2;
    const auto eps = gen_synthetic(19, 5, 2);
    for (const auto& e : eps) {
        const auto r = opt_offline(e, p, OptObjective::Risk);
        double grid = INFINITY;
        const int n = 1200; // 0.01 m^3
        for (int a = 0; a <= n; ++a)
            for (int b = 0; b <= n; ++b) {
                const double u[2] = {p.u_max * a / n, p.u_max * b / n};
                grid = std::min(grid, offline_objective(e, p, u, OptObjective::Risk));
            }
        EXPECT_LE(r.objective, grid + 1e-9);
        EXPECT_LT(grid - r.objective, 1e-3);
    }
}

TEST(Opt, NeverWorseThanPrior) {
    SystemParams p;
    for (const auto& e : episodes()) {
        const auto opt = opt_run(e, p, config_for(ControllerKind::Opt, 0.4));
        const auto prior = prior_only_run(e, p, config_for(ControllerKind::PriorOnly, 0.4));
        EXPECT_LE(opt.total_loss(), prior.total_loss() + 1e-9);
    }
}

TEST(Result, RecordsConsistentLedgers) {
    SystemParams p;
    UniformRandomAdvisor ml(p.u_max, 9);
    const auto r = laoc_run(episodes()[1], p, config_for(ControllerKind::Laoc, 0.4), ml);
    ASSERT_EQ(r.level.size(), 25u);
    double cum = 0, cum_prior = 0, cum_loss = 0;
    for (std::size_t h = 0; h < 24; ++h) {
        cum += r.risk[h];
        cum_prior += r.prior_risk[h];
        cum_loss += r.loss[h].total;
        EXPECT_DOUBLE_EQ(r.cum_risk[h], cum);
        EXPECT_DOUBLE_EQ(r.cum_prior_risk[h], cum_prior);
        EXPECT_DOUBLE_EQ(r.cum_loss[h], cum_loss);
        EXPECT_DOUBLE_EQ(r.level[h + 1], r.level[h] + r.action[h] - episodes()[1].steps[h].demand);
        if (h > 0) EXPECT_GE(r.cum_risk[h], r.cum_risk[h - 1]);
    }
}
