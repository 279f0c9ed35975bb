#include "laoc/controllers.hpp"
#include "laoc/errors.hpp"
#include "laoc/priors.hpp"
#include "laoc/traces.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace laoc;

TEST(Ogd, ZeroGradientKeepsAction) {
    SystemParams p;
    EXPECT_EQ(ogd_update(0.0, p.nominal_level, p, 1.0), 0.0);
}

TEST(Ogd, WorkedStep) {
    SystemParams p;
    const double u = ogd_update(10.0, p.nominal_level, p, 1.0);
    EXPECT_NEAR(u, 10.0 - 2 * 0.073984 * 10.0, 1e-12);
    EXPECT_NEAR(u, 8.520, 5e-4);
}

TEST(Ogd, StaysInBox) {
    SystemParams p;
    EXPECT_EQ(ogd_update(1.0, 80.0, p, 1.0), 0.0);
    EXPECT_EQ(ogd_update(12.0, 0.0, p, 1.0), p.u_max);
}

TEST(Robd, TrivialCases) {
    SystemParams p;
    EXPECT_EQ(robd_action(p.nominal_level, 0.0, 3.0, p, 0.0), 0.0);
    p.gamma_b = 0.0;
    EXPECT_DOUBLE_EQ(robd_action(p.nominal_level, 5.0, 3.0, p, 0.0), 5.0);
}

TEST(Robd, MatchesGridArgmin) {
    SystemParams p;
    p.distance = DistanceMode::Asymmetric;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0, 1);
    const int n = 100'000;
    for (int t = 0; t < 50; ++t) {
        p.gamma_w_lo = 0.2 + 2 * unit(rng);
        p.gamma_w_hi = 0.2 + 2 * unit(rng);
        p.gamma_b = 0.5 + 5 * unit(rng);
        const double x = 30 + 20 * unit(rng), w = 8 * unit(rng), prev = 12 * unit(rng),
                     l1 = 2 * unit(rng);
        auto obj = [&](double u) {
            const double d = u - prev;
            return level_penalty(x + u - w, p) + p.gamma_b * p.eta * p.eta * u * u + l1 * d * d;
        };
        double best = 0, best_f = INFINITY;
        for (int k = 0; k <= n; ++k) {
            const double u = p.u_max * k / n;
            if (obj(u) < best_f) best_f = obj(u), best = u;
        }
        const double u = robd_action(x, w, prev, p, l1);
        EXPECT_NEAR(u, best, p.u_max / n + 1e-9);
        EXPECT_LE(obj(u), best_f + 1e-9);
    }
}

TEST(Greedy, Examples) {
    SystemParams p;
    EXPECT_EQ(greedy_level_tracker(p.nominal_level, 0.0, p), 0.0);
    EXPECT_EQ(greedy_level_tracker(35, 3, p), 8.0);
    EXPECT_EQ(greedy_level_tracker(100, 3, p), 0.0);
}

TEST(Mpc, ZeroForecastAtNominalIsIdle) {
    SystemParams p;
    const std::vector<double> w(4, 0.0);
    const auto plan = mpc_plan(p.nominal_level, w, p);
    for (double u : plan.actions) EXPECT_NEAR(u, 0.0, 1e-9);
}

TEST(Mpc, SingleStepEqualsRobd) {
    SystemParams p;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> x(30, 50), w(0, 8);
    for (int t = 0; t < 50; ++t) {
        const double level = x(rng), d = w(rng);
        const std::vector<double> pred{d};
        EXPECT_NEAR(mpc_plan(level, pred, p).actions[0], robd_action(level, d, 0.0, p, 0.0), 1e-6);
    }
}

TEST(Mpc, FullWindowMatchesOfflineRiskPlanAndGrid) {
    SystemParams p;
    p.horizon = 3;
    const auto episodes = gen_synthetic(5, 4, 3);
    for (const auto& e : episodes) {
        std::vector<double> w;
        for (const auto& s : e.steps) w.push_back(s.demand);
        const auto plan = mpc_plan(p.nominal_level, w, p);
        const auto opt = opt_offline(e, p, OptObjective::Risk);
        EXPECT_NEAR(plan.objective, opt.objective, 1e-7);

        double grid = INFINITY;
        for (int a = 0; a <= 120; ++a)
            for (int b = 0; b <= 120; ++b)
                for (int c = 0; c <= 120; ++c) {
                    const std::vector<double> u{0.1 * a, 0.1 * b, 0.1 * c};
                    grid = std::min(grid, lookahead_risk(p.nominal_level, u, w, p));
                }
        EXPECT_LE(plan.objective, grid + 1e-9);
        // The grid optimum is at most one cell of curvature away.
        EXPECT_LT(grid - plan.objective, 0.1);
    }
}

TEST(Mpc, CalibratedNoiseHitsEpsilon) {
    const auto episodes = gen_synthetic(3, 30, 24);
    const double sigma = calibrate_mpc_noise(episodes, 0.05, 17);
    EXPECT_GT(sigma, 0.0);
    EXPECT_NEAR(forecast_error(episodes, sigma, 17), 0.05, 1e-4);
    EXPECT_EQ(forecast_error(episodes, 0.0, 17), 0.0);
}

TEST(Priors, ActionsStayInBox) {
    SystemParams p;
    const auto episodes = gen_synthetic(12, 20, 24);
    for (auto kind : {PriorKind::Ogd, PriorKind::Robd, PriorKind::Mpc, PriorKind::Greedy}) {
        PriorConfig c;
        c.kind = kind;
        for (const auto& e : episodes) {
            const auto t = run_prior(e, p, c);
            ASSERT_EQ(t.action.size(), 24u);
            for (double u : t.action) {
                EXPECT_GE(u, 0.0);
                EXPECT_LE(u, p.u_max);
            }
        }
    }
}

TEST(Priors, KindRoundTrip) {
    for (auto kind : {PriorKind::Ogd, PriorKind::Robd, PriorKind::Mpc, PriorKind::Greedy})
        EXPECT_EQ(parse_prior_kind(to_string(kind)), kind);
    EXPECT_THROW(parse_prior_kind("pid"), InvalidInput);
}

TEST(Priors, UncalibratedMpcNoiseIsRejected) {
    PriorConfig c;
    c.kind = PriorKind::Mpc;
    c.mpc_epsilon = 0.1;
    EXPECT_THROW(make_prior(c, SystemParams{}), InvalidInput);
}
