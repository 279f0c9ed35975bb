#include "laoc/errors.hpp"
#include "laoc/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace laoc;

namespace {

SystemParams unit_weights() {
    SystemParams p;
    p.gamma1 = p.gamma2 = p.gamma3 = 1.0;
    return p;
}

} // namespace

TEST(Dynamics, DirectSubstitution) {
    EXPECT_DOUBLE_EQ(step_dynamics(40.0, 5.0, 3.0), 42.0);
    EXPECT_DOUBLE_EQ(step_dynamics(40.0, 0.0, 0.0), 40.0);
    EXPECT_DOUBLE_EQ(step_dynamics(10.0, 0.0, 15.0), -5.0);
}

TEST(Dynamics, RejectsBadInput) {
    SystemParams p;
    EXPECT_THROW(step_dynamics(p, 40.0, -0.1, 1.0), InvalidInput);
    EXPECT_THROW(step_dynamics(p, 40.0, p.u_max + 0.1, 1.0), InvalidInput);
    EXPECT_THROW(step_dynamics(std::nan(""), 1.0, 1.0), InvalidInput);
    EXPECT_THROW(step_dynamics(1.0, std::numeric_limits<double>::infinity(), 1.0), InvalidInput);
}

TEST(Dynamics, LipschitzOneInLevelAndAction) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> x(-20, 100), u(0, 12), w(0, 10);
    for (int i = 0; i < 1000; ++i) {
        const double a = x(rng), b = x(rng), ua = u(rng), ub = u(rng), d = w(rng);
        EXPECT_NEAR(std::abs(step_dynamics(a, ua, d) - step_dynamics(b, ua, d)), std::abs(a - b), 1e-12);
        EXPECT_NEAR(std::abs(step_dynamics(a, ua, d) - step_dynamics(a, ub, d)), std::abs(ua - ub), 1e-12);
    }
    SystemParams p;
    EXPECT_EQ(p.sigma_x(), 1.0);
    EXPECT_EQ(p.sigma_u(), 1.0);
}

TEST(Dynamics, PiecewisePump) {
    const auto g = PumpCurve::piecewise({{0, 0}, {6, 7}, {12, 11}});
    EXPECT_DOUBLE_EQ(g(3), 3.5);
    EXPECT_DOUBLE_EQ(g(9), 9.0);
    EXPECT_DOUBLE_EQ(g.lipschitz(), 7.0 / 6.0);
    EXPECT_DOUBLE_EQ(step_dynamics(40, 6, 2, g), 45);
    EXPECT_THROW(PumpCurve::piecewise({{0, 0}, {6, 5}, {12, 4}}), InvalidInput);
}

TEST(Loss, Examples) {
    const auto p = unit_weights();
    EXPECT_DOUBLE_EQ(loss(40, 0, 300, 0.2, p).total, 0.0);
    const auto t = loss(40, 10, 100, 0.05, p);
    EXPECT_NEAR(t.total, 272.136, 1e-12);
    EXPECT_NEAR(t.carbon, 272.0, 1e-12);
    EXPECT_NEAR(t.energy, 0.136, 1e-12);
    EXPECT_NEAR(t.carbon_g, 272.0, 1e-12);
    EXPECT_NEAR(t.energy_usd, 0.136, 1e-12);
    auto q = p;
    q.gamma2 = q.gamma3 = 0.0;
    EXPECT_DOUBLE_EQ(loss(50, 0, 0, 0, q).total, 100.0);
}

TEST(Loss, GradientMatchesFiniteDifference) {
    SystemParams p;
    const double x = 37.3, u = 4.2, e = 210, pr = 0.07, step = 1e-5;
    const auto g = loss_gradient(x, u, e, pr, p);
    const double fx = (loss(x + step, u, e, pr, p).total - loss(x - step, u, e, pr, p).total) / (2 * step);
    const double fu = (loss(x, u + step, e, pr, p).total - loss(x, u - step, e, pr, p).total) / (2 * step);
    EXPECT_NEAR(g.d_level, fx, 1e-7);
    EXPECT_NEAR(g.d_action, fu, 1e-7);
}

TEST(Risk, Examples) {
    SystemParams p;
    EXPECT_DOUBLE_EQ(risk(p.nominal_level, 0, p), 0.0);
    EXPECT_NEAR(risk(30, 10, p), 107.3984, 1e-12);
    p.distance = DistanceMode::Asymmetric;
    p.gamma_w_lo = 2;
    p.gamma_w_hi = 1;
    EXPECT_DOUBLE_EQ(risk(50, 0, p), 100.0);
    EXPECT_DOUBLE_EQ(risk(30, 0, p), 200.0);
}

TEST(Risk, NonNegativeAndGradient) {
    SystemParams p;
    p.distance = DistanceMode::Asymmetric;
    p.gamma_w_lo = 3;
    p.gamma_w_hi = 0.5;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> x(-20, 100), u(0, 12);
    for (int i = 0; i < 1000; ++i) {
        const double a = x(rng), b = u(rng), s = 1e-5;
        EXPECT_GE(risk(a, b, p), 0.0);
        const auto g = risk_gradient(a, b, p);
        EXPECT_NEAR(g.d_level, (risk(a + s, b, p) - risk(a - s, b, p)) / (2 * s), 1e-5);
        EXPECT_NEAR(g.d_action, (risk(a, b + s, p) - risk(a, b - s, p)) / (2 * s), 1e-5);
    }
}

TEST(Params, SmoothnessConstants) {
    SystemParams p;
    p.gamma_b = 10;
    EXPECT_DOUBLE_EQ(p.beta(), 2.0);
    EXPECT_DOUBLE_EQ(p.alpha(), 2.0 * 10 * 0.272 * 0.272);
    p.distance = DistanceMode::Asymmetric;
    p.gamma_w_lo = 4;
    p.gamma_w_hi = 0.5;
    EXPECT_DOUBLE_EQ(p.beta(), 8.0);
    EXPECT_GE(p.beta(), p.alpha());
}

TEST(Params, ValidateRejectsNonsense) {
    SystemParams p;
    p.validate();
    auto bad = p;
    bad.u_max = -1;
    EXPECT_THROW(bad.validate(), InvalidInput);
    bad = p;
    bad.horizon = 0;
    EXPECT_THROW(bad.validate(), InvalidInput);
    bad = p;
    bad.gamma_b = 0; // alpha would be zero
    EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(Ledger, RecordsMonotoneTotals) {
    RiskLedger l;
    l.record(1.0, 2.0, 3.0);
    l.record(0.5, 0.0, 1.0);
    EXPECT_DOUBLE_EQ(l.live(), 1.5);
    EXPECT_DOUBLE_EQ(l.prior(), 2.0);
    EXPECT_DOUBLE_EQ(l.loss(), 4.0);
    EXPECT_EQ(l.rounds(), 2);
    EXPECT_THROW(l.record(-1.0, 0.0, 0.0), InvariantViolation);
}
