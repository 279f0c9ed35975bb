#include "laoc/config.hpp"
#include "laoc/errors.hpp"

#include <gtest/gtest.h>

using namespace laoc;

TEST(RunConfig, EmptyKeepsDefaults) {
    const auto c = parse_config("{}");
    EXPECT_EQ(c.system.tank_capacity, 80.0);
    EXPECT_EQ(c.lambda, 0.4);
    EXPECT_EQ(c.train.epochs, 400);
    EXPECT_EQ(c.train.learning_rate, 5e-4);
    EXPECT_FALSE(c.c2.has_value());
}

TEST(RunConfig, ReadsEverySection) {
    const auto c = parse_config(R"({
        "system": {"tank_capacity": 40, "nominal_level": 20, "u_max": 6,
                   "distance": "asymmetric", "gamma_w_lo": 2, "pump_knots": [[0, 0], [3, 4], [6, 6]]},
        "safe_set": {"lambda": 0.8, "c2": 1.3},
        "train": {"epochs": 12, "mode": "finetune", "lambda": 0.8},
        "prior": {"kind": "robd", "robd_lambda1": 0.5}
    })");
    EXPECT_EQ(c.system.u_max, 6.0);
    EXPECT_EQ(c.system.distance, DistanceMode::Asymmetric);
    EXPECT_EQ(c.system.weight_below(), 2.0);
    EXPECT_FALSE(c.system.pump.is_identity());
    EXPECT_EQ(c.lambda, 0.8);
    EXPECT_EQ(*c.c2, 1.3);
    EXPECT_EQ(c.train.epochs, 12);
    EXPECT_EQ(c.train.mode, TrainMode::Finetune);
    EXPECT_EQ(c.prior.kind, PriorKind::Robd);
    EXPECT_EQ(c.train.prior.kind, PriorKind::Robd);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse_config(R"({"sytem": {}})"), InvalidInput);
    EXPECT_THROW(parse_config(R"({"system": {"capacity": 3}})"), InvalidInput);
    EXPECT_THROW(parse_config(R"({"system": {"u_max": "big"}})"), InvalidInput);
    EXPECT_THROW(parse_config(R"({"system": {"u_max": -1}})"), InvalidInput);
    EXPECT_THROW(parse_config("not json"), InvalidInput);
    EXPECT_THROW(load_config("/nonexistent/config.json"), InvalidInput);
}

TEST(RunConfig, EchoParsesBack) {
    auto c = parse_config(R"({"safe_set": {"lambda": 0.2}, "prior": {"kind": "greedy"}})");
    const auto again = parse_config(echo_config(c));
    EXPECT_EQ(again.lambda, 0.2);
    EXPECT_EQ(again.prior.kind, PriorKind::Greedy);
    EXPECT_EQ(echo_config(again), echo_config(c));
}
