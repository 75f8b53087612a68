#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "riskydates/error.hpp"
#include "riskydates/model_core.hpp"
#include "riskydates/rng.hpp"

using namespace riskydates;

TEST(TimeGrid, UniformPartition) {
    const TimeGrid g = build_time_grid(1.0, 4);
    const std::vector<double> want{0.0, 0.25, 0.5, 0.75, 1.0};
    EXPECT_EQ(g.nodes(), want);
    EXPECT_DOUBLE_EQ(g.dt(), 0.25);
}

TEST(TimeGrid, MergesExtraNode) {
    const std::vector<double> extra{0.6};
    const TimeGrid g = build_time_grid(1.0, 4, extra);
    const std::vector<double> want{0.0, 0.25, 0.5, 0.6, 0.75, 1.0};
    EXPECT_EQ(g.nodes(), want);
}

TEST(TimeGrid, ZeroStepsRejected) {
    try {
        build_time_grid(1.0, 0);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonPositiveHorizon);
    }
}

TEST(TimeGrid, NonPositiveHorizonRejected) {
    EXPECT_THROW(build_time_grid(0.0, 4), Error);
    EXPECT_THROW(build_time_grid(-1.0, 4), Error);
}

TEST(TimeGrid, ExtraNodeOutsideHorizonRejected) {
    const std::vector<double> extra{2.0};
    try {
        build_time_grid(1.0, 4, extra);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NodeOutOfRange);
    }
}

TEST(TimeGrid, NearDuplicatesCollapse) {
    const std::vector<double> extra{0.5 + 1e-14, 0.5};
    const TimeGrid g = build_time_grid(1.0, 4, extra);
    EXPECT_EQ(g.size(), 5u);
}

// Every extra node must come back bit-equal as a grid node, and the grid must
// stay strictly ascending inside [0, horizon].
TEST(TimeGridProperty, ExtraNodesAreExactNodes) {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const double horizon = 0.5 + 4.0 * rng.uniform();
        const std::size_t steps = 1 + rng.bits() % 300;
        std::vector<double> extra;
        const int n = static_cast<int>(rng.bits() % 6);
        for (int i = 0; i < n; ++i) extra.push_back(horizon * rng.uniform());
        const TimeGrid g = build_time_grid(horizon, steps, extra);
        for (double x : extra) {
            const auto node = g.find(x);
            ASSERT_TRUE(node.has_value());
            if (std::abs(g[*node] - x) > 0.0) {
                // collapsed onto an existing node within tolerance
                EXPECT_LE(std::abs(g[*node] - x), g.tolerance());
            }
        }
        EXPECT_EQ(g[0], 0.0);
        EXPECT_EQ(g[g.last()], horizon);
        for (std::size_t i = 0; i + 1 < g.size(); ++i) ASSERT_LT(g[i], g[i + 1]);
    }
}

TEST(TimeGridProperty, FreshExtraNodesAreBitEqual) {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const double u = 0.013 + 0.97 * rng.uniform();
        const std::vector<double> extra{u};
        const TimeGrid g = build_time_grid(1.0, 64, extra);
        const auto node = g.find(u);
        ASSERT_TRUE(node.has_value());
        const bool on_uniform = std::abs(u * 64 - std::round(u * 64)) * (1.0 / 64) <= g.tolerance();
        if (!on_uniform) EXPECT_EQ(g[*node], u);
    }
}

TEST(ValidateSpec, CompliantSpecIsClean) {
    const TimeGrid g = build_time_grid(1.0, 20);
    ForwardFieldSpec s;
    s.f0 = flat_curve(0.03);
    s.g0 = flat_curve(0.1);
    s.b = VolField::constant({0.01});
    s.beta = VolField::zero(1);
    const auto rep = validate_spec(s, g);
    EXPECT_TRUE(rep.ok()) << (rep.violations.empty() ? "" : rep.violations[0].message);
}

TEST(ValidateSpec, VolatilityBelowDiagonalFlagged) {
    const TimeGrid g = build_time_grid(1.0, 4);
    ForwardFieldSpec s;
    s.b = VolField::custom(1, [](double t, double T, std::span<double> out) {
        out[0] = (std::abs(t - 0.5) < 1e-12 && std::abs(T - 0.25) < 1e-12) ? 1.0 : 0.0;
    });
    s.beta = VolField::zero(1);
    const auto rep = validate_spec(s, g);
    EXPECT_TRUE(rep.mentions("volatility nonzero for T < t"));
}

TEST(ValidateSpec, DivergentInitialCurveFlagged) {
    const TimeGrid g = build_time_grid(1.0, 10);
    ForwardFieldSpec s;
    s.f0 = [](double u) { return 1.0 / u; };
    const auto rep = validate_spec(s, g);
    EXPECT_TRUE(rep.mentions("initial curve not finite at 0"));
}

TEST(ValidateSpec, JumpInInitialCurveFlagged) {
    const TimeGrid g = build_time_grid(1.0, 1000);
    ForwardFieldSpec s;
    s.g0 = [](double u) { return u < 0.5 ? 0.0 : 5.0; };
    const auto rep = validate_spec(s, g);
    EXPECT_TRUE(rep.mentions("g0.continuity"));
}

TEST(VolField, ExpDecayIntegralMatchesQuadrature) {
    const VolField v = VolField::exp_decay({0.01, 0.02}, 0.7);
    std::vector<double> an(2), num(2);
    v.integral(0.2, 0.9, an);
    const VolField c = VolField::custom(2, [&](double t, double T, std::span<double> out) { v.eval(t, T, out); });
    c.integral(0.2, 0.9, num);
    for (int f = 0; f < 2; ++f) EXPECT_NEAR(an[f], num[f], 1e-15);
    // closed form sigma (1 - e^{-lambda (T-t)}) / lambda
    EXPECT_NEAR(an[0], 0.01 * (1.0 - std::exp(-0.7 * 0.7)) / 0.7, 1e-16);
}

TEST(VolField, VanishesBelowDiagonal) {
    std::vector<double> out(1);
    VolField::constant({0.3}).eval(0.5, 0.4, out);
    EXPECT_EQ(out[0], 0.0);
    VolField::exp_decay({0.3}, 1.0).eval(0.5, 0.4, out);
    EXPECT_EQ(out[0], 0.0);
}

TEST(Curves, TabulatedIsPiecewiseLinearAndFlatOutside) {
    const Curve c = tabulated_curve({{0.2, 1.0}, {0.6, 3.0}});
    EXPECT_DOUBLE_EQ(c(0.0), 1.0);
    EXPECT_DOUBLE_EQ(c(0.4), 2.0);
    EXPECT_DOUBLE_EQ(c(0.9), 3.0);
}
