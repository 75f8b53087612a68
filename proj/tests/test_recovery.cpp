#include <gtest/gtest.h>

#include <cmath>

#include "riskydates/error.hpp"
#include "riskydates/recovery.hpp"
#include "riskydates/simulator.hpp"
#include "support.hpp"

using namespace riskydates;

namespace {

RecoveryEvent event(double time, double loss) { return {time, 0, loss, false, 0}; }

RecoveryModel atom_only(double loss, double prob) {
    RecoveryModel m;
    m.atom_loss.outcomes = {{loss, prob}};
    return m;
}

}  // namespace

TEST(RecoveryPath, ProductOfSurvivingFractions) {
    const TimeGrid g = build_time_grid(1.0, 10);
    const auto p = recovery_path_from_events({event(0.7, 0.5), event(0.3, 0.5)}, g);
    EXPECT_EQ(p.xi[0], 1.0);
    EXPECT_EQ(p.xi[2], 1.0);
    EXPECT_EQ(p.xi[3], 0.5);
    EXPECT_EQ(p.xi[6], 0.5);
    EXPECT_EQ(p.xi[7], 0.25);
    EXPECT_EQ(p.xi[10], 0.25);
    EXPECT_FALSE(std::isfinite(p.total_loss_time));
}

TEST(RecoveryPath, EventInsideCellCountsFromNextNode) {
    const TimeGrid g = build_time_grid(1.0, 10);
    const auto p = recovery_path_from_events({event(0.35, 0.5)}, g);
    EXPECT_EQ(p.xi[3], 1.0);
    EXPECT_EQ(p.xi[4], 0.5);
}

TEST(RecoveryPath, NoEvents) {
    const TimeGrid g = build_time_grid(1.0, 10);
    const auto p = recovery_path_from_events({}, g);
    for (double x : p.xi) EXPECT_EQ(x, 1.0);
}

TEST(RecoveryPath, TotalLoss) {
    const TimeGrid g = build_time_grid(1.0, 10);
    const auto p = recovery_path_from_events({event(0.4, 1.0), event(0.8, 0.3)}, g);
    EXPECT_EQ(p.xi[4], 0.0);
    EXPECT_EQ(p.xi[10], 0.0);
    EXPECT_EQ(p.total_loss_time, 0.4);
}

TEST(RecoveryPath, LossOutsideUnitIntervalRejected) {
    const TimeGrid g = build_time_grid(1.0, 10);
    for (double bad : {-0.1, 1.2}) {
        try {
            recovery_path_from_events({event(0.4, bad)}, g);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::LossOutOfRange);
        }
    }
    RecoveryModel m;
    m.event_loss.outcomes = {{-0.2, 1.0}};
    EXPECT_THROW(m.validate(), Error);
}

TEST(RecoveryPathProperty, XiNonIncreasingInUnitInterval) {
    RecoveryModel m;
    m.event_rate = 3.0;
    m.event_loss.outcomes = {{0.2, 0.5}, {0.9, 0.25}};
    m.atom_loss.outcomes = {{0.5, 0.5}};
    const Scenario s = rdtest::news_like(2.0, 0.0, 30);
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng(seed);
        const auto real = simulate_announcements(s.risky, s.grid, seed);
        const auto p = recovery_path(m, real, s.grid, rng);
        EXPECT_EQ(p.xi[0], 1.0);
        for (std::size_t k = 1; k < p.xi.size(); ++k) {
            ASSERT_LE(p.xi[k], p.xi[k - 1]);
            ASSERT_GE(p.xi[k], 0.0);
        }
    }
}

TEST(RecoveryModel, PinnedG) {
    EXPECT_NEAR(atom_only(0.5, 0.5).g_pin(), -std::log(0.75), 1e-15);
    EXPECT_NEAR(atom_only(0.5, 0.5).g_pin(), 0.287682, 5e-7);
    EXPECT_NEAR(atom_only(1.0, 0.5).g_pin(), std::log(2.0), 1e-15);
    EXPECT_NEAR(atom_only(0.5, 0.5).delta_c(2.0), 1.0 - 0.75 * 0.75, 1e-15);
    try {
        atom_only(1.0, 1.0).g_pin();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TotalExpectedLossAtAtom);
    }
}

TEST(RecoveryModel, CreditIntensity) {
    RecoveryModel m;
    m.event_rate = 0.05;
    m.event_loss.outcomes = {{0.4, 1.0}};
    EXPECT_NEAR(m.c_ac(), 0.02, 1e-17);
}

// E[xi_T] = exp(-theta E[e] T) for compound Poisson losses.
TEST(RecoveryPathProperty, MeanXiMatchesCreditIntensity) {
    RecoveryModel m;
    m.event_rate = 2.0;
    m.event_loss.outcomes = {{0.3, 0.5}, {0.6, 0.5}};
    const TimeGrid g = build_time_grid(1.0, 10);
    const MeasureRealization none;
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int p = 0; p < n; ++p) {
        Rng rng(1, p, Stream::Recovery);
        const double x = recovery_path(m, none, g, rng).xi.back();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_NEAR(mean, std::exp(-m.c_ac()), 4.0 * se);
}

TEST(PriceWithRecovery, ScaledByXi) {
    Scenario s = rdtest::merton_like(0.03, 0.0, {}, 0.0, 10);
    s.recovery = RecoveryModel{};
    const SimContext ctx(s);
    PathState path = simulate_path(ctx, 0, RowSelection::every_row());
    path.recovery = recovery_path_from_events({event(0.3, 0.5)}, s.grid);
    const BondSurface surf = price_with_recovery(s, path);
    EXPECT_NEAR(surf.price(6, 10), 0.5 * std::exp(-0.012), 1e-15);
    EXPECT_NEAR(surf.price(2, 10), std::exp(-0.03 * 0.8), 1e-15);

    Scenario plain = rdtest::merton_like(0.03, 0.0, {}, 0.0, 10);
    EXPECT_THROW(price_with_recovery(plain, path), Error);
}

TEST(RecoveryDrift, NoLossesReduceToZeroRecoveryDrift) {
    Scenario s = rdtest::merton_like(0.03, 0.0, {0.5}, 0.0, 20);
    s.fields.b = VolField::exp_decay({0.01}, 0.5);
    const SimContext ctx(s);
    const RecoveryModel none;
    const auto real = simulate_announcements(s.risky, s.grid, 1);
    const std::vector<double> grow(s.grid.size(), 0.0);
    for (std::size_t k = 0; k < s.grid.last(); k += 4) {
        const auto rd = compute_recovery_drift(ctx.tables(), none, real, k, grow);
        const auto plain = compute_drift(ctx.tables(), real, k, grow);
        EXPECT_EQ(rd.c_ac, 0.0);
        EXPECT_EQ(rd.g_pin, 0.0);
        EXPECT_EQ(rd.drift.a, plain.a);
    }
}

TEST(RecoveryScenario, InitialGIsPinned) {
    Scenario s = rdtest::merton_like(0.03, 0.0, {0.5}, 0.0, 20);
    s.recovery = atom_only(0.5, 0.5);
    EXPECT_NEAR(s.initial_g()(0.5), -std::log(0.75), 1e-15);
    s.recovery->event_rate = 0.05;
    s.recovery->event_loss.outcomes = {{0.4, 1.0}};
    EXPECT_NEAR(s.credit_intensity(0.03), 0.02, 1e-17);
}
