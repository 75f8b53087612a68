#include <gtest/gtest.h>

#include <cmath>

#include "riskydates/conditions.hpp"
#include "riskydates/drift_engine.hpp"
#include "riskydates/error.hpp"
#include "riskydates/simulator.hpp"
#include "support.hpp"

using namespace riskydates;

namespace {

ForwardFieldSpec fields_with(VolField b, VolField beta) {
    ForwardFieldSpec f;
    f.f0 = flat_curve(0.03);
    f.g0 = flat_curve(0.1);
    f.b = std::move(b);
    f.beta = std::move(beta);
    return f;
}

RiskyDateModel no_news() { return RiskyDateModel{}; }

RiskyDateModel uniform_news(double kappa) {
    RiskyDateModel m;
    m.kind = RiskyKind::MarkedPointProcess;
    m.rate = {kappa, 0.0};
    return m;
}

std::vector<PathState> full_paths(const Scenario& s, std::size_t n) {
    const SimContext ctx(s);
    std::vector<PathState> out;
    for (std::size_t p = 0; p < n; ++p) out.push_back(simulate_path(ctx, p, RowSelection::every_row()));
    return out;
}

}  // namespace

TEST(ComputeDrift, RisklessFlatIsZero) {
    const TimeGrid g = build_time_grid(1.0, 10);
    const DriftTables t(g, fields_with(VolField::zero(1), VolField::zero(1)), no_news());
    const std::vector<double> grow(g.size(), 0.3);
    for (std::size_t k = 0; k < g.last(); ++k) {
        const auto s = compute_drift(t, k, grow, {}, 0.0);
        for (double a : s.a) EXPECT_EQ(a, 0.0);
        EXPECT_TRUE(s.alpha.empty());
    }
}

TEST(ComputeDrift, ConstantVolPointwise) {
    const double sigma = 0.02;
    const auto f = fields_with(VolField::constant({sigma}), VolField::zero(1));
    for (double T : {0.3, 0.6, 1.0}) {
        EXPECT_NEAR(pointwise_a(f, no_news(), 0.25, T, {}, 0.0, 0.0), sigma * sigma * (T - 0.25), 1e-18);
    }
}

// Cell drift equals the cell average of sigma^2 (T - t), the exact
// T-derivative of 1/2 sigma^2 (T - t)^2 integrated over the cell.
TEST(ComputeDrift, ConstantVolOnGrid) {
    const double sigma = 0.02;
    const TimeGrid g = build_time_grid(1.0, 16);
    const DriftTables t(g, fields_with(VolField::constant({sigma}), VolField::zero(1)), no_news());
    const std::vector<double> grow(g.size(), 0.0);
    const std::size_t k = 4;
    const auto s = compute_drift(t, k, grow, {}, 0.0);
    for (std::size_t i = k; i < g.last(); ++i) {
        const double lo = g[i] - g[k], hi = g[i + 1] - g[k];
        const double want = 0.5 * sigma * sigma * (hi * hi - lo * lo) / g.width(i);
        EXPECT_NEAR(s.a[i - k], want, 1e-18);
    }
}

TEST(ComputeDrift, NewsCompensationHandValue) {
    const auto f = fields_with(VolField::zero(1), VolField::zero(1));
    EXPECT_NEAR(pointwise_a(f, uniform_news(2.0), 0.5, 0.75, {}, std::log(2.0), 2.0), -2.0, 1e-15);

    const TimeGrid g = build_time_grid(1.0, 40);
    const DriftTables t(g, f, uniform_news(2.0));
    const std::vector<double> grow(g.size(), std::log(2.0));
    const std::size_t k = *g.find(0.5);
    const auto s = compute_drift(t, k, grow, {}, 2.0);
    const std::size_t i = *g.find(0.75);
    EXPECT_NEAR(s.a[i - k], -2.0, 1e-12);
}

TEST(ComputeDrift, AtomOffGridRejected) {
    const TimeGrid g = build_time_grid(1.0, 10);
    const DriftTables t(g, fields_with(VolField::zero(1), VolField::constant({0.01})), no_news());
    const std::vector<double> grow(g.size(), 0.0);
    const std::vector<ActiveAtom> atoms{{3, 1.0}};
    try {
        compute_drift(t, 5, grow, atoms, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnsnappedAtom);
    }
}

TEST(ComputeDrift, NonFiniteVolRejected) {
    const TimeGrid g = build_time_grid(1.0, 4);
    const auto bad = VolField::custom(1, [](double t, double T, std::span<double> out) {
        out[0] = T >= t ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    });
    try {
        DriftTables t(g, fields_with(bad, VolField::zero(1)), no_news());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonFiniteVol);
    }
}

// Integrated identity, with both sides assembled here from the vol fields:
// sum a d + sum alpha w = 1/2 |B|^2 + kappa sum (e^{-g} - 1) M.
TEST(DriftProperty, IntegratedIdentityIsAlgebraic) {
    Rng rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + rng.bits() % 3;
        std::vector<double> sb(n), sbeta(n);
        for (auto& x : sb) x = 0.05 * (rng.uniform() - 0.3);
        for (auto& x : sbeta) x = 0.05 * (rng.uniform() - 0.3);
        const double decay = 2.0 * rng.uniform();
        const auto f = fields_with(VolField::exp_decay(sb, decay), VolField::constant(sbeta));
        const std::size_t steps = 5 + rng.bits() % 40;
        std::vector<double> extra{0.05 + 0.9 * rng.uniform()};
        const TimeGrid g = build_time_grid(1.0, steps, extra);
        RiskyDateModel risky = uniform_news(3.0 * rng.uniform());
        if (trial % 3 == 0) risky.kernel = DateKernel::exponential_delay(0.1 + rng.uniform());
        const DriftTables tables(g, f, risky);

        std::vector<double> grow(g.size());
        for (auto& x : grow) x = 0.5 * rng.uniform();
        const std::size_t k = rng.bits() % (g.last() - 1);
        std::vector<ActiveAtom> atoms;
        for (std::size_t node = k + 1; node <= g.last(); ++node) {
            if (rng.uniform() < 0.2) atoms.push_back({node, static_cast<double>(1 + rng.bits() % 2)});
        }
        const double kappa = tables.kappa(k);
        const auto slice = compute_drift(tables, k, grow, atoms, kappa);

        std::vector<double> B(n, 0.0), tmp(n);
        double lhs = 0.0, news = 0.0;
        std::size_t next = 0;
        for (std::size_t j = k + 1; j <= g.last(); ++j) {
            const double d = g.width(j - 1);
            f.b.eval(g[k], g[j - 1], tmp);
            for (std::size_t q = 0; q < n; ++q) B[q] += tmp[q] * d;
            lhs += slice.a[j - 1 - k] * d;
            if (kappa > 0.0) news += kappa * std::expm1(-grow[j]) * tables.news_mass(k, j);
            while (next < atoms.size() && atoms[next].node == j) {
                f.beta.eval(g[k], g[j], tmp);
                for (std::size_t q = 0; q < n; ++q) B[q] += atoms[next].weight * tmp[q];
                lhs += slice.alpha_at(j) * atoms[next].weight;
                ++next;
            }
            double half = 0.0;
            for (double x : B) half += 0.5 * x * x;
            ASSERT_NEAR(lhs, half + news, 1e-12) << "trial " << trial << " j " << j;
        }
    }
}

TEST(DriftProperty, NewsTermNeverRaisesDrift) {
    const TimeGrid g = build_time_grid(1.0, 30);
    const auto f = fields_with(VolField::exp_decay({0.01, 0.02}, 0.4), VolField::zero(2));
    const DriftTables t(g, f, uniform_news(2.5));
    Rng rng(8);
    std::vector<double> grow(g.size());
    for (auto& x : grow) x = rng.uniform();
    for (std::size_t k = 0; k + 1 < g.last(); ++k) {
        const auto with = compute_drift(t, k, grow, {}, 2.5);
        const auto without = compute_drift(t, k, grow, {}, 0.0);
        for (std::size_t i = 0; i < with.a.size(); ++i) ASSERT_LE(with.a[i], without.a[i]);
    }
}

TEST(PinShortRate, HandValues) {
    EXPECT_NEAR(pin_short_rate(0.03, 0.01), 0.02, 1e-17);
    EXPECT_EQ(pin_short_rate(0.04, 0.0), 0.04);
    EXPECT_NEAR(pin_short_rate(0.005, 0.01), -0.005, 1e-17);
    EXPECT_THROW(pin_short_rate(std::numeric_limits<double>::infinity(), 0.0), Error);
}

TEST(JumpProbability, HandValues) {
    EXPECT_NEAR(jump_probability(std::log(2.0), 1), 0.5, 1e-16);
    EXPECT_EQ(jump_probability(0.0, 1), 0.0);
    EXPECT_NEAR(jump_probability(std::log(2.0), 2), 0.75, 1e-16);
    try {
        jump_probability(-0.1, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NegativeJumpProbability);
    }
}

TEST(JumpProbability, RangeForNonNegativeG) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double p = jump_probability(5.0 * rng.uniform(), 1 + rng.bits() % 3);
        ASSERT_GE(p, 0.0);
        ASSERT_LT(p, 1.0);
    }
}

TEST(PsiEval, NullCasesAndHandValue) {
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const double g = 3.0 * rng.uniform(), y = 3.0 * rng.uniform();
        const double dmu = static_cast<double>(rng.bits() % 3);
        EXPECT_EQ(psi_eval(g, dmu, 0.0, 0), 0.0);
        EXPECT_EQ(psi_eval(g, dmu, y, 1), 0.0);
    }
    EXPECT_NEAR(psi_eval(std::log(2.0), 1, std::log(2.0), 0), -1.0, 1e-15);
}

TEST(CheckConditions, EngineDriftsPass) {
    Scenario s = rdtest::news_like(2.0, 0.1, 40);
    s.fields.b = VolField::exp_decay({0.01, 0.005}, 0.5);
    s.fields.beta = VolField::constant({0.004, 0.001});
    s.default_model.rate = 0.01;
    const auto paths = full_paths(s, 20);
    const auto rep = check_conditions(s, s.risky, paths);
    EXPECT_EQ(rep.cond_i.status, ConditionStatus::Pass);
    EXPECT_LE(rep.cond_i.max_abs, 1e-10);
    EXPECT_LE(rep.cond_iv.max_abs, 1e-10);
    EXPECT_NE(rep.cond_ii.status, ConditionStatus::Fail);
    EXPECT_EQ(rep.cond_v.status, ConditionStatus::TriviallySatisfied);
    EXPECT_TRUE(rep.pass());
}

TEST(CheckConditions, ShiftedDriftResidualIsShiftTimesLength) {
    Scenario s = rdtest::merton_like(0.03, 0.1, {}, 0.0, 20);
    s.fields.b = VolField::constant({0.01});
    s.perturbation = {ConditionBreak::Drift, 0.01};
    const auto paths = full_paths(s, 3);
    const auto rep = check_conditions(s, s.risky, paths);
    EXPECT_EQ(rep.cond_iv.status, ConditionStatus::Fail);
    EXPECT_NEAR(std::abs(rep.cond_iv.max_abs), 0.01 * 1.0, 1e-12);
    EXPECT_EQ(rep.cond_iv.worst.t, 0.0);
    EXPECT_EQ(rep.cond_iv.worst.T, 1.0);
    EXPECT_EQ(rep.failing().front(), rep.cond_iv.name);
}

TEST(CheckConditions, PredictableAnnouncementFailsConditionIii) {
    Scenario full = rdtest::merton_like(0.03, std::log(2.0), {}, 0.0, 40);
    full.risky.j_atoms.push_back({0.5, 1.0, {{0.75, 1.0}}});
    Scenario sim = full;
    sim.risky.j_atoms.clear();
    const auto paths = full_paths(sim, 10);
    const auto rep = check_conditions(sim, full.risky, paths);
    EXPECT_EQ(rep.cond_iii.status, ConditionStatus::Fail);
    EXPECT_NEAR(rep.cond_iii.worst.value, -0.5, 1e-15);

    sim.fields.g0 = flat_curve(0.0);
    const auto ok = check_conditions(sim, full.risky, full_paths(sim, 10));
    EXPECT_EQ(ok.cond_iii.status, ConditionStatus::Pass);
    EXPECT_EQ(ok.cond_iii.max_abs, 0.0);
}

TEST(CheckConditions, ShortRateBreakShowsInConditionI) {
    Scenario s = rdtest::merton_like(0.03, 0.1, {0.5}, 0.01, 20);
    s.perturbation = {ConditionBreak::ShortRate, 0.02};
    const auto rep = check_conditions(s, s.risky, full_paths(s, 3));
    EXPECT_EQ(rep.cond_i.status, ConditionStatus::Fail);
    EXPECT_NEAR(rep.cond_i.max_abs, 0.02, 1e-15);
}
