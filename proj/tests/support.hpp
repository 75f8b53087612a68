#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "riskydates/scenario.hpp"

namespace rdtest {

using namespace riskydates;

/// Composite Simpson with n (even) panels; kept separate from the library's
/// Gauss-Legendre rule so the two can check each other.
inline double simpson(const std::function<double(double)>& fn, double a, double b, int n = 2000) {
    if (b <= a) return 0.0;
    const double h = (b - a) / n;
    double s = fn(a) + fn(b);
    for (int i = 1; i < n; ++i) s += fn(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Zero-vol, flat-curve scenario with deterministic atoms.
inline Scenario merton_like(double f, double g, std::vector<double> atoms, double h, std::size_t steps = 40,
                            double horizon = 1.0) {
    Scenario s;
    s.name = "test";
    s.grid = build_time_grid(horizon, steps, atoms);
    s.fields.f0 = flat_curve(f);
    s.fields.g0 = flat_curve(g);
    s.fields.b = VolField::zero(1);
    s.fields.beta = VolField::zero(1);
    s.risky.kind = RiskyKind::DeterministicAtoms;
    s.risky.horizon = horizon;
    for (double u : atoms) s.risky.atoms.push_back({u, 1});
    s.default_model.rate = h;
    return s;
}

/// Marked point process with constant kappa and a uniform kernel.
inline Scenario news_like(double kappa, double g, std::size_t steps = 40, double horizon = 1.0) {
    Scenario s = merton_like(0.03, g, {}, 0.0, steps, horizon);
    s.risky.kind = RiskyKind::MarkedPointProcess;
    s.risky.rate = {kappa, 0.0};
    s.risky.kernel = DateKernel::uniform();
    return s;
}

inline double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace rdtest
