#include "riskydates/scenario.hpp"

#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "riskydates/error.hpp"

namespace riskydates {

Curve Scenario::initial_g() const {
    if (recovery) return flat_curve(recovery->g_pin(perturbation.shift(ConditionBreak::JumpProbability)));
    return fields.g0;
}

double Scenario::credit_intensity(double f_tt) const {
    if (recovery) return recovery->c_ac();
    return default_model.intensity(f_tt);
}

namespace {

void guard(ValidationReport& report, const std::function<void()>& check) {
    try {
        check();
    } catch (const Error& e) {
        report.violations.push_back({std::string(to_string(e.code())), e.detail()});
    }
}

}  // namespace

ValidationReport validate_scenario(const Scenario& sc) {
    ForwardFieldSpec fields = sc.fields;
    ValidationReport report;
    guard(report, [&] { fields.g0 = sc.initial_g(); });
    const ValidationReport base = validate_spec(fields, sc.grid);
    report.violations.insert(report.violations.end(), base.violations.begin(), base.violations.end());

    guard(report, [&] {
        if (std::abs(sc.risky.horizon - sc.grid.horizon()) > sc.grid.tolerance()) {
            throw Error(ErrorCode::InvalidModel, "risky-date model horizon differs from the grid horizon");
        }
    });
    guard(report, [&] { validate_risky_model(sc.risky, sc.grid); });
    guard(report, [&] {
        if (sc.default_model.rate < 0.0) throw Error(ErrorCode::InvalidModel, "default intensity must be non-negative");
        if (sc.default_model.kind == DefaultModel::Kind::Constant) sc.default_model.intensity(0.0);
    });
    if (sc.risky.kind == RiskyKind::DeterministicAtoms) {
        guard(report, [&] {
            for (const auto& a : sc.risky.atoms) jump_probability(fields.g0(a.date), a.weight);
        });
    }
    if (sc.risky.kind == RiskyKind::MarkedPointProcess) {
        guard(report, [&] {
            for (std::size_t i = 0; i < sc.grid.size(); ++i) jump_probability(fields.g0(sc.grid[i]), 1.0);
        });
    }
    if (sc.recovery) {
        guard(report, [&] { sc.recovery->validate(); });
        guard(report, [&] {
            if (!sc.fields.beta.is_zero()) {
                throw Error(ErrorCode::InvalidModel, "recovery needs beta = 0 so that g stays at its pin");
            }
            if (!sc.default_model.is_zero()) {
                throw Error(ErrorCode::InvalidModel, "with recovery, credit events come from the recovery model; set h = 0");
            }
        });
    }
    return report;
}

}  // namespace riskydates
