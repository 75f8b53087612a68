#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "riskydates/drift_engine.hpp"
#include "riskydates/model_core.hpp"
#include "riskydates/recovery.hpp"
#include "riskydates/risky_measure.hpp"

namespace riskydates {

/// Controlled violation injected before simulating.
enum class ConditionBreak {
    None,
    ShortRate,        // (i): r = f - h + m
    JumpProbability,  // (ii): Bernoulli probability + m; with recovery, g pinned to delta_c + m
    Drift,            // (iv): a + m at every maturity
};

struct Perturbation {
    ConditionBreak which = ConditionBreak::None;
    double magnitude = 0.0;

    double shift(ConditionBreak c) const { return which == c ? magnitude : 0.0; }
};

struct RunSettings {
    std::size_t n_paths = 100000;
    std::uint64_t master_seed = 1;
    double z_threshold = 4.0;
    double algebraic_tolerance = 1e-10;
    std::size_t mesh_points = 11;

    bool operator==(const RunSettings&) const = default;
};

struct Scenario {
    std::string name;
    TimeGrid grid;
    ForwardFieldSpec fields;
    RiskyDateModel risky;
    DefaultModel default_model;
    std::optional<RecoveryModel> recovery;
    Perturbation perturbation;
    RunSettings run;

    /// g(0, .) actually used: the recovery pin when recovery is present.
    Curve initial_g() const;
    /// h, or C_ac with recovery.
    double credit_intensity(double f_tt) const;
};

/// validate_spec plus model admissibility; admissibility errors appear as
/// violations with the error code name.
ValidationReport validate_scenario(const Scenario& scenario);

}  // namespace riskydates
