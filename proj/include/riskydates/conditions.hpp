#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "riskydates/path_state.hpp"
#include "riskydates/risky_measure.hpp"
#include "riskydates/scenario.hpp"

namespace riskydates {

enum class ConditionStatus { Pass, Fail, TriviallySatisfied };

std::string to_string(ConditionStatus status);

struct Residual {
    std::size_t path = 0;
    double t = 0.0;
    double T = 0.0;
    double value = 0.0;
};

struct ConditionResult {
    std::string name;
    ConditionStatus status = ConditionStatus::TriviallySatisfied;
    double tolerance = 0.0;
    double max_abs = 0.0;
    Residual worst;
    std::vector<Residual> residuals;
};

/// Pathwise check of the compensator of mu at J atoms:
/// sample mean of the jump of Y^(T) against the integral of g against mu^p({t} x du).
struct CompensatorLinkRow {
    double t = 0.0;
    double T = 0.0;
    double mc_mean = 0.0;
    double mc_se = 0.0;
    double compensator = 0.0;
    bool pass = true;
};

struct CompensatorLink {
    ConditionStatus status = ConditionStatus::TriviallySatisfied;
    std::vector<CompensatorLinkRow> rows;
};

struct ConditionReport {
    ConditionResult cond_i;
    ConditionResult cond_ii;
    ConditionResult cond_iii;
    ConditionResult cond_iv;
    ConditionResult cond_v;
    /// Simultaneous news-and-default term; rejected at validation, so always zero.
    ConditionResult cross_term;
    CompensatorLink link;

    bool pass() const;
    std::vector<std::string> failing() const;
};

struct Tolerances {
    double algebraic = 1e-10;
    double z = 4.0;
};

/// Residuals of the five no-arbitrage conditions on the retained paths. `model`
/// may carry J atoms that the simulation itself never saw. Paths must keep every row.
ConditionReport check_conditions(const Scenario& spec, const RiskyDateModel& model, std::span<const PathState> paths,
                                 const Tolerances& tol = {});

}  // namespace riskydates
