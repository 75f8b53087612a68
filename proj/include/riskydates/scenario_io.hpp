#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskydates/scenario.hpp"

namespace riskydates {

inline constexpr int kSchemaVersion = 1;

struct GridConfig {
    double horizon = 1.0;
    std::size_t steps = 200;
    std::vector<double> extra_nodes;

    bool operator==(const GridConfig&) const = default;
};

/// flat {value}, linear {intercept, slope} or tabulated {points}.
struct CurveConfig {
    std::string family = "flat";
    double value = 0.0;
    double intercept = 0.0;
    double slope = 0.0;
    std::vector<std::pair<double, double>> points;

    bool operator==(const CurveConfig&) const = default;
};

/// zero, constant {sigma} or exp_decay {sigma, decay}.
struct VolConfig {
    std::string family = "zero";
    std::vector<double> sigma;
    double decay = 0.0;

    bool operator==(const VolConfig&) const = default;
};

struct AtomConfig {
    double date = 0.0;
    unsigned weight = 1;

    bool operator==(const AtomConfig&) const = default;
};

struct KernelAtomConfig {
    double date = 0.0;
    double mass = 0.0;

    bool operator==(const KernelAtomConfig&) const = default;
};

struct JAtomConfig {
    double time = 0.0;
    double mass = 0.0;
    std::vector<KernelAtomConfig> kernel;

    bool operator==(const JAtomConfig&) const = default;
};

struct RiskyConfig {
    std::string kind = "deterministic_atoms";
    std::vector<AtomConfig> atoms;
    /// constant {rate} or linear {intercept, slope}
    std::string intensity_family = "constant";
    double intercept = 0.0;
    double slope = 0.0;
    /// uniform or exponential_delay {mean}
    std::string kernel_family = "uniform";
    double kernel_mean = 0.0;
    unsigned max_announcements = 0;
    std::vector<JAtomConfig> j_atoms;

    bool operator==(const RiskyConfig&) const = default;
};

struct DefaultConfig {
    /// constant {rate} or proportional {factor}
    std::string family = "constant";
    double rate = 0.0;

    bool operator==(const DefaultConfig&) const = default;
};

struct LossConfig {
    double loss = 0.0;
    double prob = 0.0;

    bool operator==(const LossConfig&) const = default;
};

struct RecoveryConfig {
    double event_rate = 0.0;
    std::vector<LossConfig> event_loss;
    std::vector<LossConfig> atom_loss;

    bool operator==(const RecoveryConfig&) const = default;
};

struct ScenarioConfig {
    int schema_version = kSchemaVersion;
    std::string name;
    GridConfig grid;
    CurveConfig f0;
    CurveConfig g0;
    std::size_t factors = 1;
    VolConfig b;
    VolConfig beta;
    RiskyConfig risky;
    DefaultConfig default_model;
    std::optional<RecoveryConfig> recovery;
    RunSettings run;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Throws ParseError with "source:line:col: ..." for syntax errors, a missing
/// or unsupported schema_version, unknown keys and ill-typed values.
ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "<scenario>");
/// Throws IoError when the file cannot be read.
ScenarioConfig load_scenario_file(const std::string& path);
std::string serialize_scenario(const ScenarioConfig& config);

/// Builds the runtime scenario. Risky dates, J times and J kernel dates become
/// grid nodes. Throws NonPositiveHorizon, NodeOutOfRange or InvalidModel.
Scenario build_scenario(const ScenarioConfig& config);

}  // namespace riskydates
