#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "riskydates/conditions.hpp"
#include "riskydates/scenario.hpp"
#include "riskydates/scenario_io.hpp"
#include "riskydates/simulator.hpp"
#include "riskydates/verifier.hpp"

namespace riskydates {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitInvalid = 2, kExitVerifyFailed = 3 };

struct CommandOptions {
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps;
    std::optional<double> tolerance_z;
    /// 0: environment default.
    unsigned workers = 0;
    ConditionBreak which = ConditionBreak::None;
    double magnitude = 0.0;
    std::string out_dir = "out";
};

/// "i", "ii" or "iv".
ConditionBreak parse_break(const std::string& label);
std::string break_label(ConditionBreak which);

/// Scenario config with command-line overrides applied, then built.
Scenario prepare_scenario(const ScenarioConfig& config, const CommandOptions& options);

/// git blob id: sha1("blob <size>\0" + content), lower-case hex.
std::string git_blob_hash(const std::string& content);

/// t,T,mean_price,se,mean_discounted,se with 17 significant digits.
std::string surfaces_csv(const Ensemble& ensemble);

struct Verification {
    Ensemble ensemble;
    MartingaleReport martingale;
    JumpReport jumps;
    ConditionReport conditions;

    bool pass() const { return martingale.pass() && jumps.pass() && conditions.pass(); }
};

/// Simulates without J atoms (they cannot be simulated), then checks the
/// conditions on `retain` full-row paths against the full risky-date model.
Verification run_verification(const Scenario& spec, unsigned workers = 0, std::size_t retain = 16);

int cmd_validate(const std::string& scenario_path, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::string& scenario_path, const CommandOptions& options, std::ostream& out,
                 std::ostream& err);
int cmd_verify(const std::string& scenario_path, const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace riskydates
