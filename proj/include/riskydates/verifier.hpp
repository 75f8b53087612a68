#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "riskydates/path_state.hpp"
#include "riskydates/simulator.hpp"

namespace riskydates {

struct MartingalePoint {
    double t = 0.0;
    double T = 0.0;
    double mean = 0.0;
    double se = 0.0;
    double target = 0.0;
    double z = 0.0;
};

struct MartingaleReport {
    std::vector<MartingalePoint> points;
    double z_threshold = 4.0;
    /// z_threshold + sqrt(2 ln M) for M mesh points.
    double widened_threshold = 4.0;
    double max_abs_z = 0.0;
    MartingalePoint worst;
    /// "pass", "fail" or "inconclusive" (too few paths for the SEs to mean anything).
    std::string verdict = "inconclusive";
    std::size_t n_paths = 0;
    double runtime_seconds = 0.0;

    bool pass() const { return verdict != "fail"; }
};

MartingaleReport martingale_test(const Ensemble& ensemble, const TimeGrid& grid, double z_threshold = 4.0,
                                 std::size_t min_paths = 1000);

/// |log G(t,T) from the atom sum - discretized semimartingale decomposition|.
/// The path must keep every row.
double logG_oracle(const SimContext& ctx, const PathState& path, std::size_t t_node, std::size_t T_node);

/// max over t-nodes <= T of |product-form stochastic exponential - direct price|.
double stoch_exp_oracle(const SimContext& ctx, const PathState& path, std::size_t T_node);

/// P(t_k, T_j) from the stored row k.
double direct_price(const Scenario& spec, const PathState& path, std::size_t k, std::size_t j);

struct JumpRow {
    std::string label;
    double time = 0.0;
    std::size_t survivors = 0;
    std::size_t defaults = 0;
    double frequency = 0.0;
    double expected = 0.0;
    double sigma = 0.0;
    double z = 0.0;
    /// "pass", "fail" or "no data".
    std::string status = "no data";
};

struct JumpReport {
    std::vector<JumpRow> rows;
    /// Share of paths in default by the horizon.
    double default_share = 0.0;

    bool pass() const;
};

/// Conditional loss frequency among survivors at each risky date against 1 - exp(-g w).
JumpReport jump_frequency_test(const Ensemble& ensemble, double z_threshold = 4.0);

}  // namespace riskydates
