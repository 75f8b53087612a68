#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "riskydates/drift_engine.hpp"
#include "riskydates/path_state.hpp"
#include "riskydates/scenario.hpp"

namespace riskydates {

/// Which t-rows of the f and g fields a path keeps.
struct RowSelection {
    bool all = false;
    std::vector<std::size_t> nodes;

    static RowSelection every_row() { return {true, {}}; }
};

/// Read-only state shared by all paths of a run.
class SimContext {
public:
    explicit SimContext(const Scenario& scenario);

    const Scenario& scenario() const { return *scenario_; }
    const DriftTables& tables() const { return tables_; }
    const std::vector<double>& f_init() const { return f_init_; }
    const std::vector<double>& g_init() const { return g_init_; }
    /// expm1(-g(0, T_i)); g stays frozen off the atoms when beta is zero.
    const std::vector<double>& expm1_neg_g_init() const { return expm1_g_; }
    bool g_frozen() const { return tables_.beta_zero(); }
    /// With g frozen the cell drift depends only on (k, i) and on whether news
    /// can still arrive: a(k, k + j) at [j] for kappa_eff = kappa(k), or for 0.
    const double* frozen_drift(std::size_t k, bool news) const {
        return &(news ? a_news_ : a_quiet_)[k * (tables_.last() + 1) + k];
    }

private:
    const Scenario* scenario_;
    DriftTables tables_;
    std::vector<double> f_init_;
    std::vector<double> g_init_;
    std::vector<double> expm1_g_;
    std::vector<double> a_news_;
    std::vector<double> a_quiet_;
};

/// Euler stepping of f and g under the drift from compute_drift (plus any
/// injected drift break). Throws NonFiniteField.
ForwardFields simulate_forward_fields(const SimContext& ctx, const MeasureRealization& real,
                                      const BrownianIncrements& dW, const RowSelection& rows);
void simulate_forward_fields_into(const SimContext& ctx, const MeasureRealization& real,
                                  const BrownianIncrements& dW, const RowSelection& rows, ForwardFields& out);

/// Zero-recovery default: intensity default from a unit exponential, then one
/// Bernoulli per risky-date node with probability 1 - exp(-g(u,u) w).
DefaultOutcome simulate_default(const Scenario& spec, const MeasureRealization& real, const ForwardFields& fields,
                                Rng& rng);

/// Hazard (or C_ac), short rate and X0 at every node.
void fill_numeraire(const Scenario& spec, PathState& path);

/// Full path: announcements, increments, fields, default or recovery, numeraire.
void simulate_path_into(const SimContext& ctx, std::uint64_t path_index, const RowSelection& rows, PathState& out);
PathState simulate_path(const SimContext& ctx, std::uint64_t path_index, const RowSelection& rows);

/// Prices on every stored row; dispatches to price_with_recovery when needed.
BondSurface bond_surface(const Scenario& spec, const PathState& path);

/// P(0, T_j) from the initial curves and the atoms announced at time zero.
std::vector<double> initial_prices(const Scenario& spec);

struct Mesh {
    std::vector<std::size_t> t_nodes;
    std::vector<std::size_t> T_nodes;
    /// (t-node, T-node) with T >= t.
    std::vector<std::pair<std::size_t, std::size_t>> points;
};

/// Roughly evenly spaced t and T nodes, plus each deterministic risky date and the node before it.
Mesh build_mesh(const Scenario& spec, std::size_t points_per_axis);

struct MeshStat {
    double t = 0.0;
    double T = 0.0;
    std::size_t t_node = 0;
    std::size_t T_node = 0;
    double target = 0.0;
    double mean_price = 0.0;
    double se_price = 0.0;
    double mean_discounted = 0.0;
    double se_discounted = 0.0;
};

/// Loss bookkeeping at risky dates among paths alive just before them.
struct AtomStat {
    std::size_t node = kNoNode;
    double time = 0.0;
    std::size_t survivors = 0;
    std::size_t defaults = 0;
    double sum_expected = 0.0;
    double sum_expected_var = 0.0;
    double sum_realized = 0.0;
    double sum_realized_sq = 0.0;
    double sum_g = 0.0;
};

struct PathFailure {
    std::uint64_t path = 0;
    std::string message;
};

struct Ensemble {
    Mesh mesh;
    std::vector<MeshStat> stats;
    /// One entry per deterministic risky date.
    std::vector<AtomStat> fixed_atoms;
    /// All announced (random) risky dates pooled.
    AtomStat random_atoms;
    bool recovery = false;
    std::vector<double> hist_edges;
    /// Default-time counts per bin, with one extra slot for "no default by the horizon".
    std::vector<std::size_t> hist_counts;
    std::vector<double> mean_mu_bar;
    std::size_t n_paths = 0;
    std::size_t n_ok = 0;
    std::vector<PathFailure> failures;
    std::vector<PathState> retained;
    double runtime_seconds = 0.0;
    unsigned workers = 1;
};

struct RunOptions {
    std::size_t n_paths = 0;
    std::uint64_t master_seed = 1;
    /// 0: RISKYDATES_WORKERS, else hardware concurrency.
    unsigned workers = 0;
    /// Keep the first `retain` paths with every row of the fields.
    std::size_t retain = 0;
    std::size_t mesh_points = 11;
    std::size_t hist_bins = 20;
};

RunOptions run_options_from(const Scenario& spec);
unsigned default_workers();

/// Paths are processed in fixed batches whose partial sums are combined in
/// index order, so results do not depend on the number of workers.
Ensemble run_scenario(const Scenario& spec, const RunOptions& options);

}  // namespace riskydates
