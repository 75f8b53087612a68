#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "riskydates/model_core.hpp"
#include "riskydates/recovery.hpp"
#include "riskydates/risky_measure.hpp"
#include "riskydates/rng.hpp"

namespace riskydates {

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

struct BrownianIncrements {
    std::size_t factors = 0;
    /// Step-major: values[k * factors + f].
    std::vector<double> values;

    std::size_t steps() const { return factors == 0 ? 0 : values.size() / factors; }
    std::span<const double> step(std::size_t k) const { return {values.data() + k * factors, factors}; }
};

BrownianIncrements draw_increments(const TimeGrid& grid, std::size_t factors, Rng& rng);
void draw_increments_into(const TimeGrid& grid, std::size_t factors, Rng& rng, BrownianIncrements& out);

/// f and g rows at selected t-nodes (each row spans every T-node; entries
/// below the row's own node are left as they were), plus both diagonals.
struct ForwardFields {
    std::size_t width = 0;
    std::vector<std::size_t> row_nodes;
    std::vector<double> f_rows;
    std::vector<double> g_rows;
    std::vector<double> f_diag;
    std::vector<double> g_diag;
    /// g(announce_node, tau_node) for each mark, in mark order.
    std::vector<double> g_announce;

    std::optional<std::size_t> row_of(std::size_t node) const;
    std::span<const double> f_row(std::size_t r) const { return {f_rows.data() + r * width, width}; }
    std::span<const double> g_row(std::size_t r) const { return {g_rows.data() + r * width, width}; }
};

enum class DefaultCause { None, Intensity, Atom, TotalLoss };

/// One risky-date node reached alive.
struct AtomEvent {
    std::size_t node = 0;
    double weight = 0.0;
    double g = 0.0;
    /// 1 - exp(-g w): the loss the g field prices in.
    double expected_loss = 0.0;
    /// Probability actually used for the Bernoulli (differs under a break).
    double prob_used = 0.0;
    /// 1 for a zero-recovery default, 1 - prod(1 - e) with recovery.
    double realized_loss = 0.0;
    bool from_time_zero = false;
};

struct DefaultOutcome {
    double time = std::numeric_limits<double>::infinity();
    /// First node at or after the default time.
    std::size_t node = kNoNode;
    DefaultCause cause = DefaultCause::None;
    std::vector<AtomEvent> atom_events;

    bool dead_at(std::size_t k) const { return node <= k; }
};

struct PathState {
    std::uint64_t index = 0;
    std::uint64_t master_seed = 0;
    BrownianIncrements increments;
    MeasureRealization announcements;
    ForwardFields fields;
    DefaultOutcome default_outcome;
    std::vector<double> hazard;
    std::vector<double> short_rate;
    /// X0 at each node.
    std::vector<double> numeraire;
    std::optional<RecoveryPath> recovery;

    /// Survival indicator, or xi with recovery.
    double survival(std::size_t k) const;
};

}  // namespace riskydates
