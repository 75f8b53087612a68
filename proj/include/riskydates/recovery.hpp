#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "riskydates/drift_engine.hpp"
#include "riskydates/model_core.hpp"
#include "riskydates/risky_measure.hpp"
#include "riskydates/rng.hpp"

namespace riskydates {

struct LossOutcome {
    double loss = 0.0;
    double prob = 0.0;
};

/// Finitely supported loss fraction; probability not listed means no loss.
struct LossLaw {
    std::vector<LossOutcome> outcomes;

    double expected() const;
    /// Throws LossOutOfRange for e outside [0, 1] or probabilities that do not fit in [0, 1].
    void validate() const;
    double sample(Rng& rng) const;
};

/// Fractional losses at risky dates (atom_loss, one draw per mark) and at
/// Poisson credit events of rate event_rate (event_loss).
struct RecoveryModel {
    double event_rate = 0.0;
    LossLaw event_loss;
    LossLaw atom_loss;

    /// C_ac = theta E[e].
    double c_ac() const { return event_rate * event_loss.expected(); }
    /// Expected relative loss at an atom of multiplicity w: 1 - (1 - E[e])^w.
    double delta_c(double w = 1.0) const;
    /// g per unit multiplicity making 1 - e^{-g} equal delta_c(1) + offset.
    /// Throws TotalExpectedLossAtAtom when that reaches 1.
    double g_pin(double offset = 0.0) const;
    void validate() const;
};

struct RecoveryEvent {
    double time = 0.0;
    std::size_t node = 0;
    double loss = 0.0;
    bool at_atom = false;
    std::size_t mark = 0;
};

/// xi on the grid: xi[k] = product of (1 - e) over events effective by node k.
struct RecoveryPath {
    std::vector<RecoveryEvent> events;
    std::vector<double> xi;
    double total_loss_time = std::numeric_limits<double>::infinity();
};

/// Events are effective at the first node at or after their time.
RecoveryPath recovery_path_from_events(std::vector<RecoveryEvent> events, const TimeGrid& grid);
/// Poisson credit events and one loss per priced mark at its risky date.
RecoveryPath recovery_path(const RecoveryModel& model, const MeasureRealization& real, const TimeGrid& grid,
                           Rng& rng);

struct RecoveryDrift {
    DriftSlice drift;
    double c_ac = 0.0;
    double delta_c = 0.0;
    double g_pin = 0.0;
};

/// Same Lebesgue/atom split as compute_drift; g is pinned so that atoms carry
/// exactly the expected loss and the short rate absorbs C_ac.
RecoveryDrift compute_recovery_drift(const DriftTables& tables, const RecoveryModel& model,
                                     const MeasureRealization& real, std::size_t k, std::span<const double> g_row);

struct Scenario;
struct PathState;

/// P(t,T) = xi_t exp(-int f - sum g) on the stored rows of the path.
BondSurface price_with_recovery(const Scenario& spec, const PathState& path);

}  // namespace riskydates
