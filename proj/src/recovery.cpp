#include "riskydates/recovery.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "riskydates/error.hpp"
#include "riskydates/path_state.hpp"
#include "riskydates/scenario.hpp"
#include "riskydates/simulator.hpp"

namespace riskydates {

double LossLaw::expected() const {
    double e = 0.0;
    for (const auto& o : outcomes) e += o.loss * o.prob;
    return e;
}

void LossLaw::validate() const {
    double total = 0.0;
    for (const auto& o : outcomes) {
        if (!(o.loss >= 0.0 && o.loss <= 1.0)) {
            throw Error(ErrorCode::LossOutOfRange, fmt::format("loss fraction {} outside [0, 1]", o.loss));
        }
        if (!(o.prob >= 0.0 && o.prob <= 1.0)) {
            throw Error(ErrorCode::LossOutOfRange, fmt::format("loss probability {} outside [0, 1]", o.prob));
        }
        total += o.prob;
    }
    if (total > 1.0 + 1e-12) {
        throw Error(ErrorCode::LossOutOfRange, fmt::format("loss probabilities sum to {}", total));
    }
}

double LossLaw::sample(Rng& rng) const {
    const double u = rng.uniform();
    double acc = 0.0;
    for (const auto& o : outcomes) {
        acc += o.prob;
        if (u < acc) return o.loss;
    }
    return 0.0;
}

double RecoveryModel::delta_c(double w) const { return -std::expm1(w * std::log1p(-atom_loss.expected())); }

double RecoveryModel::g_pin(double offset) const {
    const double dc = delta_c(1.0) + offset;
    if (dc >= 1.0) {
        throw Error(ErrorCode::TotalExpectedLossAtAtom,
                    fmt::format("expected loss {} at an atom makes g infinite", dc));
    }
    return -std::log1p(-dc);
}

void RecoveryModel::validate() const {
    event_loss.validate();
    atom_loss.validate();
    if (!(event_rate >= 0.0) || !std::isfinite(event_rate)) {
        throw Error(ErrorCode::InvalidModel, fmt::format("credit event rate {} must be finite and non-negative", event_rate));
    }
    g_pin();
}

RecoveryPath recovery_path_from_events(std::vector<RecoveryEvent> events, const TimeGrid& grid) {
    for (const auto& e : events) {
        if (!(e.loss >= 0.0 && e.loss <= 1.0)) {
            throw Error(ErrorCode::LossOutOfRange, fmt::format("loss fraction {} outside [0, 1]", e.loss));
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const RecoveryEvent& a, const RecoveryEvent& b) { return a.time < b.time; });
    RecoveryPath path;
    path.xi.assign(grid.size(), 1.0);
    double xi = 1.0;
    std::size_t next = 0;
    for (auto& e : events) e.node = std::min(grid.ceil_index(e.time), grid.last());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        while (next < events.size() && events[next].node == k) {
            xi *= 1.0 - events[next].loss;
            if (xi == 0.0 && !std::isfinite(path.total_loss_time)) path.total_loss_time = events[next].time;
            ++next;
        }
        path.xi[k] = xi;
    }
    path.events = std::move(events);
    return path;
}

RecoveryPath recovery_path(const RecoveryModel& model, const MeasureRealization& real, const TimeGrid& grid,
                           Rng& rng) {
    std::vector<RecoveryEvent> events;
    const double horizon = grid.horizon();
    if (model.event_rate > 0.0) {
        double s = 0.0;
        while (true) {
            s += rng.exponential() / model.event_rate;
            if (s > horizon) break;
            events.push_back({s, 0, model.event_loss.sample(rng), false, 0});
        }
    }
    for (std::size_t m = 0; m < real.marks.size(); ++m) {
        const Mark& mark = real.marks[m];
        // one draw per unit of multiplicity, consumed even for unpriced marks
        for (unsigned w = 0; w < mark.weight; ++w) {
            const double loss = model.atom_loss.sample(rng);
            if (mark.priced()) events.push_back({mark.tau, 0, loss, true, m});
        }
    }
    return recovery_path_from_events(std::move(events), grid);
}

RecoveryDrift compute_recovery_drift(const DriftTables& tables, const RecoveryModel& model,
                                     const MeasureRealization& real, std::size_t k, std::span<const double> g_row) {
    RecoveryDrift out;
    out.c_ac = model.c_ac();
    out.delta_c = model.delta_c(1.0);
    out.g_pin = model.g_pin();
    out.drift = compute_drift(tables, real, k, g_row);
    return out;
}

BondSurface price_with_recovery(const Scenario& spec, const PathState& path) {
    if (!spec.recovery || !path.recovery) {
        throw Error(ErrorCode::InvalidModel, "price_with_recovery needs a recovery model and a recovery path");
    }
    return bond_surface(spec, path);
}

}  // namespace riskydates
