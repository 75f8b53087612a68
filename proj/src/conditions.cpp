#include "riskydates/conditions.hpp"

#include <cmath>

#include <fmt/format.h>

#include "riskydates/drift_engine.hpp"
#include "riskydates/error.hpp"

namespace riskydates {

std::string to_string(ConditionStatus status) {
    switch (status) {
        case ConditionStatus::Pass: return "pass";
        case ConditionStatus::Fail: return "fail";
        case ConditionStatus::TriviallySatisfied: return "trivially satisfied";
    }
    return "unknown";
}

bool ConditionReport::pass() const { return failing().empty(); }

std::vector<std::string> ConditionReport::failing() const {
    std::vector<std::string> out;
    for (const ConditionResult* c : {&cond_i, &cond_ii, &cond_iii, &cond_iv, &cond_v, &cross_term}) {
        if (c->status == ConditionStatus::Fail) out.push_back(c->name);
    }
    if (link.status == ConditionStatus::Fail) out.push_back("compensator link");
    return out;
}

namespace {

void add(ConditionResult& c, const Residual& r) {
    if (c.residuals.empty() || std::abs(r.value) > c.max_abs) {
        c.max_abs = std::abs(r.value);
        c.worst = r;
    }
    c.residuals.push_back(r);
}

void finish(ConditionResult& c, bool applicable) {
    if (!applicable) {
        c.status = ConditionStatus::TriviallySatisfied;
        return;
    }
    c.status = c.max_abs <= c.tolerance ? ConditionStatus::Pass : ConditionStatus::Fail;
}

ConditionResult make(const std::string& name, double tol) {
    ConditionResult c;
    c.name = name;
    c.tolerance = tol;
    return c;
}

}  // namespace

ConditionReport check_conditions(const Scenario& spec, const RiskyDateModel& model, std::span<const PathState> paths,
                                 const Tolerances& tol) {
    ConditionReport rep;
    rep.cond_i = make("(i) short rate", tol.algebraic);
    rep.cond_ii = make("(ii) jump at risky dates", tol.algebraic);
    rep.cond_iii = make("(iii) predictable announcements", tol.algebraic);
    rep.cond_iv = make("(iv) drift", tol.algebraic);
    rep.cond_v = make("(v) singular parts", tol.algebraic);
    rep.cross_term = make("news-and-default cross term", tol.algebraic);

    const TimeGrid& grid = spec.grid;
    const std::size_t last = grid.last();
    const DriftTables tables(grid, spec.fields, spec.risky);
    const double drift_shift = spec.perturbation.shift(ConditionBreak::Drift);

    bool any_atom = false;
    for (const PathState& path : paths) {
        if (path.fields.row_nodes.size() != grid.size()) {
            throw Error(ErrorCode::InvalidModel, "check_conditions needs paths that keep every field row");
        }
        for (std::size_t k = 0; k < last; ++k) {
            if (path.survival(k) == 0.0) break;
            const double f = path.fields.f_diag[k];
            add(rep.cond_i, {path.index, grid[k], grid[k], f - path.short_rate[k] - spec.credit_intensity(f)});
        }
        for (const AtomEvent& ev : path.default_outcome.atom_events) {
            any_atom = true;
            const double implied = -std::expm1(-ev.g * ev.weight);
            const double actual = spec.recovery ? spec.recovery->delta_c(ev.weight) : ev.prob_used;
            add(rep.cond_ii, {path.index, grid[ev.node], grid[ev.node], actual - implied});
        }
        DriftSlice slice;
        for (std::size_t k = 0; k < last; ++k) {
            const auto g_row = path.fields.g_row(k);
            const auto atoms = active_atoms(path.announcements, k);
            const double kappa_eff = effective_kappa(tables, path.announcements, k);
            compute_drift_into(tables, k, g_row, atoms, kappa_eff, {}, slice);
            for (double& a : slice.a) a += drift_shift;
            const auto terms = integrated_terms(tables, k, g_row, atoms, kappa_eff, slice);
            Residual worst{path.index, grid[k], grid[k], 0.0};
            for (std::size_t j = k; j <= last; ++j) {
                const std::size_t o = j - k;
                const double r = -terms.abar[o] - terms.alphabar[o] + terms.half_norm[o] + terms.news[o];
                if (std::abs(r) > std::abs(worst.value)) worst = {path.index, grid[k], grid[j], r};
            }
            add(rep.cond_iv, worst);
        }
    }
    finish(rep.cond_i, !paths.empty());
    finish(rep.cond_ii, any_atom);
    finish(rep.cond_iv, !paths.empty());
    finish(rep.cond_v, false);
    finish(rep.cross_term, false);

    // (iii) and the compensator link at J atoms
    for (const JAtom& j : model.j_atoms) {
        const auto node = grid.find(j.time);
        if (!node) throw Error(ErrorCode::UnsnappedAtom, fmt::format("J atom {} is not a grid node", j.time));
        const std::size_t k = *node;
        std::vector<double> horizons;
        for (const auto& ka : j.kernel) horizons.push_back(ka.date);
        horizons.push_back(grid.horizon());

        for (double T : horizons) {
            double sum_y = 0.0, sum_y2 = 0.0, sum_c = 0.0;
            std::size_t n = 0;
            for (const PathState& path : paths) {
                if (path.survival(k) == 0.0) continue;
                const auto g = path.fields.g_row(k);
                double dmu = 0.0;
                for (const Mark& m : path.announcements.marks) {
                    if (m.priced() && m.tau_node == k) dmu += m.weight;
                }
                double res = 0.0;
                double comp = 0.0;
                for (const auto& ka : j.kernel) {
                    if (ka.date > T + grid.tolerance()) continue;
                    const auto u = grid.find(ka.date);
                    if (!u) throw Error(ErrorCode::UnsnappedAtom, fmt::format("J kernel date {} is not a grid node", ka.date));
                    res += ka.mass * psi_eval(path.fields.g_diag[k], dmu, g[*u], 0);
                    comp += ka.mass * g[*u];
                }
                add(rep.cond_iii, {path.index, j.time, T, j.mass * res});

                // one draw of the J jump: announce with probability mass, date from the kernel
                Rng rng(path.master_seed, path.index, Stream::Checker);
                double y = 0.0;
                if (rng.uniform() < j.mass) {
                    const double v = rng.uniform();
                    double acc = 0.0;
                    for (const auto& ka : j.kernel) {
                        acc += ka.mass;
                        if (v < acc || &ka == &j.kernel.back()) {
                            if (ka.date <= T + grid.tolerance()) y = g[*grid.find(ka.date)];
                            break;
                        }
                    }
                }
                sum_y += y - j.mass * comp;
                sum_y2 += (y - j.mass * comp) * (y - j.mass * comp);
                sum_c += j.mass * comp;
                ++n;
            }
            if (n == 0) continue;
            CompensatorLinkRow row;
            row.t = j.time;
            row.T = T;
            const double nn = static_cast<double>(n);
            row.compensator = sum_c / nn;
            row.mc_mean = row.compensator + sum_y / nn;
            row.mc_se = n > 1 ? std::sqrt(std::max(0.0, (sum_y2 - sum_y * sum_y / nn) / (nn - 1.0)) / nn) : 0.0;
            row.pass = std::abs(sum_y / nn) <= tol.z * row.mc_se + 1e-12;
            rep.link.rows.push_back(row);
        }
    }
    finish(rep.cond_iii, !model.j_atoms.empty());

    if (model.j_atoms.empty()) {
        // absolutely continuous compensator: no mass at any fixed time, and no
        // announcement lands exactly on a grid time either
        for (std::size_t k = 0; k <= last; k += std::max<std::size_t>(1, last / 10)) {
            double y = 0.0;
            for (const PathState& path : paths) {
                for (const Mark& m : path.announcements.marks) {
                    if (m.sigma == grid[k] && m.sigma > 0.0) y += path.fields.g_row(k)[m.tau_node];
                }
            }
            rep.link.rows.push_back({grid[k], grid.horizon(), y, 0.0, 0.0, y == 0.0});
        }
    }
    rep.link.status = ConditionStatus::Pass;
    for (const auto& r : rep.link.rows) {
        if (!r.pass) rep.link.status = ConditionStatus::Fail;
    }
    return rep;
}

}  // namespace riskydates
