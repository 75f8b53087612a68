#include "riskydates/verifier.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "riskydates/error.hpp"

namespace riskydates {

MartingaleReport martingale_test(const Ensemble& ensemble, const TimeGrid& grid, double z_threshold,
                                 std::size_t min_paths) {
    (void)grid;
    MartingaleReport rep;
    rep.z_threshold = z_threshold;
    rep.n_paths = ensemble.n_ok;
    rep.runtime_seconds = ensemble.runtime_seconds;
    const double M = static_cast<double>(std::max<std::size_t>(ensemble.stats.size(), 1));
    rep.widened_threshold = z_threshold + std::sqrt(2.0 * std::log(M));
    for (const MeshStat& s : ensemble.stats) {
        MartingalePoint p;
        p.t = s.t;
        p.T = s.T;
        p.mean = s.mean_discounted;
        p.se = s.se_discounted;
        p.target = s.target;
        const double se = std::max(s.se_discounted, 1e-12 * std::max(1.0, std::abs(s.target)));
        p.z = ensemble.n_ok > 0 ? (s.mean_discounted - s.target) / se : 0.0;
        if (std::abs(p.z) >= rep.max_abs_z) {
            rep.max_abs_z = std::abs(p.z);
            rep.worst = p;
        }
        rep.points.push_back(p);
    }
    if (ensemble.n_ok < min_paths) rep.verdict = "inconclusive";
    else rep.verdict = rep.max_abs_z <= rep.widened_threshold ? "pass" : "fail";
    return rep;
}

double direct_price(const Scenario& spec, const PathState& path, std::size_t k, std::size_t j) {
    const auto r = path.fields.row_of(k);
    if (!r) throw Error(ErrorCode::InvalidModel, fmt::format("row {} not stored on path {}", k, path.index));
    const double alive = path.survival(k);
    if (alive == 0.0) return 0.0;
    const auto f = path.fields.f_row(*r);
    const auto g = path.fields.g_row(*r);
    double expo = 0.0;
    for (std::size_t i = k; i < j; ++i) expo += f[i] * spec.grid.width(i);
    for (const Mark& m : path.announcements.marks) {
        if (m.priced() && m.announce_node <= k && m.tau_node > k && m.tau_node <= j) expo += m.weight * g[m.tau_node];
    }
    return alive * std::exp(-expo);
}

namespace {

std::vector<AtomAt> atoms_at(const TimeGrid& grid, const std::vector<ActiveAtom>& active) {
    std::vector<AtomAt> out;
    out.reserve(active.size());
    for (const auto& a : active) out.push_back({grid[a.node], a.weight});
    return out;
}

double weight_at(const std::vector<ActiveAtom>& active, std::size_t node) {
    for (const auto& a : active) {
        if (a.node == node) return a.weight;
    }
    return 0.0;
}

}  // namespace

double logG_oracle(const SimContext& ctx, const PathState& path, std::size_t t_node, std::size_t T_node) {
    const Scenario& spec = ctx.scenario();
    const TimeGrid& grid = spec.grid;
    const DriftTables& tables = ctx.tables();
    const std::size_t n = tables.factors();
    const auto r = path.fields.row_of(t_node);
    if (!r) throw Error(ErrorCode::InvalidModel, "logG_oracle needs the row at t");
    const auto g_t = path.fields.g_row(*r);
    const auto& marks = path.announcements.marks;

    double direct = 0.0;
    for (const Mark& m : marks) {
        if (m.priced() && m.announce_node <= t_node && m.tau_node > t_node && m.tau_node <= T_node) {
            direct -= m.weight * g_t[m.tau_node];
        }
    }

    std::vector<std::vector<ActiveAtom>> active;
    if (!tables.beta_zero()) {
        for (std::size_t s = 0; s < t_node; ++s) active.push_back(active_atoms(path.announcements, s));
    }
    double rhs = 0.0;
    for (std::size_t mi = 0; mi < marks.size(); ++mi) {
        const Mark& m = marks[mi];
        if (!m.priced() || m.announce_node > t_node || m.tau_node > T_node) continue;
        const double w = m.weight;
        double c = m.tau_node <= t_node ? w * path.fields.g_diag[m.tau_node] : 0.0;
        c -= w * path.fields.g_announce[mi];
        if (!tables.beta_zero()) {
            const std::size_t stop = std::min(t_node, m.tau_node);
            for (std::size_t s = m.announce_node; s < stop; ++s) {
                const auto atoms = atoms_at(grid, active[s]);
                const double alpha =
                    pointwise_alpha(spec.fields, grid[s], m.tau, weight_at(active[s], m.tau_node), atoms);
                const double* beta = tables.beta(s, m.tau_node);
                const auto dW = path.increments.step(s);
                double noise = 0.0;
                for (std::size_t f = 0; f < n; ++f) noise += beta[f] * dW[f];
                c -= w * (alpha * grid.width(s) + noise);
            }
        }
        rhs += c;
    }
    return std::abs(direct - rhs);
}

double stoch_exp_oracle(const SimContext& ctx, const PathState& path, std::size_t T_node) {
    const Scenario& spec = ctx.scenario();
    const TimeGrid& grid = spec.grid;
    const DriftTables& tables = ctx.tables();
    const std::size_t n = tables.factors();
    const double T = grid[T_node];
    const auto& marks = path.announcements.marks;

    double Z = direct_price(spec, path, 0, T_node);
    double worst = 0.0;
    std::vector<double> bbar(n), bbar_u(n), total(n);
    for (std::size_t s = 0; s < T_node; ++s) {
        const double alive = path.survival(s);
        if (alive == 0.0) break;
        const double t = grid[s];
        const double d = grid.width(s);
        const auto active = active_atoms(path.announcements, s);
        const auto atoms = atoms_at(grid, active);

        // continuous part of X over [t_s, t_{s+1}]
        spec.fields.b.integral(t, T, bbar);
        total = bbar;
        double abar = 0.0;
        double alphabar = 0.0;
        for (const auto& a : active) {
            if (a.node > T_node) continue;
            const double* beta = tables.beta(s, a.node);
            spec.fields.b.integral(t, grid[a.node], bbar_u);
            for (std::size_t f = 0; f < n; ++f) {
                total[f] += a.weight * beta[f];
                abar += a.weight * beta[f] * (bbar[f] - bbar_u[f]);
            }
            alphabar += a.weight * pointwise_alpha(spec.fields, t, grid[a.node], a.weight, atoms);
        }
        for (std::size_t f = 0; f < n; ++f) abar += 0.5 * bbar[f] * bbar[f];
        const double kappa_eff = effective_kappa(tables, path.announcements, s);
        if (kappa_eff > 0.0) {
            const auto g = path.fields.g_row(*path.fields.row_of(s));
            double news = 0.0;
            for (std::size_t i = s; i < T_node; ++i) {
                const double mid = 0.5 * (grid[i] + grid[i + 1]);
                news += grid.width(i) * std::expm1(-0.5 * (g[i] + g[i + 1])) *
                        spec.risky.kernel.density(t, mid, spec.risky.horizon);
            }
            abar += kappa_eff * news;
        }
        const auto dW = path.increments.step(s);
        double noise = 0.0;
        for (std::size_t f = 0; f < n; ++f) noise += total[f] * dW[f];
        const double dXc = (path.fields.f_diag[s] - abar - alphabar) * d - noise;

        // jumps at t_{s+1}: risky dates passing and new announcements
        double dXd = 0.0;
        for (std::size_t mi = 0; mi < marks.size(); ++mi) {
            const Mark& m = marks[mi];
            if (!m.priced()) continue;
            if (m.tau_node == s + 1) dXd += m.weight * path.fields.g_diag[s + 1];
            if (m.announce_node == s + 1 && m.tau_node <= T_node) dXd -= m.weight * path.fields.g_announce[mi];
        }
        const double survival_ratio = path.survival(s + 1) / alive;
        Z *= std::exp(dXc) * (1.0 + std::expm1(dXd)) * survival_ratio;
        worst = std::max(worst, std::abs(Z - direct_price(spec, path, s + 1, T_node)));
    }
    return worst;
}

bool JumpReport::pass() const {
    return std::none_of(rows.begin(), rows.end(), [](const JumpRow& r) { return r.status == "fail"; });
}

namespace {

JumpRow jump_row(const std::string& label, const AtomStat& s, bool recovery, double z_threshold) {
    JumpRow row;
    row.label = label;
    row.time = s.time;
    row.survivors = s.survivors;
    row.defaults = s.defaults;
    if (s.survivors == 0) return row;
    const double n = static_cast<double>(s.survivors);
    row.frequency = s.sum_realized / n;
    row.expected = s.sum_expected / n;
    if (recovery) {
        const double v = s.survivors > 1 ? std::max(0.0, (s.sum_realized_sq - s.sum_realized * s.sum_realized / n) / (n - 1.0)) : 0.0;
        row.sigma = std::sqrt(v / n);
    } else {
        row.sigma = std::sqrt(s.sum_expected_var) / n;
    }
    const double diff = row.frequency - row.expected;
    if (row.sigma > 0.0) {
        row.z = diff / row.sigma;
        row.status = std::abs(row.z) <= z_threshold ? "pass" : "fail";
    } else {
        row.status = std::abs(diff) <= 1e-12 ? "pass" : "fail";
        row.z = row.status == "pass" ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    return row;
}

}  // namespace

JumpReport jump_frequency_test(const Ensemble& ensemble, double z_threshold) {
    JumpReport rep;
    for (const AtomStat& s : ensemble.fixed_atoms) {
        rep.rows.push_back(jump_row(fmt::format("risky date {}", s.time), s, ensemble.recovery, z_threshold));
    }
    if (ensemble.random_atoms.survivors > 0) {
        rep.rows.push_back(jump_row("announced risky dates (pooled)", ensemble.random_atoms, ensemble.recovery, z_threshold));
    }
    std::size_t total = 0;
    for (std::size_t c : ensemble.hist_counts) total += c;
    if (total > 0) {
        rep.default_share = 1.0 - static_cast<double>(ensemble.hist_counts.back()) / static_cast<double>(total);
    }
    return rep;
}

}  // namespace riskydates
