#include "riskydates/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "riskydates/error.hpp"

namespace riskydates {

SimContext::SimContext(const Scenario& scenario)
    : scenario_(&scenario), tables_(scenario.grid, scenario.fields, scenario.risky) {
    const TimeGrid& grid = scenario.grid;
    const Curve g0 = scenario.initial_g();
    f_init_.resize(grid.size());
    g_init_.resize(grid.size());
    expm1_g_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        f_init_[i] = scenario.fields.f0(grid[i]);
        g_init_[i] = g0(grid[i]);
        expm1_g_[i] = std::expm1(-g_init_[i]);
    }
    if (!g_frozen()) return;
    const std::size_t last = grid.last();
    a_news_.assign((last + 1) * (last + 1), 0.0);
    a_quiet_.assign((last + 1) * (last + 1), 0.0);
    DriftSlice slice;
    for (std::size_t k = 0; k < last; ++k) {
        compute_drift_into(tables_, k, g_init_, {}, 0.0, expm1_g_, slice);
        std::copy(slice.a.begin(), slice.a.end(), a_quiet_.begin() + k * (last + 1) + k);
        compute_drift_into(tables_, k, g_init_, {}, tables_.kappa(k), expm1_g_, slice);
        std::copy(slice.a.begin(), slice.a.end(), a_news_.begin() + k * (last + 1) + k);
    }
}

std::optional<std::size_t> ForwardFields::row_of(std::size_t node) const {
    const auto it = std::lower_bound(row_nodes.begin(), row_nodes.end(), node);
    if (it != row_nodes.end() && *it == node) return static_cast<std::size_t>(it - row_nodes.begin());
    return std::nullopt;
}

double PathState::survival(std::size_t k) const {
    if (recovery) return recovery->xi[k];
    return default_outcome.dead_at(k) ? 0.0 : 1.0;
}

void draw_increments_into(const TimeGrid& grid, std::size_t factors, Rng& rng, BrownianIncrements& out) {
    const std::size_t steps = grid.last();
    out.factors = factors;
    out.values.resize(steps * factors);
    for (std::size_t k = 0; k < steps; ++k) {
        const double sd = std::sqrt(grid.width(k));
        for (std::size_t f = 0; f < factors; ++f) out.values[k * factors + f] = sd * rng.normal();
    }
}

BrownianIncrements draw_increments(const TimeGrid& grid, std::size_t factors, Rng& rng) {
    BrownianIncrements out;
    draw_increments_into(grid, factors, rng, out);
    return out;
}

namespace {

struct StepWorkspace {
    DriftSlice slice;
    std::vector<ActiveAtom> atoms;
    std::vector<double> f_row;
    std::vector<double> g_row;
};

void collect_active(const MeasureRealization& real, std::size_t k, std::vector<ActiveAtom>& out) {
    out.clear();
    for (const Mark& m : real.marks) {
        if (!m.priced() || m.announce_node > k || m.tau_node <= k) continue;
        out.push_back({m.tau_node, static_cast<double>(m.weight)});
    }
    if (out.size() < 2) return;
    std::sort(out.begin(), out.end(), [](const ActiveAtom& a, const ActiveAtom& b) { return a.node < b.node; });
    std::size_t w = 0;
    for (std::size_t r = 1; r < out.size(); ++r) {
        if (out[r].node == out[w].node) out[w].weight += out[r].weight;
        else out[++w] = out[r];
    }
    out.resize(w + 1);
}

}  // namespace

void simulate_forward_fields_into(const SimContext& ctx, const MeasureRealization& real,
                                  const BrownianIncrements& dW, const RowSelection& rows, ForwardFields& out) {
    thread_local StepWorkspace ws;
    const Scenario& sc = ctx.scenario();
    const DriftTables& tables = ctx.tables();
    const TimeGrid& grid = sc.grid;
    const std::size_t last = grid.last();
    const std::size_t width = last + 1;
    const std::size_t n = tables.factors();
    const double drift_shift = sc.perturbation.shift(ConditionBreak::Drift);
    const bool frozen_g = ctx.g_frozen();
    const bool no_vol = tables.b_zero() && tables.beta_zero();

    out.width = width;
    out.row_nodes.clear();
    if (rows.all) {
        for (std::size_t k = 0; k <= last; ++k) out.row_nodes.push_back(k);
    } else {
        out.row_nodes = rows.nodes;
        std::sort(out.row_nodes.begin(), out.row_nodes.end());
        out.row_nodes.erase(std::unique(out.row_nodes.begin(), out.row_nodes.end()), out.row_nodes.end());
    }
    out.f_rows.resize(out.row_nodes.size() * width);
    out.g_rows.resize(out.row_nodes.size() * width);
    out.f_diag.resize(width);
    out.g_diag.resize(width);
    out.g_announce.assign(real.marks.size(), 0.0);

    ws.f_row = ctx.f_init();
    ws.g_row = ctx.g_init();
    std::size_t next_row = 0;
    std::size_t counted = 0;

    for (std::size_t k = 0; k <= last; ++k) {
        if (next_row < out.row_nodes.size() && out.row_nodes[next_row] == k) {
            std::copy(ws.f_row.begin(), ws.f_row.end(), out.f_rows.begin() + next_row * width);
            std::copy(ws.g_row.begin(), ws.g_row.end(), out.g_rows.begin() + next_row * width);
            ++next_row;
        }
        out.f_diag[k] = ws.f_row[k];
        out.g_diag[k] = ws.g_row[k];
        for (std::size_t m = 0; m < real.marks.size(); ++m) {
            if (real.marks[m].announce_node == k) out.g_announce[m] = ws.g_row[real.marks[m].tau_node];
        }
        if (k == last) break;

        double kappa_eff = tables.kappa(k);
        if (kappa_eff > 0.0 && tables.max_announcements() > 0) {
            while (counted < real.marks.size() && real.marks[counted].announce_node <= k) ++counted;
            if (counted >= tables.max_announcements()) kappa_eff = 0.0;
        }
        const double d = grid.width(k);
        const bool any_drift = !no_vol || kappa_eff > 0.0 || drift_shift != 0.0;
        if (!any_drift) continue;

        const double* a_row;
        if (frozen_g) {
            a_row = ctx.frozen_drift(k, kappa_eff > 0.0);
        } else {
            collect_active(real, k, ws.atoms);
            compute_drift_into(tables, k, ws.g_row, ws.atoms, kappa_eff, {}, ws.slice);
            a_row = ws.slice.a.data();
        }
        const auto w = dW.step(k);
        double check = 0.0;
        if (tables.b_zero()) {
            for (std::size_t i = k + 1; i < last; ++i) {
                ws.f_row[i] += (a_row[i - k] + drift_shift) * d;
                check += ws.f_row[i];
            }
        } else {
            for (std::size_t i = k + 1; i < last; ++i) {
                const double* b = tables.b(k, i);
                double x = ws.f_row[i] + (a_row[i - k] + drift_shift) * d;
                for (std::size_t f = 0; f < n; ++f) x += b[f] * w[f];
                ws.f_row[i] = x;
                check += x;
            }
        }
        if (!frozen_g) {
            for (std::size_t i = k + 1; i <= last; ++i) {
                const double* beta = tables.beta(k, i);
                double x = ws.g_row[i];
                for (std::size_t f = 0; f < n; ++f) x += beta[f] * w[f];
                ws.g_row[i] = x;
            }
            for (const auto& [node, alpha] : ws.slice.alpha) {
                ws.g_row[node] += alpha * d;
                check += ws.g_row[node];
            }
            check += ws.g_row[k + 1] + ws.g_row[last];
        }
        if (!std::isfinite(check)) {
            throw Error(ErrorCode::NonFiniteField, fmt::format("field not finite after step {}", k));
        }
    }
}

ForwardFields simulate_forward_fields(const SimContext& ctx, const MeasureRealization& real,
                                      const BrownianIncrements& dW, const RowSelection& rows) {
    ForwardFields out;
    simulate_forward_fields_into(ctx, real, dW, rows, out);
    return out;
}

DefaultOutcome simulate_default(const Scenario& spec, const MeasureRealization& real, const ForwardFields& fields,
                                Rng& rng) {
    DefaultOutcome out;
    const TimeGrid& grid = spec.grid;
    const std::size_t last = grid.last();
    const double jump_shift = spec.perturbation.shift(ConditionBreak::JumpProbability);

    const double threshold = rng.exponential();
    std::vector<double> uniforms(real.marks.size());
    for (double& u : uniforms) u = rng.uniform();

    // node -> first mark landing there
    std::vector<std::size_t> first_mark(last + 1, kNoNode);
    std::vector<double> weight(last + 1, 0.0);
    for (std::size_t m = 0; m < real.marks.size(); ++m) {
        const Mark& mark = real.marks[m];
        if (!mark.priced()) continue;
        if (first_mark[mark.tau_node] == kNoNode) first_mark[mark.tau_node] = m;
        weight[mark.tau_node] += mark.weight;
    }

    double cumulative = 0.0;
    for (std::size_t k = 0; k < last; ++k) {
        const double h = spec.default_model.intensity(fields.f_diag[k]);
        const double d = grid.width(k);
        if (h > 0.0 && cumulative + h * d >= threshold) {
            out.time = grid[k] + (threshold - cumulative) / h;
            out.node = k + 1;
            out.cause = DefaultCause::Intensity;
            return out;
        }
        cumulative += h * d;
        const std::size_t j = k + 1;
        if (first_mark[j] == kNoNode) continue;
        AtomEvent ev;
        ev.node = j;
        ev.weight = weight[j];
        ev.g = fields.g_diag[j];
        ev.expected_loss = jump_probability(ev.g, ev.weight);
        ev.prob_used = std::clamp(ev.expected_loss + jump_shift, 0.0, 1.0);
        ev.from_time_zero = real.marks[first_mark[j]].sigma == 0.0;
        const bool hit = uniforms[first_mark[j]] < ev.prob_used;
        ev.realized_loss = hit ? 1.0 : 0.0;
        out.atom_events.push_back(ev);
        if (hit) {
            out.time = grid[j];
            out.node = j;
            out.cause = DefaultCause::Atom;
            return out;
        }
    }
    return out;
}

void fill_numeraire(const Scenario& spec, PathState& path) {
    const TimeGrid& grid = spec.grid;
    const std::size_t last = grid.last();
    const double rate_shift = spec.perturbation.shift(ConditionBreak::ShortRate);
    path.hazard.resize(last + 1);
    path.short_rate.resize(last + 1);
    path.numeraire.resize(last + 1);
    path.numeraire[0] = 1.0;
    for (std::size_t k = 0; k <= last; ++k) {
        const double f = path.fields.f_diag[k];
        path.hazard[k] = spec.credit_intensity(f);
        path.short_rate[k] = pin_short_rate(f, path.hazard[k]) + rate_shift;
        if (k < last) path.numeraire[k + 1] = path.numeraire[k] * std::exp(path.short_rate[k] * grid.width(k));
    }
}

namespace {

DefaultOutcome outcome_from_recovery(const Scenario& spec, const MeasureRealization& real,
                                     const ForwardFields& fields, const RecoveryPath& rec) {
    DefaultOutcome out;
    const TimeGrid& grid = spec.grid;
    if (std::isfinite(rec.total_loss_time)) {
        out.time = rec.total_loss_time;
        out.node = std::min(grid.ceil_index(out.time), grid.last());
        out.cause = DefaultCause::TotalLoss;
    }
    double xi = 1.0;
    std::size_t e = 0;
    while (e < rec.events.size()) {
        if (!rec.events[e].at_atom) {
            xi *= 1.0 - rec.events[e].loss;
            ++e;
            continue;
        }
        // group every atom event at this node
        const std::size_t node = rec.events[e].node;
        const double before = xi;
        double weight = 0.0;
        double kept = 1.0;
        bool from_zero = false;
        std::size_t r = e;
        for (; r < rec.events.size() && rec.events[r].at_atom && rec.events[r].node == node; ++r) {
            kept *= 1.0 - rec.events[r].loss;
            weight += 1.0;
            from_zero = from_zero || real.marks[rec.events[r].mark].sigma == 0.0;
        }
        xi *= kept;
        if (before > 0.0) {
            AtomEvent ev;
            ev.node = node;
            ev.weight = weight;
            ev.g = fields.g_diag[node];
            ev.expected_loss = jump_probability(ev.g, weight);
            ev.prob_used = ev.expected_loss;
            ev.realized_loss = 1.0 - kept;
            ev.from_time_zero = from_zero;
            out.atom_events.push_back(ev);
        }
        e = r;
    }
    return out;
}

}  // namespace

void simulate_path_into(const SimContext& ctx, std::uint64_t path_index, const RowSelection& rows, PathState& out) {
    const Scenario& sc = ctx.scenario();
    const std::uint64_t seed = sc.run.master_seed;
    out.index = path_index;
    out.master_seed = seed;

    Rng announce_rng(seed, path_index, Stream::Announcements);
    const auto raw = draw_announcements(sc.risky, announce_rng);
    out.announcements = snap_marks(raw, sc.grid);

    const std::size_t n = ctx.tables().factors();
    if (ctx.tables().b_zero() && ctx.tables().beta_zero()) {
        out.increments.factors = n;
        out.increments.values.assign(sc.grid.last() * n, 0.0);
    } else {
        Rng brownian_rng(seed, path_index, Stream::Brownian);
        draw_increments_into(sc.grid, n, brownian_rng, out.increments);
    }

    simulate_forward_fields_into(ctx, out.announcements, out.increments, rows, out.fields);
    fill_numeraire(sc, out);

    if (sc.recovery) {
        Rng recovery_rng(seed, path_index, Stream::Recovery);
        out.recovery = recovery_path(*sc.recovery, out.announcements, sc.grid, recovery_rng);
        out.default_outcome = outcome_from_recovery(sc, out.announcements, out.fields, *out.recovery);
    } else {
        out.recovery.reset();
        Rng default_rng(seed, path_index, Stream::Default);
        out.default_outcome = simulate_default(sc, out.announcements, out.fields, default_rng);
    }
}

PathState simulate_path(const SimContext& ctx, std::uint64_t path_index, const RowSelection& rows) {
    PathState out;
    simulate_path_into(ctx, path_index, rows, out);
    return out;
}

namespace {

/// Prices P(t_k, T_j), j = k..last, for stored row r.
void price_row(const Scenario& spec, const PathState& path, std::size_t r, std::vector<double>& atom_g,
               std::vector<double>& out) {
    const std::size_t last = spec.grid.last();
    const ForwardFields& ff = path.fields;
    const std::size_t k = ff.row_nodes[r];
    const auto f = ff.f_row(r);
    const auto g = ff.g_row(r);
    atom_g.assign(last + 1, 0.0);
    for (const Mark& m : path.announcements.marks) {
        if (m.priced() && m.announce_node <= k && m.tau_node > k) atom_g[m.tau_node] += m.weight * g[m.tau_node];
    }
    const double alive = path.survival(k);
    out.assign(last - k + 1, 0.0);
    if (alive == 0.0) return;
    double expo = 0.0;
    out[0] = alive;
    for (std::size_t j = k + 1; j <= last; ++j) {
        expo += f[j - 1] * spec.grid.width(j - 1) + atom_g[j];
        out[j - k] = alive * std::exp(-expo);
    }
}

}  // namespace

BondSurface bond_surface(const Scenario& spec, const PathState& path) {
    BondSurface s;
    s.last_node = spec.grid.last();
    std::vector<double> atom_g;
    for (std::size_t r = 0; r < path.fields.row_nodes.size(); ++r) {
        const std::size_t k = path.fields.row_nodes[r];
        std::vector<double> p;
        price_row(spec, path, r, atom_g, p);
        std::vector<double> d(p.size());
        for (std::size_t j = 0; j < p.size(); ++j) d[j] = p[j] / path.numeraire[k];
        s.t_nodes.push_back(k);
        s.prices.push_back(std::move(p));
        s.discounted.push_back(std::move(d));
    }
    return s;
}

std::vector<double> initial_prices(const Scenario& spec) {
    const TimeGrid& grid = spec.grid;
    const std::size_t last = grid.last();
    const Curve g0 = spec.initial_g();
    std::vector<double> atom_g(last + 1, 0.0);
    if (spec.risky.kind == RiskyKind::DeterministicAtoms) {
        for (const auto& a : spec.risky.atoms) {
            const auto node = grid.find(a.date);
            if (!node) throw Error(ErrorCode::UnsnappedAtom, fmt::format("risky date {} is not a grid node", a.date));
            if (*node > 0) atom_g[*node] += a.weight * g0(grid[*node]);
        }
    }
    std::vector<double> out(last + 1);
    double expo = 0.0;
    out[0] = 1.0;
    for (std::size_t j = 1; j <= last; ++j) {
        expo += spec.fields.f0(grid[j - 1]) * grid.width(j - 1) + atom_g[j];
        out[j] = std::exp(-expo);
    }
    return out;
}

Mesh build_mesh(const Scenario& spec, std::size_t points_per_axis) {
    const TimeGrid& grid = spec.grid;
    const std::size_t last = grid.last();
    Mesh mesh;
    const std::size_t P = std::max<std::size_t>(points_per_axis, 2);
    for (std::size_t i = 0; i < P; ++i) {
        const double target = grid.horizon() * static_cast<double>(i) / static_cast<double>(P - 1);
        std::size_t node = std::min(grid.ceil_index(target), last);
        if (node > 0 && target - grid[node - 1] < grid[node] - target) --node;
        mesh.t_nodes.push_back(node);
    }
    mesh.T_nodes = mesh.t_nodes;
    if (spec.risky.kind == RiskyKind::DeterministicAtoms) {
        for (const auto& a : spec.risky.atoms) {
            if (const auto node = grid.find(a.date)) {
                mesh.T_nodes.push_back(*node);
                if (*node > 0) mesh.T_nodes.push_back(*node - 1);
            }
        }
    }
    for (auto* v : {&mesh.t_nodes, &mesh.T_nodes}) {
        std::sort(v->begin(), v->end());
        v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    for (std::size_t t : mesh.t_nodes) {
        for (std::size_t T : mesh.T_nodes) {
            if (T >= t) mesh.points.emplace_back(t, T);
        }
    }
    return mesh;
}

RunOptions run_options_from(const Scenario& spec) {
    RunOptions o;
    o.n_paths = spec.run.n_paths;
    o.master_seed = spec.run.master_seed;
    o.mesh_points = spec.run.mesh_points;
    return o;
}

unsigned default_workers() {
    if (const char* env = std::getenv("RISKYDATES_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

constexpr std::size_t kBatch = 256;

struct Accumulator {
    std::vector<double> sum_p, sq_p, sum_d, sq_d;
    std::vector<AtomStat> fixed;
    AtomStat random;
    std::vector<std::size_t> hist;
    std::vector<double> mu_bar;
    std::size_t n_ok = 0;
    std::vector<PathFailure> failures;

    void init(std::size_t points, std::size_t atoms, std::size_t bins, std::size_t t_rows) {
        sum_p.assign(points, 0.0);
        sq_p.assign(points, 0.0);
        sum_d.assign(points, 0.0);
        sq_d.assign(points, 0.0);
        fixed.assign(atoms, AtomStat{});
        random = AtomStat{};
        hist.assign(bins + 1, 0);
        mu_bar.assign(t_rows, 0.0);
    }
};

void add_atom(AtomStat& into, const AtomStat& from) {
    into.survivors += from.survivors;
    into.defaults += from.defaults;
    into.sum_expected += from.sum_expected;
    into.sum_expected_var += from.sum_expected_var;
    into.sum_realized += from.sum_realized;
    into.sum_realized_sq += from.sum_realized_sq;
    into.sum_g += from.sum_g;
}

void merge(Accumulator& into, const Accumulator& from) {
    for (std::size_t i = 0; i < into.sum_p.size(); ++i) {
        into.sum_p[i] += from.sum_p[i];
        into.sq_p[i] += from.sq_p[i];
        into.sum_d[i] += from.sum_d[i];
        into.sq_d[i] += from.sq_d[i];
    }
    for (std::size_t i = 0; i < into.fixed.size(); ++i) add_atom(into.fixed[i], from.fixed[i]);
    add_atom(into.random, from.random);
    for (std::size_t i = 0; i < into.hist.size(); ++i) into.hist[i] += from.hist[i];
    for (std::size_t i = 0; i < into.mu_bar.size(); ++i) into.mu_bar[i] += from.mu_bar[i];
    into.n_ok += from.n_ok;
    into.failures.insert(into.failures.end(), from.failures.begin(), from.failures.end());
}

Accumulator reduce(std::vector<Accumulator>& parts, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return std::move(parts[lo]);
    const std::size_t mid = lo + (hi - lo) / 2;
    Accumulator left = reduce(parts, lo, mid);
    Accumulator right = reduce(parts, mid, hi);
    merge(left, right);
    return left;
}

void record_atom(AtomStat& s, const AtomEvent& ev) {
    s.node = ev.node;
    s.survivors += 1;
    if (ev.realized_loss > 0.0) s.defaults += 1;
    s.sum_expected += ev.expected_loss;
    s.sum_expected_var += ev.expected_loss * (1.0 - ev.expected_loss);
    s.sum_realized += ev.realized_loss;
    s.sum_realized_sq += ev.realized_loss * ev.realized_loss;
    s.sum_g += ev.g;
}

}  // namespace

Ensemble run_scenario(const Scenario& spec, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    Ensemble ens;
    ens.n_paths = options.n_paths;
    ens.recovery = spec.recovery.has_value();
    ens.mesh = build_mesh(spec, options.mesh_points);
    const TimeGrid& grid = spec.grid;

    const auto target = initial_prices(spec);
    for (const auto& [t, T] : ens.mesh.points) {
        MeshStat s;
        s.t = grid[t];
        s.T = grid[T];
        s.t_node = t;
        s.T_node = T;
        s.target = target[T];
        ens.stats.push_back(s);
    }
    std::vector<std::size_t> fixed_nodes;
    if (spec.risky.kind == RiskyKind::DeterministicAtoms) {
        for (const auto& a : spec.risky.atoms) {
            if (const auto node = grid.find(a.date)) {
                if (std::find(fixed_nodes.begin(), fixed_nodes.end(), *node) == fixed_nodes.end()) {
                    fixed_nodes.push_back(*node);
                }
            }
        }
        std::sort(fixed_nodes.begin(), fixed_nodes.end());
    }
    const std::size_t bins = std::max<std::size_t>(options.hist_bins, 1);
    for (std::size_t b = 0; b <= bins; ++b) {
        ens.hist_edges.push_back(grid.horizon() * static_cast<double>(b) / static_cast<double>(bins));
    }

    RowSelection mesh_rows{false, ens.mesh.t_nodes};
    const RowSelection all_rows = RowSelection::every_row();
    const std::size_t retain = std::min(options.retain, options.n_paths);
    ens.retained.resize(retain);

    const std::size_t n_batches = (options.n_paths + kBatch - 1) / kBatch;
    std::vector<Accumulator> parts(n_batches);
    const SimContext ctx(spec);
    std::atomic<std::size_t> next_batch{0};

    auto work = [&]() {
        PathState path;
        std::vector<double> row_prices;
        std::vector<double> atom_g;
        while (true) {
            const std::size_t b = next_batch.fetch_add(1);
            if (b >= n_batches) break;
            Accumulator& acc = parts[b];
            acc.init(ens.stats.size(), fixed_nodes.size(), bins, ens.mesh.t_nodes.size());
            const std::size_t lo = b * kBatch;
            const std::size_t hi = std::min(options.n_paths, lo + kBatch);
            for (std::size_t p = lo; p < hi; ++p) {
                const bool keep = p < retain;
                try {
                    simulate_path_into(ctx, p, keep ? all_rows : mesh_rows, path);
                } catch (const Error& e) {
                    acc.failures.push_back({p, e.what()});
                    continue;
                }
                ++acc.n_ok;
                std::size_t point = 0;
                for (std::size_t ti = 0; ti < ens.mesh.t_nodes.size(); ++ti) {
                    const std::size_t k = ens.mesh.t_nodes[ti];
                    const std::size_t r = *path.fields.row_of(k);
                    price_row(spec, path, r, atom_g, row_prices);
                    const double x0 = path.numeraire[k];
                    while (point < ens.stats.size() && ens.stats[point].t_node == k) {
                        const MeshStat& s = ens.stats[point];
                        const double price = row_prices[s.T_node - k];
                        const double dp = price - s.target;
                        const double dd = price / x0 - s.target;
                        acc.sum_p[point] += dp;
                        acc.sq_p[point] += dp * dp;
                        acc.sum_d[point] += dd;
                        acc.sq_d[point] += dd * dd;
                        ++point;
                    }
                    double mu = 0.0;
                    for (const Mark& m : path.announcements.marks) {
                        if (m.tau_node <= k) mu += m.weight;
                    }
                    acc.mu_bar[ti] += mu;
                }
                for (const AtomEvent& ev : path.default_outcome.atom_events) {
                    const auto it = std::find(fixed_nodes.begin(), fixed_nodes.end(), ev.node);
                    if (ev.from_time_zero && it != fixed_nodes.end()) {
                        record_atom(acc.fixed[static_cast<std::size_t>(it - fixed_nodes.begin())], ev);
                    } else {
                        record_atom(acc.random, ev);
                    }
                }
                const double tau = path.default_outcome.time;
                if (std::isfinite(tau) && tau <= grid.horizon()) {
                    const auto bin = std::min(bins - 1, static_cast<std::size_t>(tau / grid.horizon() * bins));
                    ++acc.hist[bin];
                } else {
                    ++acc.hist[bins];
                }
                if (keep) ens.retained[p] = path;
            }
        }
    };

    unsigned workers = options.workers > 0 ? options.workers : default_workers();
    workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, std::max<std::size_t>(n_batches, 1))));
    ens.workers = workers;
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    Accumulator total;
    if (n_batches > 0) {
        total = reduce(parts, 0, n_batches);
    } else {
        total.init(ens.stats.size(), fixed_nodes.size(), bins, ens.mesh.t_nodes.size());
    }
    ens.n_ok = total.n_ok;
    ens.failures = std::move(total.failures);
    std::sort(ens.failures.begin(), ens.failures.end(),
              [](const PathFailure& a, const PathFailure& b) { return a.path < b.path; });
    const double n = static_cast<double>(total.n_ok);
    for (std::size_t i = 0; i < ens.stats.size(); ++i) {
        MeshStat& s = ens.stats[i];
        if (total.n_ok == 0) {
            s.mean_price = s.mean_discounted = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        s.mean_price = s.target + total.sum_p[i] / n;
        s.mean_discounted = s.target + total.sum_d[i] / n;
        if (total.n_ok > 1) {
            const double vp = std::max(0.0, (total.sq_p[i] - total.sum_p[i] * total.sum_p[i] / n) / (n - 1.0));
            const double vd = std::max(0.0, (total.sq_d[i] - total.sum_d[i] * total.sum_d[i] / n) / (n - 1.0));
            s.se_price = std::sqrt(vp / n);
            s.se_discounted = std::sqrt(vd / n);
        }
    }
    ens.fixed_atoms = std::move(total.fixed);
    for (std::size_t i = 0; i < fixed_nodes.size(); ++i) {
        ens.fixed_atoms[i].node = fixed_nodes[i];
        ens.fixed_atoms[i].time = grid[fixed_nodes[i]];
    }
    ens.random_atoms = total.random;
    ens.random_atoms.node = kNoNode;
    ens.hist_counts = std::move(total.hist);
    ens.mean_mu_bar.resize(ens.mesh.t_nodes.size());
    for (std::size_t i = 0; i < ens.mean_mu_bar.size(); ++i) {
        ens.mean_mu_bar[i] = total.n_ok > 0 ? total.mu_bar[i] / n : 0.0;
    }
    ens.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return ens;
}

}  // namespace riskydates
