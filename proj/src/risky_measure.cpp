#include "riskydates/risky_measure.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "riskydates/error.hpp"
#include "riskydates/quadrature.hpp"

namespace riskydates {

double AnnouncementRate::operator()(double t) const { return std::max(0.0, intercept + slope * t); }

double AnnouncementRate::bound(double horizon) const {
    return std::max((*this)(0.0), (*this)(horizon));
}

DateKernel DateKernel::uniform() { return DateKernel(); }

DateKernel DateKernel::exponential_delay(double mean) {
    DateKernel k;
    k.kind_ = Kind::ExponentialDelay;
    k.mean_ = mean;
    return k;
}

DateKernel DateKernel::custom(std::function<double(double, double)> density) {
    DateKernel k;
    k.kind_ = Kind::Custom;
    k.density_ = std::move(density);
    return k;
}

double DateKernel::density(double s, double u, double horizon) const {
    if (u <= s || u > horizon) return 0.0;
    const double len = horizon - s;
    switch (kind_) {
        case Kind::Uniform:
            return 1.0 / len;
        case Kind::ExponentialDelay: {
            const double lam = 1.0 / mean_;
            return lam * std::exp(-lam * (u - s)) / -std::expm1(-lam * len);
        }
        case Kind::Custom:
            return density_(s, u);
    }
    return 0.0;
}

double DateKernel::mass(double s, double a, double b, double horizon) const {
    a = std::max(a, s);
    b = std::min(b, horizon);
    if (b <= a) return 0.0;
    const double len = horizon - s;
    switch (kind_) {
        case Kind::Uniform:
            return (b - a) / len;
        case Kind::ExponentialDelay: {
            const double lam = 1.0 / mean_;
            const double total = -std::expm1(-lam * len);
            // e^{-lam(a-s)} - e^{-lam(b-s)}
            return std::exp(-lam * (a - s)) * -std::expm1(-lam * (b - a)) / total;
        }
        case Kind::Custom: {
            const int panels = std::max(4, static_cast<int>(64 * (b - a) / len));
            return integrate([&](double u) { return density_(s, u); }, a, b, panels);
        }
    }
    return 0.0;
}

double DateKernel::quantile(double s, double p, double horizon) const {
    const double len = horizon - s;
    switch (kind_) {
        case Kind::Uniform:
            return s + p * len;
        case Kind::ExponentialDelay: {
            const double lam = 1.0 / mean_;
            return s - std::log1p(p * std::expm1(-lam * len)) / lam;
        }
        case Kind::Custom: {
            double lo = s;
            double hi = horizon;
            for (int it = 0; it < 200 && hi - lo > 1e-14 * horizon; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mass(s, s, mid, horizon) < p) lo = mid;
                else hi = mid;
            }
            return hi;
        }
    }
    return horizon;
}

std::vector<Mark> MeasureRealization::known_at(double t) const {
    std::vector<Mark> out;
    for (const Mark& m : marks) {
        if (m.sigma <= t) out.push_back(m);
    }
    return out;
}

std::vector<RawMark> draw_announcements(const RiskyDateModel& model, Rng& rng) {
    if (!model.j_atoms.empty()) {
        throw Error(ErrorCode::PredictableAnnouncement,
                    "J atoms are checker-only; strip them before simulating");
    }
    std::vector<RawMark> out;
    if (model.kind == RiskyKind::DeterministicAtoms) {
        for (const auto& a : model.atoms) out.push_back({0.0, a.date, a.weight});
        return out;
    }
    const double bound = model.rate.bound(model.horizon);
    if (!(bound > 0.0)) return out;
    double s = 0.0;
    while (true) {
        s += rng.exponential() / bound;
        if (s >= model.horizon) break;
        const double accept = rng.uniform();
        if (accept * bound > model.rate(s)) continue;
        const double p = rng.uniform();
        if (model.kernel.kind() == DateKernel::Kind::Custom &&
            !(model.kernel.mass(s, s, model.horizon, model.horizon) > 0.0)) {
            throw Error(ErrorCode::EmptySupport, fmt::format("q({}, .) has no mass while kappa > 0", s));
        }
        const double u = std::clamp(model.kernel.quantile(s, p, model.horizon), s, model.horizon);
        out.push_back({s, u, 1});
        if (model.max_announcements > 0 && out.size() >= model.max_announcements) break;
    }
    return out;
}

MeasureRealization snap_marks(std::span<const RawMark> raw, const TimeGrid& grid) {
    MeasureRealization real;
    real.marks.reserve(raw.size());
    const std::size_t last = grid.last();
    for (const RawMark& r : raw) {
        Mark m;
        m.sigma = r.sigma;
        m.weight = r.weight;
        m.announce_node = std::min(grid.ceil_index(r.sigma), last);
        if (r.sigma == 0.0) {
            // announced at time zero: the risky date must already be a node
            const auto node = grid.find(r.u);
            if (!node) {
                throw Error(ErrorCode::UnsnappedAtom, fmt::format("risky date {} is not a grid node", r.u));
            }
            m.tau_node = *node;
        } else {
            m.tau_node = std::min(std::max(grid.ceil_index(r.u), m.announce_node + 1), last);
        }
        m.tau = grid[m.tau_node];
        real.marks.push_back(m);
    }
    std::stable_sort(real.marks.begin(), real.marks.end(),
                     [](const Mark& a, const Mark& b) { return a.sigma < b.sigma; });
    return real;
}

MeasureRealization simulate_announcements(const RiskyDateModel& model, const TimeGrid& grid,
                                          std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    const auto raw = draw_announcements(model, rng);
    return snap_marks(raw, grid);
}

std::size_t mu_bar(const MeasureRealization& real, double t) {
    std::size_t n = 0;
    for (const Mark& m : real.marks) {
        if (m.tau <= t) n += m.weight;
    }
    return n;
}

std::size_t mu_bar_jump(const MeasureRealization& real, double t, double tol) {
    std::size_t n = 0;
    for (const Mark& m : real.marks) {
        if (std::abs(m.tau - t) <= tol) n += m.weight;
    }
    return n;
}

double compensator_density(const RiskyDateModel& model, double t, double u) {
    if (model.kind != RiskyKind::MarkedPointProcess || u <= t) return 0.0;
    return model.rate(t) * model.kernel.density(t, u, model.horizon);
}

std::vector<KernelAtom> compensator_atoms(const RiskyDateModel& model, double t) {
    std::vector<KernelAtom> out;
    if (model.kind == RiskyKind::DeterministicAtoms && t == 0.0) {
        for (const auto& a : model.atoms) out.push_back({a.date, static_cast<double>(a.weight)});
    }
    return out;
}

const std::vector<JAtom>& j_atoms(const RiskyDateModel& model) { return model.j_atoms; }

void validate_risky_model(const RiskyDateModel& model, const TimeGrid& grid) {
    const double tol = grid.tolerance();
    for (const auto& a : model.atoms) {
        if (!(a.date > tol) || a.date > model.horizon + tol) {
            throw Error(ErrorCode::NodeOutOfRange,
                        fmt::format("risky date {} outside (0, {}]", a.date, model.horizon));
        }
        if (a.weight == 0) throw Error(ErrorCode::InvalidModel, "atom weight must be positive");
        if (!grid.find(a.date)) {
            throw Error(ErrorCode::UnsnappedAtom, fmt::format("risky date {} is not a grid node", a.date));
        }
    }
    for (const auto& j : model.j_atoms) {
        if (j.time < -tol || j.time > model.horizon + tol) {
            throw Error(ErrorCode::NodeOutOfRange, fmt::format("J atom time {} outside [0, {}]", j.time, model.horizon));
        }
        if (!(j.mass >= 0.0) || j.mass > 1.0) {
            throw Error(ErrorCode::InvalidModel, fmt::format("J atom mass {} outside [0, 1]", j.mass));
        }
        double total = 0.0;
        for (const auto& k : j.kernel) {
            if (!(k.date > j.time) || k.date > model.horizon + tol) {
                throw Error(ErrorCode::NodeOutOfRange,
                            fmt::format("J kernel date {} outside ({}, {}]", k.date, j.time, model.horizon));
            }
            total += k.mass;
        }
        if (!j.kernel.empty() && std::abs(total - 1.0) > 1e-8) {
            throw Error(ErrorCode::KernelNotNormalized, fmt::format("J kernel at {} has mass {}", j.time, total));
        }
        for (const auto& a : model.atoms) {
            if (std::abs(a.date - j.time) <= tol) {
                throw Error(ErrorCode::InvalidModel,
                            fmt::format("news at {} coincides with a risky date", j.time));
            }
        }
    }
    if (model.kind != RiskyKind::MarkedPointProcess) return;
    if (model.rate.intercept < 0.0 || model.rate(model.horizon) < 0.0 ||
        !std::isfinite(model.rate.bound(model.horizon))) {
        throw Error(ErrorCode::InvalidModel, "announcement rate must be finite and non-negative");
    }
    if (model.kernel.kind() == DateKernel::Kind::ExponentialDelay && !(model.kernel.mean_delay() > 0.0)) {
        throw Error(ErrorCode::InvalidModel, "exponential delay needs a positive mean");
    }
    for (std::size_t k = 0; k < grid.last(); ++k) {
        const double s = grid[k];
        if (model.rate(s) <= 0.0) continue;
        const double total = model.kernel.mass(s, s, model.horizon, model.horizon);
        if (total == 0.0) {
            throw Error(ErrorCode::EmptySupport, fmt::format("q({}, .) has no mass while kappa > 0", s));
        }
        if (!(std::abs(total - 1.0) <= 1e-8)) {
            throw Error(ErrorCode::KernelNotNormalized, fmt::format("q({}, .) integrates to {}", s, total));
        }
    }
}

}  // namespace riskydates
