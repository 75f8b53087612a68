#include "riskydates/drift_engine.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "riskydates/error.hpp"

namespace riskydates {

double DefaultModel::intensity(double f_tt) const {
    const double h = kind == Kind::Constant ? rate : rate * std::max(f_tt, 0.0);
    if (h > max_rate) {
        throw Error(ErrorCode::IntensityTooLarge, fmt::format("default intensity {} exceeds {}", h, max_rate));
    }
    if (!(h >= 0.0)) throw Error(ErrorCode::InvalidModel, fmt::format("default intensity {} is negative", h));
    return h;
}

DriftTables::DriftTables(const TimeGrid& grid, const ForwardFieldSpec& fields, const RiskyDateModel& risky)
    : grid_(grid),
      n_(fields.n_factors()),
      last_(grid.last()),
      b_((last_ + 1) * (last_ + 1) * n_, 0.0),
      beta_((last_ + 1) * (last_ + 1) * n_, 0.0),
      b_zero_(fields.b.is_zero()),
      beta_zero_(fields.beta.is_zero()),
      kappa_(last_ + 1, 0.0),
      mass_((last_ + 1) * (last_ + 1), 0.0),
      has_news_(false),
      cap_(risky.max_announcements) {
    if (fields.beta.factors() != n_) {
        throw Error(ErrorCode::InvalidModel, "b and beta must have the same number of factors");
    }
    for (std::size_t k = 0; k <= last_; ++k) {
        for (std::size_t i = k; i <= last_; ++i) {
            double* bk = &b_[(k * (last_ + 1) + i) * n_];
            double* betak = &beta_[(k * (last_ + 1) + i) * n_];
            fields.b.eval(grid[k], grid[i], std::span<double>(bk, n_));
            fields.beta.eval(grid[k], grid[i], std::span<double>(betak, n_));
            for (std::size_t f = 0; f < n_; ++f) {
                if (!std::isfinite(bk[f]) || !std::isfinite(betak[f])) {
                    throw Error(ErrorCode::NonFiniteVol,
                                fmt::format("volatility not finite at t={}, T={}", grid[k], grid[i]));
                }
            }
        }
    }
    if (risky.kind != RiskyKind::MarkedPointProcess) return;
    const double H = risky.horizon;
    for (std::size_t k = 0; k < last_; ++k) {
        const double s = grid[k];
        kappa_[k] = risky.rate(s);
        if (kappa_[k] > 0.0) has_news_ = true;
        if (k + 2 > last_) continue;
        double* row = &mass_[k * (last_ + 1)];
        row[k + 2] = risky.kernel.mass(s, s, grid[k + 2], H);
        for (std::size_t i = k + 3; i <= last_; ++i) row[i] = risky.kernel.mass(s, grid[i - 1], grid[i], H);
    }
}

double DriftSlice::alpha_at(std::size_t node) const {
    for (const auto& [n, v] : alpha) {
        if (n == node) return v;
    }
    return 0.0;
}

namespace {

inline double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t f = 0; f < n; ++f) s += x[f] * y[f];
    return s;
}

}  // namespace

void compute_drift_into(const DriftTables& tables, std::size_t k, std::span<const double> g_row,
                        std::span<const ActiveAtom> atoms, double kappa_eff,
                        std::span<const double> expm1_neg_g, DriftSlice& out) {
    const std::size_t last = tables.last();
    const std::size_t n = tables.factors();
    const TimeGrid& grid = tables.grid();
    out.t_node = k;
    out.a.assign(last - k, 0.0);
    out.alpha.clear();

    for (const auto& atom : atoms) {
        if (atom.node <= k || atom.node > last) {
            throw Error(ErrorCode::UnsnappedAtom,
                        fmt::format("atom node {} is not ahead of t-node {}", atom.node, k));
        }
    }

    double B[16];
    std::vector<double> B_heap;
    double* Bp = B;
    if (n > 16) {
        B_heap.assign(n, 0.0);
        Bp = B_heap.data();
    }
    std::fill(Bp, Bp + n, 0.0);

    const bool news = kappa_eff > 0.0;
    const bool vols = !(tables.b_zero() && tables.beta_zero());
    std::size_t next_atom = 0;

    for (std::size_t i = k; i < last; ++i) {
        const double d = grid.width(i);
        double a = 0.0;
        if (vols) {
            const double* b = tables.b(k, i);
            // (1/2|B + b d|^2 - 1/2|B|^2) / d
            double bb = 0.0;
            double Bb = 0.0;
            for (std::size_t f = 0; f < n; ++f) {
                Bb += Bp[f] * b[f];
                bb += b[f] * b[f];
            }
            a = Bb + 0.5 * d * bb;
            for (std::size_t f = 0; f < n; ++f) Bp[f] += b[f] * d;
        }
        if (news) {
            const double m = tables.news_mass(k, i + 1);
            if (m != 0.0) {
                const double e = expm1_neg_g.empty() ? std::expm1(-g_row[i + 1]) : expm1_neg_g[i + 1];
                a += kappa_eff * e * m / d;
            }
        }
        out.a[i - k] = a;

        while (next_atom < atoms.size() && atoms[next_atom].node == i + 1) {
            const double w = atoms[next_atom].weight;
            double alpha = 0.0;
            if (!tables.beta_zero()) {
                const double* beta = tables.beta(k, i + 1);
                alpha = dot(Bp, beta, n) + 0.5 * w * dot(beta, beta, n);
                for (std::size_t f = 0; f < n; ++f) Bp[f] += w * beta[f];
            }
            out.alpha.emplace_back(i + 1, alpha);
            ++next_atom;
        }
        if (!std::isfinite(a)) {
            throw Error(ErrorCode::NonFiniteVol, fmt::format("drift not finite at t-node {}, cell {}", k, i));
        }
    }
}

DriftSlice compute_drift(const DriftTables& tables, std::size_t k, std::span<const double> g_row,
                         std::span<const ActiveAtom> atoms, double kappa_eff, std::span<const double> expm1_neg_g) {
    DriftSlice out;
    compute_drift_into(tables, k, g_row, atoms, kappa_eff, expm1_neg_g, out);
    return out;
}

std::vector<ActiveAtom> active_atoms(const MeasureRealization& real, std::size_t k) {
    std::vector<ActiveAtom> out;
    for (const Mark& m : real.marks) {
        if (!m.priced() || m.announce_node > k || m.tau_node <= k) continue;
        out.push_back({m.tau_node, static_cast<double>(m.weight)});
    }
    std::sort(out.begin(), out.end(), [](const ActiveAtom& a, const ActiveAtom& b) { return a.node < b.node; });
    std::vector<ActiveAtom> merged;
    for (const auto& a : out) {
        if (!merged.empty() && merged.back().node == a.node) merged.back().weight += a.weight;
        else merged.push_back(a);
    }
    return merged;
}

double effective_kappa(const DriftTables& tables, const MeasureRealization& real, std::size_t k) {
    const double kappa = tables.kappa(k);
    if (kappa == 0.0 || tables.max_announcements() == 0) return kappa;
    std::size_t count = 0;
    for (const Mark& m : real.marks) {
        if (m.announce_node <= k) ++count;
    }
    return count < tables.max_announcements() ? kappa : 0.0;
}

DriftSlice compute_drift(const DriftTables& tables, const MeasureRealization& real, std::size_t k,
                         std::span<const double> g_row) {
    const auto atoms = active_atoms(real, k);
    return compute_drift(tables, k, g_row, atoms, effective_kappa(tables, real, k));
}

IntegratedTerms integrated_terms(const DriftTables& tables, std::size_t k, std::span<const double> g_row,
                                 std::span<const ActiveAtom> atoms, double kappa_eff, const DriftSlice& slice) {
    const std::size_t last = tables.last();
    const std::size_t n = tables.factors();
    const TimeGrid& grid = tables.grid();
    const std::size_t len = last - k + 1;
    IntegratedTerms out;
    out.abar.assign(len, 0.0);
    out.alphabar.assign(len, 0.0);
    out.half_norm.assign(len, 0.0);
    out.news.assign(len, 0.0);

    std::vector<double> B(n, 0.0);
    std::size_t next_atom = 0;
    for (std::size_t j = k + 1; j <= last; ++j) {
        const std::size_t i = j - 1;
        const double d = grid.width(i);
        const double* b = tables.b(k, i);
        for (std::size_t f = 0; f < n; ++f) B[f] += b[f] * d;
        double abar = out.abar[i - k] + slice.a[i - k] * d;
        double alphabar = out.alphabar[i - k];
        double news = out.news[i - k];
        if (kappa_eff > 0.0) news += kappa_eff * std::expm1(-g_row[j]) * tables.news_mass(k, j);
        while (next_atom < atoms.size() && atoms[next_atom].node == j) {
            const double w = atoms[next_atom].weight;
            const double* beta = tables.beta(k, j);
            for (std::size_t f = 0; f < n; ++f) B[f] += w * beta[f];
            alphabar += slice.alpha_at(j) * w;
            ++next_atom;
        }
        out.abar[j - k] = abar;
        out.alphabar[j - k] = alphabar;
        out.news[j - k] = news;
        out.half_norm[j - k] = 0.5 * dot(B.data(), B.data(), n);
    }
    return out;
}

double pointwise_a(const ForwardFieldSpec& fields, const RiskyDateModel& risky, double t, double T,
                   std::span<const AtomAt> atoms, double g_tT, double kappa_eff) {
    if (T < t) return 0.0;
    const std::size_t n = fields.n_factors();
    std::vector<double> bbar(n), b(n), beta(n);
    fields.b.integral(t, T, bbar);
    fields.b.eval(t, T, b);
    for (const auto& atom : atoms) {
        if (atom.date <= t || atom.date > T) continue;
        fields.beta.eval(t, atom.date, beta);
        for (std::size_t f = 0; f < n; ++f) bbar[f] += atom.weight * beta[f];
    }
    double a = dot(bbar.data(), b.data(), n);
    if (kappa_eff > 0.0 && T > t) {
        a += std::expm1(-g_tT) * kappa_eff * risky.kernel.density(t, T, risky.horizon);
    }
    return a;
}

double pointwise_alpha(const ForwardFieldSpec& fields, double t, double date, double weight,
                       std::span<const AtomAt> atoms) {
    const std::size_t n = fields.n_factors();
    std::vector<double> bbar(n), beta(n), other(n);
    fields.b.integral(t, date, bbar);
    for (const auto& atom : atoms) {
        if (atom.date <= t || atom.date >= date) continue;
        fields.beta.eval(t, atom.date, other);
        for (std::size_t f = 0; f < n; ++f) bbar[f] += atom.weight * other[f];
    }
    fields.beta.eval(t, date, beta);
    return dot(bbar.data(), beta.data(), n) + 0.5 * weight * dot(beta.data(), beta.data(), n);
}

double pin_short_rate(double f_tt, double h) {
    const double r = f_tt - h;
    if (!std::isfinite(r)) throw Error(ErrorCode::NonFiniteRate, fmt::format("short rate {} - {} not finite", f_tt, h));
    return r;
}

double jump_probability(double g, double w) {
    const double p = -std::expm1(-g * w);
    if (p < 0.0) {
        throw Error(ErrorCode::NegativeJumpProbability, fmt::format("g = {} at an atom gives probability {}", g, p));
    }
    if (!std::isfinite(p)) throw Error(ErrorCode::NonFiniteField, fmt::format("g = {} at an atom", g));
    return p;
}

double psi_eval(double g_tt, double dmu_bar, double y, int z) {
    if (y == 0.0 || z == 1) return 0.0;
    return std::exp(g_tt * dmu_bar) * std::expm1(-y) * (1.0 - z);
}

}  // namespace riskydates
