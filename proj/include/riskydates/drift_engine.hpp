#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "riskydates/model_core.hpp"
#include "riskydates/risky_measure.hpp"

namespace riskydates {

/// Default intensity h. Risky-date jump probabilities are not part of it:
/// they follow from the g field at each realized atom.
struct DefaultModel {
    enum class Kind { Constant, Proportional };

    Kind kind = Kind::Constant;
    /// Constant: h = rate. Proportional: h = rate * max(f(t,t), 0).
    double rate = 0.0;
    double max_rate = 1e4;

    /// Throws IntensityTooLarge above max_rate.
    double intensity(double f_tt) const;
    bool is_zero() const { return rate == 0.0; }
};

/// Grid samples shared by every path of a run: vols on (t-node, T-node),
/// kappa at nodes and the snapped kernel masses.
class DriftTables {
public:
    DriftTables(const TimeGrid& grid, const ForwardFieldSpec& fields, const RiskyDateModel& risky);

    const TimeGrid& grid() const { return grid_; }
    std::size_t factors() const { return n_; }
    std::size_t last() const { return last_; }

    const double* b(std::size_t k, std::size_t i) const { return &b_[(k * (last_ + 1) + i) * n_]; }
    const double* beta(std::size_t k, std::size_t i) const { return &beta_[(k * (last_ + 1) + i) * n_]; }
    bool b_zero() const { return b_zero_; }
    bool beta_zero() const { return beta_zero_; }

    double kappa(std::size_t k) const { return kappa_[k]; }
    /// Kernel mass assigned to node i by an announcement in (t_k, t_{k+1}]:
    /// zero at k+1, mass of (t_k, t_{k+2}] at k+2, cell masses beyond.
    double news_mass(std::size_t k, std::size_t i) const { return mass_[k * (last_ + 1) + i]; }
    bool has_news() const { return has_news_; }
    unsigned max_announcements() const { return cap_; }

private:
    TimeGrid grid_;
    std::size_t n_;
    std::size_t last_;
    std::vector<double> b_;
    std::vector<double> beta_;
    bool b_zero_;
    bool beta_zero_;
    std::vector<double> kappa_;
    std::vector<double> mass_;
    bool has_news_;
    unsigned cap_;
};

struct ActiveAtom {
    std::size_t node = 0;
    double weight = 0.0;
};

/// Drift at t-node k. a[i - k] is the drift of the forward cell [T_i, T_{i+1})
/// for i = k..last-1; alpha is sparse over the atom nodes.
struct DriftSlice {
    std::size_t t_node = 0;
    std::vector<double> a;
    std::vector<std::pair<std::size_t, double>> alpha;

    double alpha_at(std::size_t node) const;
};

/// Grid form of the drift condition: for every j >= k
///   sum_{i<j} a(k,i) d_i + sum_{atoms <= T_j} alpha w = 1/2 |B(k,j)|^2 + N(k,j)
/// where B sums b d over cells and w beta over atoms, and N is the news compensator
/// kappa_eff sum_{k < i <= j} (e^{-g(k,i)} - 1) news_mass(k, i).
/// `g_row` is indexed by node; entries below k are ignored. `expm1_neg_g`, when given,
/// replaces expm1(-g(k,i)) (a frozen g row).
DriftSlice compute_drift(const DriftTables& tables, std::size_t k, std::span<const double> g_row,
                         std::span<const ActiveAtom> atoms, double kappa_eff,
                         std::span<const double> expm1_neg_g = {});
void compute_drift_into(const DriftTables& tables, std::size_t k, std::span<const double> g_row,
                        std::span<const ActiveAtom> atoms, double kappa_eff,
                        std::span<const double> expm1_neg_g, DriftSlice& out);

/// Atoms of mu_{t_k} still ahead of t_k, merged by node.
std::vector<ActiveAtom> active_atoms(const MeasureRealization& real, std::size_t k);
/// kappa(t_k) unless the announcement cap was reached by t_k.
double effective_kappa(const DriftTables& tables, const MeasureRealization& real, std::size_t k);

/// Same as above with atoms and kappa_eff taken from the realization so far.
DriftSlice compute_drift(const DriftTables& tables, const MeasureRealization& real, std::size_t k,
                         std::span<const double> g_row);

/// Pieces of the integrated identity at t-node k for every T-node j >= k.
struct IntegratedTerms {
    std::vector<double> abar;
    std::vector<double> alphabar;
    std::vector<double> half_norm;
    std::vector<double> news;
};

IntegratedTerms integrated_terms(const DriftTables& tables, std::size_t k, std::span<const double> g_row,
                                 std::span<const ActiveAtom> atoms, double kappa_eff, const DriftSlice& slice);

struct AtomAt {
    double date = 0.0;
    double weight = 0.0;
};

/// Continuous-maturity drift a(t, T) from the closed-form vol integrals.
double pointwise_a(const ForwardFieldSpec& fields, const RiskyDateModel& risky, double t, double T,
                   std::span<const AtomAt> atoms, double g_tT, double kappa_eff);
/// alpha(t, u*) for the atom at `date` with multiplicity w.
double pointwise_alpha(const ForwardFieldSpec& fields, double t, double date, double weight,
                       std::span<const AtomAt> atoms);

/// r = f(t,t) - h.
double pin_short_rate(double f_tt, double h);
/// 1 - exp(-g w); NegativeJumpProbability when negative.
double jump_probability(double g, double w);
/// e^{g dmu}(e^{-y} - 1)(1 - z).
double psi_eval(double g_tt, double dmu_bar, double y, int z);

}  // namespace riskydates
