#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "riskydates/model_core.hpp"
#include "riskydates/rng.hpp"

namespace riskydates {

/// Announcement intensity kappa(t) = max(0, intercept + slope t).
struct AnnouncementRate {
    double intercept = 0.0;
    double slope = 0.0;

    double operator()(double t) const;
    /// sup of kappa over [0, horizon]; used as the thinning bound.
    double bound(double horizon) const;
};

/// Risky-date kernel q(s, .) on (s, horizon].
class DateKernel {
public:
    enum class Kind { Uniform, ExponentialDelay, Custom };

    DateKernel() = default;
    static DateKernel uniform();
    /// Exponential delay with the given mean, truncated to (s, horizon].
    static DateKernel exponential_delay(double mean);
    static DateKernel custom(std::function<double(double s, double u)> density);

    Kind kind() const { return kind_; }
    double mean_delay() const { return mean_; }

    double density(double s, double u, double horizon) const;
    /// Mass of (a, b] under q(s, .).
    double mass(double s, double a, double b, double horizon) const;
    /// u with mass(s, s, u) = p.
    double quantile(double s, double p, double horizon) const;

private:
    Kind kind_ = Kind::Uniform;
    double mean_ = 0.0;
    std::function<double(double, double)> density_;
};

struct DeterministicAtom {
    double date = 0.0;
    unsigned weight = 1;
};

struct KernelAtom {
    double date = 0.0;
    double mass = 0.0;
};

/// Predictable announcement time with jump mass of J and its kernel F(t; du).
/// Checker-only: nothing is ever simulated from these.
struct JAtom {
    double time = 0.0;
    double mass = 0.0;
    std::vector<KernelAtom> kernel;
};

enum class RiskyKind { DeterministicAtoms, MarkedPointProcess };

struct RiskyDateModel {
    RiskyKind kind = RiskyKind::DeterministicAtoms;
    double horizon = 1.0;
    std::vector<DeterministicAtom> atoms;
    AnnouncementRate rate;
    DateKernel kernel;
    /// Announcements stop after this many (0 = no cap). The compensator is
    /// kappa(t) 1{count(t-) < cap}.
    unsigned max_announcements = 0;
    std::vector<JAtom> j_atoms;

    bool stochastic() const { return kind == RiskyKind::MarkedPointProcess; }
};

/// Announcement (sigma, u) before snapping; u is the continuous draw from q(sigma, .).
struct RawMark {
    double sigma = 0.0;
    double u = 0.0;
    unsigned weight = 1;
};

struct Mark {
    double sigma = 0.0;
    double tau = 0.0;
    /// First node >= sigma: the price starts carrying the atom there.
    std::size_t announce_node = 0;
    std::size_t tau_node = 0;
    unsigned weight = 1;

    /// False only for announcements in the final cell, which have no later node to land on.
    bool priced() const { return tau_node > announce_node; }
};

struct MeasureRealization {
    /// Sorted by sigma.
    std::vector<Mark> marks;

    /// Marks with sigma <= t, i.e. the support of mu_t(du).
    std::vector<Mark> known_at(double t) const;
};

std::vector<RawMark> draw_announcements(const RiskyDateModel& model, Rng& rng);
MeasureRealization snap_marks(std::span<const RawMark> raw, const TimeGrid& grid);
MeasureRealization simulate_announcements(const RiskyDateModel& model, const TimeGrid& grid,
                                          std::uint64_t rng_seed);

/// #{n : tau_n <= t} with multiplicity.
std::size_t mu_bar(const MeasureRealization& real, double t);
/// #{n : tau_n = t} with multiplicity.
std::size_t mu_bar_jump(const MeasureRealization& real, double t, double tol = 1e-12);

/// kappa(t) q(t, u) for u > t; zero otherwise and for deterministic atoms.
double compensator_density(const RiskyDateModel& model, double t, double u);
/// Atoms of xi_t(du). Deterministic atoms are compensated by themselves at s = 0.
std::vector<KernelAtom> compensator_atoms(const RiskyDateModel& model, double t);
/// Jump atoms of J with their kernels.
const std::vector<JAtom>& j_atoms(const RiskyDateModel& model);

/// Throws NodeOutOfRange, KernelNotNormalized, EmptySupport or InvalidModel.
void validate_risky_model(const RiskyDateModel& model, const TimeGrid& grid);

}  // namespace riskydates
