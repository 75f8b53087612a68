#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace riskydates {

/// Time/maturity nodes on [0, horizon]. A single node list serves as both the
/// simulation clock and the maturity axis, so every atom is a node on both.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double horizon, std::size_t n_steps, std::vector<double> nodes);

    double horizon() const { return horizon_; }
    std::size_t n_steps() const { return n_steps_; }
    /// Nominal step horizon / n_steps; merged extra nodes make some cells shorter.
    double dt() const { return horizon_ / static_cast<double>(n_steps_); }

    const std::vector<double>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    std::size_t last() const { return nodes_.size() - 1; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    /// Length of the cell [node i, node i+1).
    double width(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }

    /// Snapping tolerance, 1e-12 relative to the horizon.
    double tolerance() const { return 1e-12 * horizon_; }

    std::optional<std::size_t> find(double t) const;
    /// First node >= t (within tolerance); size() when t lies beyond the horizon.
    std::size_t ceil_index(double t) const;

private:
    double horizon_ = 0.0;
    std::size_t n_steps_ = 0;
    std::vector<double> nodes_;
};

TimeGrid build_time_grid(double horizon, std::size_t n_steps, std::span<const double> extra_nodes = {});

using Curve = std::function<double(double)>;

Curve flat_curve(double value);
Curve linear_curve(double intercept, double slope);
/// Piecewise-linear through (time, value) points, flat beyond the ends.
Curve tabulated_curve(std::vector<std::pair<double, double>> points);

/// Fills out[0..n) with the vector value at (t, T).
using VolFn = std::function<void(double t, double T, std::span<double> out)>;

/// n-factor volatility field b(t, T) or beta(t, T).
class VolField {
public:
    enum class Kind { Zero, Constant, ExpDecay, Custom };

    VolField() = default;

    static VolField zero(std::size_t n_factors);
    /// sigma * 1{T >= t}
    static VolField constant(std::vector<double> sigma);
    /// sigma * exp(-decay (T - t)) * 1{T >= t}
    static VolField exp_decay(std::vector<double> sigma, double decay);
    /// Arbitrary field; `integral` may be empty, then quadrature is used.
    static VolField custom(std::size_t n_factors, VolFn value, VolFn integral = {});

    Kind kind() const { return kind_; }
    std::size_t factors() const { return n_factors_; }
    bool is_zero() const { return kind_ == Kind::Zero; }
    const std::vector<double>& sigma() const { return sigma_; }
    double decay() const { return decay_; }

    void eval(double t, double T, std::span<double> out) const;
    /// Integral over u in [t, T] of the field at (t, u).
    void integral(double t, double T, std::span<double> out) const;

private:
    Kind kind_ = Kind::Zero;
    std::size_t n_factors_ = 1;
    std::vector<double> sigma_ = {0.0};
    double decay_ = 0.0;
    VolFn value_;
    VolFn integral_;
};

struct ForwardFieldSpec {
    Curve f0 = flat_curve(0.0);
    Curve g0 = flat_curve(0.0);
    VolField b;
    VolField beta;

    std::size_t n_factors() const { return b.factors(); }
};

struct Violation {
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool mentions(const std::string& text) const;
};

struct ValidationOptions {
    /// Continuity proxy: |f0(u') - f0(u)| <= bound * |u' - u| between neighbouring nodes.
    double continuity_bound = 1e3;
};

ValidationReport validate_spec(const ForwardFieldSpec& fields, const TimeGrid& grid,
                               const ValidationOptions& options = {});

/// Per-path prices on the stored t-rows. Row r holds P(t_k, T_j) for j = k..last.
struct BondSurface {
    std::vector<std::size_t> t_nodes;
    std::vector<std::vector<double>> prices;
    std::vector<std::vector<double>> discounted;
    std::size_t last_node = 0;

    double price(std::size_t row, std::size_t T_node) const { return prices[row][T_node - t_nodes[row]]; }
    double discounted_price(std::size_t row, std::size_t T_node) const {
        return discounted[row][T_node - t_nodes[row]];
    }
};

}  // namespace riskydates
