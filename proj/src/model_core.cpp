#include "riskydates/model_core.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "riskydates/error.hpp"
#include "riskydates/quadrature.hpp"

namespace riskydates {

TimeGrid::TimeGrid(double horizon, std::size_t n_steps, std::vector<double> nodes)
    : horizon_(horizon), n_steps_(n_steps), nodes_(std::move(nodes)) {}

std::optional<std::size_t> TimeGrid::find(double t) const {
    const std::size_t i = ceil_index(t);
    if (i < nodes_.size() && std::abs(nodes_[i] - t) <= tolerance()) return i;
    return std::nullopt;
}

std::size_t TimeGrid::ceil_index(double t) const {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t - tolerance());
    return static_cast<std::size_t>(it - nodes_.begin());
}

TimeGrid build_time_grid(double horizon, std::size_t n_steps, std::span<const double> extra_nodes) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorCode::NonPositiveHorizon, fmt::format("horizon must be positive, got {}", horizon));
    }
    if (n_steps == 0) {
        throw Error(ErrorCode::NonPositiveHorizon, "grid needs at least one step");
    }
    const double tol = 1e-12 * horizon;
    std::vector<double> nodes(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i) {
        nodes[i] = horizon * static_cast<double>(i) / static_cast<double>(n_steps);
    }
    nodes.back() = horizon;

    for (double x : extra_nodes) {
        if (!std::isfinite(x) || x < -tol || x > horizon + tol) {
            throw Error(ErrorCode::NodeOutOfRange,
                        fmt::format("node {} outside [0, {}]", x, horizon));
        }
        const auto it = std::lower_bound(nodes.begin(), nodes.end(), x - tol);
        if (it != nodes.end() && std::abs(*it - x) <= tol) continue;
        nodes.insert(it, x);
    }
    return TimeGrid(horizon, n_steps, std::move(nodes));
}

Curve flat_curve(double value) {
    return [value](double) { return value; };
}

Curve linear_curve(double intercept, double slope) {
    return [intercept, slope](double u) { return intercept + slope * u; };
}

Curve tabulated_curve(std::vector<std::pair<double, double>> points) {
    std::sort(points.begin(), points.end());
    return [points = std::move(points)](double u) {
        if (points.empty()) return 0.0;
        if (u <= points.front().first) return points.front().second;
        if (u >= points.back().first) return points.back().second;
        const auto hi = std::upper_bound(points.begin(), points.end(), u,
                                         [](double x, const auto& p) { return x < p.first; });
        const auto lo = hi - 1;
        const double w = (u - lo->first) / (hi->first - lo->first);
        return lo->second + w * (hi->second - lo->second);
    };
}

VolField VolField::zero(std::size_t n_factors) {
    VolField v;
    v.kind_ = Kind::Zero;
    v.n_factors_ = n_factors;
    v.sigma_.assign(n_factors, 0.0);
    return v;
}

VolField VolField::constant(std::vector<double> sigma) {
    VolField v = exp_decay(std::move(sigma), 0.0);
    v.kind_ = Kind::Constant;
    return v;
}

VolField VolField::exp_decay(std::vector<double> sigma, double decay) {
    VolField v;
    v.kind_ = Kind::ExpDecay;
    v.n_factors_ = sigma.size();
    v.sigma_ = std::move(sigma);
    v.decay_ = decay;
    return v;
}

VolField VolField::custom(std::size_t n_factors, VolFn value, VolFn integral) {
    VolField v;
    v.kind_ = Kind::Custom;
    v.n_factors_ = n_factors;
    v.value_ = std::move(value);
    v.integral_ = std::move(integral);
    return v;
}

void VolField::eval(double t, double T, std::span<double> out) const {
    switch (kind_) {
        case Kind::Zero:
            std::fill(out.begin(), out.end(), 0.0);
            return;
        case Kind::Constant:
        case Kind::ExpDecay: {
            const double scale = T < t ? 0.0 : std::exp(-decay_ * (T - t));
            for (std::size_t f = 0; f < n_factors_; ++f) out[f] = sigma_[f] * scale;
            return;
        }
        case Kind::Custom:
            value_(t, T, out);
            return;
    }
}

void VolField::integral(double t, double T, std::span<double> out) const {
    if (kind_ == Kind::Zero || T <= t) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    if (kind_ == Kind::Constant || kind_ == Kind::ExpDecay) {
        const double x = decay_ * (T - t);
        // (1 - e^{-x}) / decay, written to stay accurate as decay -> 0
        const double len = std::abs(x) < 1e-12 ? (T - t) : -std::expm1(-x) / decay_;
        for (std::size_t f = 0; f < n_factors_; ++f) out[f] = sigma_[f] * len;
        return;
    }
    if (integral_) {
        integral_(t, T, out);
        return;
    }
    std::vector<double> tmp(n_factors_);
    for (std::size_t f = 0; f < n_factors_; ++f) {
        out[f] = integrate(
            [&](double u) {
                value_(t, u, tmp);
                return tmp[f];
            },
            t, T);
    }
}

bool ValidationReport::mentions(const std::string& text) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) {
        return v.message.find(text) != std::string::npos || v.code == text;
    });
}

namespace {

void check_curve(const char* name, const Curve& curve, const TimeGrid& grid,
                 const ValidationOptions& options, ValidationReport& report) {
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        values[i] = curve(grid[i]);
        if (!std::isfinite(values[i])) {
            report.violations.push_back(
                {fmt::format("{}.finite", name), fmt::format("initial curve not finite at {}", grid[i])});
            return;
        }
    }
    double l1 = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) l1 += std::abs(values[i]) * grid.width(i);
    if (!std::isfinite(l1)) {
        report.violations.push_back({fmt::format("{}.integrable", name), "initial curve not integrable"});
    }
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (std::abs(values[i + 1] - values[i]) > options.continuity_bound * grid.width(i)) {
            report.violations.push_back(
                {fmt::format("{}.continuity", name),
                 fmt::format("initial curve {} jumps between {} and {}", name, grid[i], grid[i + 1])});
            return;
        }
    }
}

void check_vol(const char* name, const VolField& vol, const TimeGrid& grid, ValidationReport& report) {
    std::vector<double> v(vol.factors());
    bool reported_lower = false;
    double energy = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            vol.eval(grid[k], grid[i], v);
            double sq = 0.0;
            for (double x : v) sq += x * x;
            if (i < k) {
                if (sq != 0.0 && !reported_lower) {
                    report.violations.push_back(
                        {fmt::format("{}.support", name),
                         fmt::format("volatility nonzero for T < t ({} at t={}, T={})", name, grid[k], grid[i])});
                    reported_lower = true;
                }
            } else if (k + 1 < grid.size() && i + 1 < grid.size()) {
                energy += sq * grid.width(k) * grid.width(i);
            }
        }
    }
    if (!std::isfinite(energy)) {
        report.violations.push_back(
            {fmt::format("{}.square_integrable", name),
             fmt::format("volatility {} not square-integrable on the grid", name)});
    }
}

}  // namespace

ValidationReport validate_spec(const ForwardFieldSpec& fields, const TimeGrid& grid,
                               const ValidationOptions& options) {
    ValidationReport report;
    check_curve("f0", fields.f0, grid, options, report);
    check_curve("g0", fields.g0, grid, options, report);
    if (fields.b.factors() != fields.beta.factors()) {
        report.violations.push_back(
            {"factors", fmt::format("b has {} factors but beta has {}", fields.b.factors(), fields.beta.factors())});
        return report;
    }
    check_vol("b", fields.b, grid, report);
    check_vol("beta", fields.beta, grid, report);
    return report;
}

}  // namespace riskydates
