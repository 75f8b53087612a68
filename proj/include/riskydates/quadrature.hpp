#pragma once

#include <functional>

namespace riskydates {

/// Composite 8-point Gauss-Legendre rule on [a, b] with `panels` equal panels.
double integrate(const std::function<double(double)>& fn, double a, double b, int panels = 16);

}  // namespace riskydates
