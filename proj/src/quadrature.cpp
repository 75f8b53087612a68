#include "riskydates/quadrature.hpp"

#include <array>

namespace riskydates {

namespace {

constexpr std::array<double, 4> kAbscissa = {
    0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
constexpr std::array<double, 4> kWeight = {
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

}  // namespace

double integrate(const std::function<double(double)>& fn, double a, double b, int panels) {
    if (!(b > a) || panels <= 0) return 0.0;
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        const double half = 0.5 * h;
        double panel = 0.0;
        for (std::size_t i = 0; i < kAbscissa.size(); ++i) {
            panel += kWeight[i] * (fn(mid - half * kAbscissa[i]) + fn(mid + half * kAbscissa[i]));
        }
        total += panel * half;
    }
    return total;
}

}  // namespace riskydates
