#include "riskydates/rng.hpp"

#include <numbers>

namespace riskydates {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t path_index, Stream stream) {
    std::uint64_t state = master_seed ^ (0x9E3779B97F4A7C15ULL * (path_index + 1));
    splitmix64(state);
    splitmix64(state);
    state ^= static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL;
    return splitmix64(state);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace riskydates
