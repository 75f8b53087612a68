#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace riskydates {

/// Independent substreams of one path. Each gets its own engine so that
/// toggling one mechanism never shifts the draws of another.
enum class Stream : std::uint64_t {
    Brownian = 1,
    Announcements = 2,
    Default = 3,
    Recovery = 4,
    Checker = 5,
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for (master_seed, path_index, stream): three splitmix64 rounds over
/// master ^ golden*(index+1), then xor in the stream tag and mix again.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t path_index, Stream stream);

/// mt19937_64 with hand-written transforms. The std distributions are
/// implementation-defined, which would break byte-identical output across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t master_seed, std::uint64_t path_index, Stream stream)
        : engine_(derive_seed(master_seed, path_index, stream)) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential() { return -std::log(uniform()); }

    /// Box-Muller; the second variate is cached.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace riskydates
