#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sfag {

/// Deterministic random stream with a fixed draw discipline: every normal()
/// consumes exactly two raw draws (Box-Muller, no caching) and every
/// uniform01/uniform_int consumes exactly one, so replaying a seed replays
/// the byte-identical sequence regardless of standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer on [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Modulo bias is below 2^-40 for the sizes used here.
        return engine_() % n;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static constexpr double kPi = 3.141592653589793238462643383279502884;
    std::mt19937_64 engine_;
};

} // namespace sfag
