#include "sfag/garch.hpp"

#include "sfag/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sfag {

ReturnSeries simulate_garch(std::size_t n, std::uint64_t seed, const GarchParams& p,
                            std::size_t burn_in) {
    if (n == 0) throw std::invalid_argument("cannot simulate an empty series");
    if (!(p.omega > 0.0) || p.alpha < 0.0 || p.beta < 0.0)
        throw std::invalid_argument("GARCH parameters must be non-negative with omega > 0");
    if (!(p.alpha + p.beta < 1.0))
        throw std::invalid_argument("GARCH requires alpha + beta < 1 for stationarity");

    Rng rng(seed);
    double var = p.omega / (1.0 - p.alpha - p.beta); // unconditional variance
    double r = 0.0;

    ReturnSeries out;
    out.origin = Origin::Real;
    out.seed = static_cast<std::int64_t>(seed);
    out.values.reserve(n);
    for (std::size_t t = 0; t < burn_in + n; ++t) {
        var = p.omega + p.alpha * r * r + p.beta * var;
        r = std::sqrt(var) * rng.normal();
        if (t >= burn_in) out.values.push_back(r);
    }
    return out;
}

} // namespace sfag
