#pragma once

#include "sfag/series.hpp"

#include <cstdint>

namespace sfag {

/// GARCH(1,1) with Gaussian innovations: r_t = sigma_t * z_t,
/// sigma_t^2 = omega + alpha * r_{t-1}^2 + beta * sigma_{t-1}^2.
struct GarchParams {
    double omega = 1e-6;
    double alpha = 0.09;
    double beta = 0.90;
};

ReturnSeries simulate_garch(std::size_t n, std::uint64_t seed, const GarchParams& params = {},
                            std::size_t burn_in = 500);

} // namespace sfag
