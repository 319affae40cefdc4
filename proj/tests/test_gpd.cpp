#include "sfag/rng.hpp"
#include "sfag/series.hpp"
#include "sfag/stylized_facts.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

using namespace sfag;

namespace {

std::string thrown_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

// Inverse-CDF sampler for GPD exceedances; xi = 0 degenerates to Exp(beta).
std::vector<double> simulate_gpd(std::size_t n, double xi, double beta, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> y(n);
    for (double& v : y) {
        double u = rng.uniform01();
        if (u >= 1.0) u = 1.0 - 1e-16;
        v = xi == 0.0 ? -beta * std::log1p(-u)
                      : beta / xi * (std::pow(1.0 - u, -xi) - 1.0);
    }
    return y;
}

} // namespace

TEST_SUITE("gpd") {

TEST_CASE("lower quantile follows the floor convention") {
    const std::vector<double> xs = {5.0, 1.0, 4.0, 2.0, 3.0};
    CHECK(lower_quantile(xs, 0.5) == 2.0);  // k = floor(2.5) = 2
    CHECK(lower_quantile(xs, 0.95) == 4.0); // k = floor(4.75) = 4
    CHECK(lower_quantile(xs, 0.1) == 1.0);  // floor(0.5) clamps to 1
    CHECK_THROWS_AS((void)lower_quantile({}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS((void)lower_quantile(xs, 1.0), std::invalid_argument);
}

TEST_CASE("log-likelihood closed forms") {
    const std::vector<double> y = {0.5, 1.0, 2.0};
    // xi = 0 reduces to the exponential likelihood.
    CHECK(gpd_loglik(y, 0.0, 1.0) == doctest::Approx(-3.5).epsilon(1e-12));
    CHECK(gpd_loglik(y, 0.0, 2.0) ==
          doctest::Approx(-3.0 * std::log(2.0) - 3.5 / 2.0).epsilon(1e-12));
    // Outside the support when xi < 0 and y exceeds -beta/xi.
    CHECK(gpd_loglik({1.0, 3.0}, -0.5, 1.0) == -std::numeric_limits<double>::infinity());
    CHECK(gpd_loglik(y, 0.3, 0.0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("recovers xi on simulated exceedances") {
    // Exponential data is GPD with xi = 0.
    const GpdFit exp_fit = fit_gpd_exceedances(simulate_gpd(10000, 0.0, 1.0, 101));
    CHECK(exp_fit.xi > -0.03);
    CHECK(exp_fit.xi < 0.03);
    CHECK(exp_fit.beta == doctest::Approx(1.0).epsilon(0.05));
    CHECK(exp_fit.n_exceed == 10000);

    const GpdFit mid = fit_gpd_exceedances(simulate_gpd(10000, 0.15, 1.0, 202));
    CHECK(std::abs(mid.xi - 0.15) < 0.05);

    const GpdFit heavy = fit_gpd_exceedances(simulate_gpd(10000, 0.3, 1.0, 303));
    CHECK(heavy.xi > 0.25);
    CHECK(heavy.xi < 0.35);
}

TEST_CASE("degenerate and invalid exceedances are rejected") {
    CHECK(thrown_message([] { (void)fit_gpd_exceedances(std::vector<double>(50, 1.0)); }) ==
          "degenerate tail");
    CHECK_THROWS_AS((void)fit_gpd_exceedances({1.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)fit_gpd_exceedances({1.0, -2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("fit is scale equivariant") {
    const std::vector<double> y = simulate_gpd(4000, 0.2, 1.0, 404);
    std::vector<double> y2 = y;
    for (double& v : y2) v *= 2.5;
    const GpdFit a = fit_gpd_exceedances(y);
    const GpdFit b = fit_gpd_exceedances(y2);
    CHECK(b.xi == doctest::Approx(a.xi).epsilon(1e-4));
    CHECK(b.beta == doctest::Approx(2.5 * a.beta).epsilon(1e-4));
}

TEST_CASE("fit is a local likelihood optimum") {
    const std::vector<double> y = simulate_gpd(2000, 0.1, 0.8, 505);
    const GpdFit fit = fit_gpd_exceedances(y);
    const double at_opt = gpd_loglik(y, fit.xi, fit.beta);
    for (double dxi : {-0.01, 0.0, 0.01}) {
        for (double fb : {0.99, 1.0, 1.01}) {
            if (dxi == 0.0 && fb == 1.0) continue;
            CHECK(gpd_loglik(y, fit.xi + dxi, fit.beta * fb) <= at_opt + 1e-9);
        }
    }
}

TEST_CASE("fit is deterministic") {
    const std::vector<double> y = simulate_gpd(1000, 0.25, 1.0, 606);
    const GpdFit a = fit_gpd_exceedances(y);
    const GpdFit b = fit_gpd_exceedances(y);
    CHECK(a.xi == b.xi);
    CHECK(a.beta == b.beta);
}

TEST_CASE("peaks-over-threshold wiring") {
    // Symmetric heavy-ish data; the lower tail is fit on -r.
    Rng rng(707);
    ReturnSeries r;
    r.values.reserve(10000);
    for (int i = 0; i < 10000; ++i) r.values.push_back(0.01 * rng.normal());

    const GpdFit fit = fit_gpd_pot(r, 0.95, Tail::Lower);
    std::vector<double> neg = r.values;
    for (double& x : neg) x = -x;
    CHECK(fit.threshold == lower_quantile(neg, 0.95));
    int count = 0;
    for (double x : neg)
        if (x > fit.threshold) ++count;
    CHECK(fit.n_exceed == count);
    CHECK(fit.n_exceed >= 30);
    CHECK(fit.beta > 0.0);
    // Gaussian tails have xi <= 0 in-sample at this size; just pin the range.
    CHECK(fit.xi >= -0.5);
    CHECK(fit.xi < 0.2);

    const GpdFit upper = fit_gpd_pot(r, 0.95, Tail::Upper);
    CHECK(upper.threshold == lower_quantile(r.values, 0.95));
}

TEST_CASE("pot rejects thin samples with the count") {
    ReturnSeries r;
    Rng rng(808);
    for (int i = 0; i < 100; ++i) r.values.push_back(rng.normal());
    const std::string msg = thrown_message([&] { (void)fit_gpd_pot(r, 0.95, Tail::Lower); });
    CHECK(msg.find("insufficient exceedances") != std::string::npos);
    CHECK(msg.find("< 30") != std::string::npos);
}

TEST_CASE("tail_excesses matches the pot side convention") {
    ReturnSeries r;
    Rng rng(909);
    for (int i = 0; i < 2000; ++i) r.values.push_back(rng.normal());
    const GpdFit fit = fit_gpd_pot(r, 0.95, Tail::Lower);
    const std::vector<double> exc = tail_excesses(r, 0.95, Tail::Lower);
    CHECK(static_cast<int>(exc.size()) == fit.n_exceed);
    for (std::size_t i = 1; i < exc.size(); ++i) CHECK(exc[i - 1] <= exc[i]);
    for (double e : exc) CHECK(e > 0.0);
}

} // TEST_SUITE
