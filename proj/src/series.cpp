#include "sfag/series.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sfag {

void PricePath::validate() const {
    if (values.size() < 2)
        throw std::invalid_argument("price path needs at least 2 values, got " +
                                    std::to_string(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0) || !std::isfinite(values[i]))
            throw std::invalid_argument("non-positive price at index " + std::to_string(i));
    }
    if (!dates.empty()) {
        if (dates.size() != values.size())
            throw std::invalid_argument("date count " + std::to_string(dates.size()) +
                                        " does not match value count " +
                                        std::to_string(values.size()));
        for (std::size_t i = 1; i < dates.size(); ++i)
            if (!(dates[i - 1] < dates[i]))
                throw std::invalid_argument("dates not strictly increasing at index " +
                                            std::to_string(i));
    }
}

void ReturnSeries::validate() const {
    if (values.empty()) throw std::invalid_argument("return series must be non-empty");
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw std::invalid_argument("non-finite return at index " + std::to_string(i));
}

ReturnSeries log_returns(const PricePath& path) {
    path.validate();
    ReturnSeries out;
    out.origin = Origin::Real;
    out.values.reserve(path.values.size() - 1);
    for (std::size_t i = 1; i < path.values.size(); ++i)
        out.values.push_back(std::log(path.values[i] / path.values[i - 1]));
    return out;
}

PricePath prices_from_returns(const ReturnSeries& r, double initial_price) {
    r.validate();
    if (!(initial_price > 0.0))
        throw std::invalid_argument("initial price must be positive");
    PricePath p;
    p.values.reserve(r.size() + 1);
    p.values.push_back(initial_price);
    for (double x : r.values) p.values.push_back(p.values.back() * std::exp(x));
    return p;
}

RollingVolSeries rolling_vol(const ReturnSeries& r, int window) {
    if (window < 2)
        throw std::invalid_argument("rolling window must be at least 2, got " +
                                    std::to_string(window));
    if (static_cast<std::size_t>(window) > r.size())
        throw std::invalid_argument("rolling window " + std::to_string(window) +
                                    " exceeds series length " + std::to_string(r.size()));
    RollingVolSeries out;
    out.window = window;
    const std::size_t n = r.size() - window + 1;
    out.values.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        double m = 0.0;
        double lo = r.values[t], hi = r.values[t];
        for (int j = 0; j < window; ++j) {
            const double x = r.values[t + j];
            m += x;
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        // A constant window is exactly zero; the mean-subtraction path would
        // leave rounding noise that breaks degenerate-variance detection.
        if (lo == hi) {
            out.values.push_back(0.0);
            continue;
        }
        m /= window;
        double ss = 0.0;
        for (int j = 0; j < window; ++j) {
            const double d = r.values[t + j] - m;
            ss += d * d;
        }
        out.values.push_back(std::sqrt(ss / (window - 1)));
    }
    return out;
}

double trailing_cum_return(const ReturnSeries& r, int lookback, std::size_t t) {
    if (lookback < 1) throw std::invalid_argument("lookback must be positive");
    if (t < static_cast<std::size_t>(lookback))
        throw std::invalid_argument("index " + std::to_string(t) +
                                    " precedes lookback window of " + std::to_string(lookback));
    if (t > r.size())
        throw std::invalid_argument("index " + std::to_string(t) + " beyond series length " +
                                    std::to_string(r.size()));
    double s = 0.0;
    for (std::size_t i = t - lookback; i < t; ++i) s += r.values[i];
    return s;
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty sequence");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) throw std::invalid_argument("sample std needs at least 2 values");
    // A constant sequence has exactly zero std; the mean-subtraction path
    // would leave rounding noise that defeats zero-volatility detection.
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*lo == *hi) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - m;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double pearson_corr(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("correlation inputs differ in length: " +
                                    std::to_string(xs.size()) + " vs " +
                                    std::to_string(ys.size()));
    if (xs.size() < 2) throw std::invalid_argument("correlation needs at least 2 pairs");
    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw std::invalid_argument("degenerate variance in correlation input");
    return sxy / std::sqrt(sxx * syy);
}

} // namespace sfag
