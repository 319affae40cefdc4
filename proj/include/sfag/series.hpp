#pragma once

#include <optional>
#include <string>
#include <vector>

namespace sfag {

enum class Origin { Real, Synthetic };

/// A strictly positive price path, optionally carrying ordered date labels.
struct PricePath {
    std::vector<double> values;
    std::vector<std::string> dates; // empty or same length as values

    void validate() const;
};

/// A finite sequence of daily log returns.
struct ReturnSeries {
    std::vector<double> values;
    Origin origin = Origin::Real;
    std::optional<std::int64_t> seed;

    std::size_t size() const { return values.size(); }
    void validate() const;
};

/// Rolling sample standard deviations; values[t] covers source[t .. t+window-1].
struct RollingVolSeries {
    int window = 0;
    std::vector<double> values;
};

ReturnSeries log_returns(const PricePath& path);

/// Reconstructs a price path from log returns, starting at initial_price.
PricePath prices_from_returns(const ReturnSeries& r, double initial_price = 100.0);

RollingVolSeries rolling_vol(const ReturnSeries& r, int window);

/// Sum of r[t-lookback .. t-1]; with log returns this is log(P_t / P_{t-lookback}).
double trailing_cum_return(const ReturnSeries& r, int lookback, std::size_t t);

// Plain sequence helpers shared by the statistics modules.
double mean_of(const std::vector<double>& xs);
double sample_std(const std::vector<double>& xs); // n-1 divisor
double pearson_corr(const std::vector<double>& xs, const std::vector<double>& ys);

} // namespace sfag
