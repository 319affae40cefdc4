#include "sfag/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sfag {

namespace {
constexpr double kTradingDays = 252.0;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
} // namespace

void StrategyConfig::validate() const {
    if (lookback < 1) throw std::invalid_argument("lookback must be >= 1");
    if (cost_bps < 0.0) throw std::invalid_argument("cost_bps must be >= 0");
}

double annualized_return(const std::vector<double>& daily) {
    if (daily.empty()) throw std::invalid_argument("annualized_return: empty series");
    return mean_of(daily) * kTradingDays;
}

double annualized_vol(const std::vector<double>& daily) {
    if (daily.size() < 2) throw std::invalid_argument("annualized_vol needs >= 2 observations");
    return sample_std(daily) * std::sqrt(kTradingDays);
}

double sharpe(const std::vector<double>& daily) {
    const double vol = annualized_vol(daily);
    if (vol == 0.0) throw std::invalid_argument("undefined Sharpe: zero volatility");
    return annualized_return(daily) / vol;
}

double max_drawdown(const std::vector<double>& daily) {
    if (daily.empty()) throw std::invalid_argument("max_drawdown: empty series");
    double equity = 1.0, peak = 1.0, worst = 0.0;
    for (double d : daily) {
        equity *= 1.0 + d;
        peak = std::max(peak, equity);
        worst = std::max(worst, (peak - equity) / peak);
    }
    return worst;
}

std::pair<double, double> var_cvar(const std::vector<double>& daily, double level) {
    const int n = static_cast<int>(daily.size());
    if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("var level must be in (0, 1)");
    if (n < 20)
        throw std::invalid_argument("var_cvar needs >= 20 observations, got " +
                                    std::to_string(n));
    std::vector<double> sorted = daily;
    std::sort(sorted.begin(), sorted.end());
    const int k = std::max(1, static_cast<int>(std::floor((1.0 - level) * n)));
    const double var = sorted[static_cast<std::size_t>(k - 1)];
    double acc = 0.0;
    int m = 0;
    for (double d : sorted) {
        if (d > var) break;
        acc += d;
        ++m;
    }
    return {var, acc / m};
}

std::pair<std::vector<double>, BacktestResult>
run_momentum(const ReturnSeries& r, const StrategyConfig& cfg) {
    cfg.validate();
    r.validate();
    const std::size_t n = r.values.size();
    const std::size_t need = static_cast<std::size_t>(cfg.lookback) + 2;
    if (n < need)
        throw std::invalid_argument("series length " + std::to_string(n) +
                                    " too short for lookback " + std::to_string(cfg.lookback) +
                                    "; need at least " + std::to_string(need));

    const double cost = cfg.cost_bps / 1e4;
    std::vector<double> daily;
    daily.reserve(n - static_cast<std::size_t>(cfg.lookback));
    double prev = 0.0; // flat before the first traded day
    int trades = 0;
    for (std::size_t t = static_cast<std::size_t>(cfg.lookback); t < n; ++t) {
        const double trail = trailing_cum_return(r, cfg.lookback, t);
        const double pos = trail >= 0.0 ? 1.0 : -1.0;
        if (pos != prev) ++trades;
        daily.push_back(pos * r.values[t] - cost * std::abs(pos - prev));
        prev = pos;
    }

    BacktestResult res;
    res.n_days = static_cast<int>(daily.size());
    res.n_trades = trades;
    res.ann_return = annualized_return(daily);
    res.ann_vol = annualized_vol(daily);
    res.sharpe = res.ann_vol == 0.0 ? kNan : res.ann_return / res.ann_vol;
    res.max_drawdown = max_drawdown(daily);
    if (res.n_days >= 20) {
        const auto [v, cv] = var_cvar(daily);
        res.var95 = v;
        res.cvar95 = cv;
    } else {
        res.var95 = kNan;
        res.cvar95 = kNan;
    }
    return {std::move(daily), res};
}

} // namespace sfag
