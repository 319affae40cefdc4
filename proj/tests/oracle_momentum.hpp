#pragma once

// Deliberately naive re-implementation of the momentum backtest, written
// day by day with no code shared with the engine. Used only as a test oracle.

#include "sfag/backtest.hpp"
#include "sfag/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

inline std::pair<std::vector<double>, sfag::BacktestResult>
oracle_momentum(const sfag::ReturnSeries& r, const sfag::StrategyConfig& cfg) {
    if (cfg.lookback < 1) throw std::invalid_argument("lookback must be >= 1");
    if (cfg.cost_bps < 0.0) throw std::invalid_argument("cost_bps must be >= 0");
    const std::size_t n = r.values.size();
    const std::size_t need = static_cast<std::size_t>(cfg.lookback) + 2;
    if (n < need)
        throw std::invalid_argument("series length " + std::to_string(n) +
                                    " too short for lookback " + std::to_string(cfg.lookback) +
                                    "; need at least " + std::to_string(need));

    std::vector<double> daily;
    double prev_pos = 0.0;
    int trades = 0;
    for (std::size_t t = static_cast<std::size_t>(cfg.lookback); t < n; ++t) {
        double trail = 0.0;
        for (std::size_t i = t - static_cast<std::size_t>(cfg.lookback); i < t; ++i)
            trail += r.values[i];
        const double pos = trail >= 0.0 ? 1.0 : -1.0;
        if (pos != prev_pos) ++trades;
        const double fee = cfg.cost_bps / 1e4 * std::fabs(pos - prev_pos);
        daily.push_back(pos * r.values[t] - fee);
        prev_pos = pos;
    }

    const int nd = static_cast<int>(daily.size());

    double sum = 0.0;
    for (double d : daily) sum += d;
    const double mean = sum / static_cast<double>(nd);

    bool constant = true;
    for (double d : daily)
        if (d != daily.front()) constant = false;
    double ss = 0.0;
    for (double d : daily) {
        const double dev = d - mean;
        ss += dev * dev;
    }
    const double sd = constant ? 0.0 : std::sqrt(ss / static_cast<double>(nd - 1));

    sfag::BacktestResult res;
    res.n_days = nd;
    res.n_trades = trades;
    res.ann_return = mean * 252.0;
    res.ann_vol = sd * std::sqrt(252.0);
    res.sharpe = res.ann_vol == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                    : res.ann_return / res.ann_vol;

    double equity = 1.0, peak = 1.0, worst = 0.0;
    for (double d : daily) {
        equity *= 1.0 + d;
        if (equity > peak) peak = equity;
        const double dd = (peak - equity) / peak;
        if (dd > worst) worst = dd;
    }
    res.max_drawdown = worst;

    if (nd >= 20) {
        std::vector<double> sorted = daily;
        std::sort(sorted.begin(), sorted.end());
        const int k = std::max(1, static_cast<int>(std::floor((1.0 - 0.95) * nd)));
        res.var95 = sorted[static_cast<std::size_t>(k - 1)];
        double acc = 0.0;
        int m = 0;
        for (double d : sorted) {
            if (d > res.var95) break;
            acc += d;
            ++m;
        }
        res.cvar95 = acc / m;
    } else {
        res.var95 = std::numeric_limits<double>::quiet_NaN();
        res.cvar95 = std::numeric_limits<double>::quiet_NaN();
    }
    return {daily, res};
}

} // namespace oracle
