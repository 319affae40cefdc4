#pragma once

#include "sfag/series.hpp"

#include <utility>
#include <vector>

namespace sfag {

struct StrategyConfig {
    int lookback = 60;       // trailing-return window, days
    double cost_bps = 5.0;   // per unit of turnover

    void validate() const;
};

/// var95/cvar95 are NaN when fewer than 20 strategy days exist, and sharpe
/// is NaN when the strategy volatility is zero; the standalone metric
/// functions reject those inputs instead.
struct BacktestResult {
    double ann_return = 0.0;
    double ann_vol = 0.0;
    double sharpe = 0.0;
    double max_drawdown = 0.0;
    double var95 = 0.0;
    double cvar95 = 0.0;
    int n_days = 0;
    int n_trades = 0;
};

/// Daily momentum: long when the trailing lookback-day return is positive
/// (sign(0) = +1), short otherwise, exposure always +-1. Day t earns
/// s_t * r_t - (cost_bps/1e4) * |s_t - s_{t-1}|, with the pre-trading
/// position defined as flat so the entry trade is charged.
std::pair<std::vector<double>, BacktestResult>
run_momentum(const ReturnSeries& r, const StrategyConfig& cfg);

// Metrics over the strategy's daily returns. Arithmetic annualization.
double annualized_return(const std::vector<double>& daily);
double annualized_vol(const std::vector<double>& daily);
double sharpe(const std::vector<double>& daily);
double max_drawdown(const std::vector<double>& daily);   // compounded equity, in [0,1]
std::pair<double, double> var_cvar(const std::vector<double>& daily, double level = 0.95);

} // namespace sfag
