#pragma once

#include "sfag/series.hpp"

#include <array>
#include <vector>

namespace sfag {

enum class Tail { Upper, Lower };

/// Generalized Pareto fit to threshold exceedances.
struct GpdFit {
    double threshold = 0.0;
    double xi = 0.0;
    double beta = 0.0;
    int n_exceed = 0;
};

struct AcfVector {
    int lags = 0;
    std::vector<double> values; // index k-1 holds lag-k autocorrelation
};

struct CfvcMatrix {
    static constexpr std::array<int, 4> kWindows = {5, 20, 60, 120};
    std::array<std::array<double, 4>, 4> corr{};
};

struct StylizedFactReport {
    double gpd_gap = 0.0;
    double acf_gap = 0.0;
    double leverage_gap = 0.0;
    double cfvc_gap = 0.0;
};

/// Empirical quantile with the lower-interpolation convention: the k-th
/// smallest value with k = max(1, floor(q * n)).
double lower_quantile(const std::vector<double>& xs, double q);

/// GPD log-likelihood of exceedances y > 0 at (xi, beta); -inf outside support.
double gpd_loglik(const std::vector<double>& y, double xi, double beta);

/// Maximum-likelihood GPD fit on raw exceedances via profile likelihood:
/// Brent search over xi in [-0.5, 1.0] with an inner bounded solve for beta.
GpdFit fit_gpd_exceedances(const std::vector<double>& y);

/// Peaks-over-threshold fit at the given quantile. Lower tail fits -r.
GpdFit fit_gpd_pot(const ReturnSeries& r, double quantile = 0.95, Tail tail = Tail::Lower);

std::vector<double> abs_values(const ReturnSeries& r);
std::vector<double> squared_values(const ReturnSeries& r);

/// Autocorrelation of a transformed series for lags 1..lags, using the
/// full-sample-mean, full-sample-variance normalization.
AcfVector acf(const std::vector<double>& x, int lags = 20);

/// Correlation between r_t and the realized vol of the following `horizon` days.
double leverage_corr(const ReturnSeries& r, int horizon = 20);

/// Pairwise correlations of rolling vols at windows 5/20/60/120 over the
/// end-aligned common index range.
CfvcMatrix cfvc_matrix(const ReturnSeries& r);

double frobenius_gap(const CfvcMatrix& a, const CfvcMatrix& b);

StylizedFactReport gap_report(const ReturnSeries& real, const ReturnSeries& synth);

StylizedFactReport multi_seed_gap(const ReturnSeries& real,
                                  const std::vector<ReturnSeries>& synth_runs);

struct EvalConfig {
    double tail_quantile = 0.95;
    Tail tail = Tail::Lower;
    int acf_lags = 20;
    int lev_horizon = 20;
};

struct SideEstimates {
    GpdFit tail;
    std::vector<double> tail_excess; // sorted exceedances over the threshold
    AcfVector acf_abs;
    double leverage = 0.0;
    CfvcMatrix cfvc;
};

struct RunEvaluation {
    SideEstimates real;
    SideEstimates synth;
    StylizedFactReport gaps;
};

/// Sorted exceedances over the POT threshold, on the same side convention
/// as fit_gpd_pot.
std::vector<double> tail_excesses(const ReturnSeries& r, double quantile, Tail tail);

/// Evaluates a set of generated paths against one real series. The tail is
/// fit on the pooled paths (single paths rarely clear the exceedance
/// minimum); ACF, leverage and CFVC are estimated per path and averaged so
/// path boundaries never enter a window.
RunEvaluation evaluate_paths(const ReturnSeries& real,
                             const std::vector<ReturnSeries>& paths,
                             const EvalConfig& cfg = {});

} // namespace sfag
