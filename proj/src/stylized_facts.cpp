#include "sfag/stylized_facts.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace sfag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Brent's method for 1-D minimization on [a, b]. Deterministic, derivative-free.
double brent_minimize(const std::function<double(double)>& f, double a, double b, double tol,
                      int max_iter, double* fmin_out = nullptr) {
    const double gold = 0.381966011250105; // (3 - sqrt(5)) / 2
    double x = a + gold * (b - a), w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const double xm = 0.5 * (a + b);
        const double tol1 = tol * std::abs(x) + 1e-12;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
        bool use_golden = true;
        if (std::abs(e) > tol1) {
            // Parabolic interpolation through (v, w, x).
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            q = std::abs(q);
            const double e_old = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * e_old) && p > q * (a - x) && p < q * (b - x)) {
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = xm > x ? tol1 : -tol1;
                use_golden = false;
            }
        }
        if (use_golden) {
            e = (x < xm ? b : a) - x;
            d = gold * e;
        }
        const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
        const double fu = f(u);
        if (fu <= fx) {
            if (u < x)
                b = x;
            else
                a = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x)
                a = u;
            else
                b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    if (fmin_out) *fmin_out = fx;
    return x;
}

/// Profile log-likelihood over xi: maximizes beta numerically for fixed xi.
double profile_loglik(const std::vector<double>& y, double xi, double y_mean, double y_max,
                      double* beta_out) {
    if (std::abs(xi) < 1e-9) {
        // Exponential limit: beta MLE is the sample mean.
        if (beta_out) *beta_out = y_mean;
        return gpd_loglik(y, 0.0, y_mean);
    }
    double beta_lo = y_mean * 1e-6;
    if (xi < 0.0) beta_lo = std::max(beta_lo, -xi * y_max * (1.0 + 1e-10));
    const double beta_hi = y_mean * 1e6;
    if (!(beta_lo < beta_hi)) {
        if (beta_out) *beta_out = beta_hi;
        return kNegInf;
    }
    const double llo = std::log(beta_lo);
    const double lhi = std::log(beta_hi);
    double neg_best = 0.0;
    const double lb = brent_minimize(
        [&](double logb) {
            const double ll = gpd_loglik(y, xi, std::exp(logb));
            return std::isfinite(ll) ? -ll : 1e300;
        },
        llo, lhi, 1e-12, 200, &neg_best);
    if (beta_out) *beta_out = std::exp(lb);
    return -neg_best;
}

} // namespace

double lower_quantile(const std::vector<double>& xs, double q) {
    if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
    if (!(q > 0.0) || !(q < 1.0)) throw std::invalid_argument("quantile level must be in (0,1)");
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    auto k = static_cast<std::size_t>(std::floor(q * n));
    if (k < 1) k = 1;
    if (k > sorted.size()) k = sorted.size();
    return sorted[k - 1];
}

double gpd_loglik(const std::vector<double>& y, double xi, double beta) {
    if (!(beta > 0.0)) return kNegInf;
    const auto n = static_cast<double>(y.size());
    if (std::abs(xi) < 1e-9) {
        double s = 0.0;
        for (double v : y) s += v;
        return -n * std::log(beta) - s / beta;
    }
    double s = 0.0;
    for (double v : y) {
        const double z = 1.0 + xi * v / beta;
        if (!(z > 0.0)) return kNegInf;
        s += std::log(z);
    }
    return -n * std::log(beta) - (1.0 + 1.0 / xi) * s;
}

GpdFit fit_gpd_exceedances(const std::vector<double>& y) {
    if (y.size() < 2) throw std::invalid_argument("GPD fit needs at least 2 exceedances");
    double y_min = y[0], y_max = y[0], y_sum = 0.0;
    for (double v : y) {
        if (!(v > 0.0))
            throw std::invalid_argument("exceedances must be strictly positive");
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
        y_sum += v;
    }
    if (!(y_max > y_min)) throw std::invalid_argument("degenerate tail");
    const double y_mean = y_sum / static_cast<double>(y.size());

    constexpr double xi_lo = -0.5, xi_hi = 1.0;
    constexpr int grid_n = 61;

    // Coarse grid to bracket the optimum, then Brent refinement.
    int best_i = 0;
    double best_ll = kNegInf;
    for (int i = 0; i < grid_n; ++i) {
        const double xi = xi_lo + (xi_hi - xi_lo) * i / (grid_n - 1);
        const double ll = profile_loglik(y, xi, y_mean, y_max, nullptr);
        if (ll > best_ll) {
            best_ll = ll;
            best_i = i;
        }
    }
    const double step = (xi_hi - xi_lo) / (grid_n - 1);
    const double lo = std::max(xi_lo, xi_lo + (best_i - 1) * step);
    const double hi = std::min(xi_hi, xi_lo + (best_i + 1) * step);
    const double xi_hat = brent_minimize(
        [&](double xi) {
            const double ll = profile_loglik(y, xi, y_mean, y_max, nullptr);
            return std::isfinite(ll) ? -ll : 1e300;
        },
        lo, hi, 1e-10, 200);

    GpdFit fit;
    fit.xi = xi_hat;
    profile_loglik(y, xi_hat, y_mean, y_max, &fit.beta);
    fit.n_exceed = static_cast<int>(y.size());
    return fit;
}

GpdFit fit_gpd_pot(const ReturnSeries& r, double quantile, Tail tail) {
    r.validate();
    std::vector<double> xs = r.values;
    if (tail == Tail::Lower)
        for (double& x : xs) x = -x;

    const double u = lower_quantile(xs, quantile);
    std::vector<double> y;
    for (double x : xs)
        if (x > u) y.push_back(x - u);

    if (y.size() < 30)
        throw std::invalid_argument("insufficient exceedances for GPD fit: " +
                                    std::to_string(y.size()) + " < 30");
    GpdFit fit = fit_gpd_exceedances(y);
    fit.threshold = u;
    return fit;
}

std::vector<double> abs_values(const ReturnSeries& r) {
    std::vector<double> out(r.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(r.values[i]);
    return out;
}

std::vector<double> squared_values(const ReturnSeries& r) {
    std::vector<double> out(r.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.values[i] * r.values[i];
    return out;
}

AcfVector acf(const std::vector<double>& x, int lags) {
    if (lags < 1) throw std::invalid_argument("acf needs at least 1 lag");
    const auto n = x.size();
    if (n <= static_cast<std::size_t>(lags) + 1)
        throw std::invalid_argument("series length " + std::to_string(n) +
                                    " too short for " + std::to_string(lags) + " lags");
    const double m = mean_of(x);
    double denom = 0.0;
    for (double v : x) {
        const double d = v - m;
        denom += d * d;
    }
    if (denom <= 0.0) throw std::invalid_argument("zero variance in acf input");

    AcfVector out;
    out.lags = lags;
    out.values.reserve(lags);
    for (int k = 1; k <= lags; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) num += (x[t] - m) * (x[t + k] - m);
        out.values.push_back(num / denom);
    }
    return out;
}

double leverage_corr(const ReturnSeries& r, int horizon) {
    if (horizon < 2) throw std::invalid_argument("leverage horizon must be at least 2");
    const std::size_t n = r.size();
    if (n < static_cast<std::size_t>(horizon) + 2)
        throw std::invalid_argument("series length " + std::to_string(n) +
                                    " too short for leverage horizon " +
                                    std::to_string(horizon));
    const RollingVolSeries vol = rolling_vol(r, horizon);
    // Pair r_t with the vol window starting at t+1.
    const std::size_t m = n - horizon;
    std::vector<double> xs(r.values.begin(), r.values.begin() + m);
    std::vector<double> ys(vol.values.begin() + 1, vol.values.begin() + 1 + m);
    try {
        return pearson_corr(xs, ys);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("degenerate variance in leverage correlation");
    }
}

CfvcMatrix cfvc_matrix(const ReturnSeries& r) {
    const std::size_t n = r.size();
    const int w_max = CfvcMatrix::kWindows.back();
    if (n < static_cast<std::size_t>(w_max) + 2)
        throw std::invalid_argument("series length " + std::to_string(n) +
                                    " too short for CFVC (needs at least " +
                                    std::to_string(w_max + 2) + ")");

    // Truncate each vol series to windows ending on the common range.
    const std::size_t common = n - w_max + 1;
    std::array<std::vector<double>, 4> vols;
    for (std::size_t i = 0; i < 4; ++i) {
        const int w = CfvcMatrix::kWindows[i];
        const RollingVolSeries v = rolling_vol(r, w);
        const std::size_t start = static_cast<std::size_t>(w_max - w);
        vols[i].assign(v.values.begin() + start, v.values.begin() + start + common);
    }

    CfvcMatrix out;
    for (int i = 0; i < 4; ++i) out.corr[i][i] = 1.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const double c = pearson_corr(vols[i], vols[j]);
            out.corr[i][j] = c;
            out.corr[j][i] = c;
        }
    return out;
}

double frobenius_gap(const CfvcMatrix& a, const CfvcMatrix& b) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double d = a.corr[i][j] - b.corr[i][j];
            s += d * d;
        }
    return std::sqrt(s);
}

namespace {

template <typename F>
auto with_estimator_name(const char* name, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string(name) + ": " + e.what());
    }
}

} // namespace

StylizedFactReport gap_report(const ReturnSeries& real, const ReturnSeries& synth) {
    StylizedFactReport rep;

    const GpdFit gr = with_estimator_name("gpd", [&] { return fit_gpd_pot(real); });
    const GpdFit gs = with_estimator_name("gpd", [&] { return fit_gpd_pot(synth); });
    rep.gpd_gap = std::abs(gr.xi - gs.xi);

    const AcfVector ar = with_estimator_name("acf", [&] { return acf(abs_values(real)); });
    const AcfVector as = with_estimator_name("acf", [&] { return acf(abs_values(synth)); });
    double mse = 0.0;
    for (int k = 0; k < ar.lags; ++k) {
        const double d = ar.values[k] - as.values[k];
        mse += d * d;
    }
    rep.acf_gap = mse / ar.lags;

    const double lr = with_estimator_name("leverage", [&] { return leverage_corr(real); });
    const double ls = with_estimator_name("leverage", [&] { return leverage_corr(synth); });
    rep.leverage_gap = std::abs(lr - ls);

    const CfvcMatrix cr = with_estimator_name("cfvc", [&] { return cfvc_matrix(real); });
    const CfvcMatrix cs = with_estimator_name("cfvc", [&] { return cfvc_matrix(synth); });
    rep.cfvc_gap = frobenius_gap(cr, cs);

    return rep;
}

StylizedFactReport multi_seed_gap(const ReturnSeries& real,
                                  const std::vector<ReturnSeries>& synth_runs) {
    if (synth_runs.empty())
        throw std::invalid_argument("multi_seed_gap needs at least one synthetic run");
    StylizedFactReport acc;
    for (const ReturnSeries& s : synth_runs) {
        const StylizedFactReport rep = gap_report(real, s);
        acc.gpd_gap += rep.gpd_gap;
        acc.acf_gap += rep.acf_gap;
        acc.leverage_gap += rep.leverage_gap;
        acc.cfvc_gap += rep.cfvc_gap;
    }
    const auto n = static_cast<double>(synth_runs.size());
    acc.gpd_gap /= n;
    acc.acf_gap /= n;
    acc.leverage_gap /= n;
    acc.cfvc_gap /= n;
    return acc;
}

std::vector<double> tail_excesses(const ReturnSeries& r, double quantile, Tail tail) {
    std::vector<double> xs = r.values;
    if (tail == Tail::Lower)
        for (double& x : xs) x = -x;
    const double u = lower_quantile(xs, quantile);
    std::vector<double> y;
    for (double x : xs)
        if (x > u) y.push_back(x - u);
    std::sort(y.begin(), y.end());
    return y;
}

RunEvaluation evaluate_paths(const ReturnSeries& real,
                             const std::vector<ReturnSeries>& paths,
                             const EvalConfig& cfg) {
    if (paths.empty()) throw std::invalid_argument("evaluate_paths needs at least one path");

    auto side = [&](const ReturnSeries& s, const char* label) {
        SideEstimates est;
        est.tail = with_estimator_name(label, [&] {
            return fit_gpd_pot(s, cfg.tail_quantile, cfg.tail);
        });
        est.tail_excess = tail_excesses(s, cfg.tail_quantile, cfg.tail);
        est.acf_abs = acf(abs_values(s), cfg.acf_lags);
        est.leverage = leverage_corr(s, cfg.lev_horizon);
        est.cfvc = cfvc_matrix(s);
        return est;
    };

    RunEvaluation ev;
    ev.real = side(real, "gpd(real)");

    ReturnSeries pooled;
    pooled.origin = paths.front().origin;
    for (const ReturnSeries& p : paths)
        pooled.values.insert(pooled.values.end(), p.values.begin(), p.values.end());
    ev.synth.tail = with_estimator_name("gpd(synth)", [&] {
        return fit_gpd_pot(pooled, cfg.tail_quantile, cfg.tail);
    });
    ev.synth.tail_excess = tail_excesses(pooled, cfg.tail_quantile, cfg.tail);

    ev.synth.acf_abs.lags = cfg.acf_lags;
    ev.synth.acf_abs.values.assign(static_cast<std::size_t>(cfg.acf_lags), 0.0);
    ev.synth.leverage = 0.0;
    for (const ReturnSeries& p : paths) {
        const AcfVector a = acf(abs_values(p), cfg.acf_lags);
        for (int k = 0; k < cfg.acf_lags; ++k)
            ev.synth.acf_abs.values[static_cast<std::size_t>(k)] +=
                a.values[static_cast<std::size_t>(k)];
        ev.synth.leverage += leverage_corr(p, cfg.lev_horizon);
        const CfvcMatrix m = cfvc_matrix(p);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) ev.synth.cfvc.corr[i][j] += m.corr[i][j];
    }
    const double np = static_cast<double>(paths.size());
    for (double& v : ev.synth.acf_abs.values) v /= np;
    ev.synth.leverage /= np;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) ev.synth.cfvc.corr[i][j] /= np;

    ev.gaps.gpd_gap = std::abs(ev.real.tail.xi - ev.synth.tail.xi);
    double mse = 0.0;
    for (int k = 0; k < cfg.acf_lags; ++k) {
        const double d = ev.real.acf_abs.values[static_cast<std::size_t>(k)] -
                         ev.synth.acf_abs.values[static_cast<std::size_t>(k)];
        mse += d * d;
    }
    ev.gaps.acf_gap = mse / cfg.acf_lags;
    ev.gaps.leverage_gap = std::abs(ev.real.leverage - ev.synth.leverage);
    ev.gaps.cfvc_gap = frobenius_gap(ev.real.cfvc, ev.synth.cfvc);
    return ev;
}

} // namespace sfag
