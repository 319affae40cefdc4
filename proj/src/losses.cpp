#include "sfag/losses.hpp"

#include "sfag/stylized_facts.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sfag {

using ad::Tape;
using ad::Tensor;
using ad::Value;

namespace {

// Rolling window sum over each row via cumulative-sum differences.
// [B x T] -> [B x (T-w+1)].
// Note: values returned by Tape::val are references into the tape's node
// store and die on the next push, so shapes are copied out up front here.
Value rolling_sum(Tape& t, Value x, int w) {
    const int rows = t.val(x).rows, cols = t.val(x).cols;
    if (w < 1 || w > cols)
        throw std::invalid_argument("rolling window " + std::to_string(w) +
                                    " out of range for " + t.val(x).shape_str());
    const int len = cols - w + 1;
    Value c = t.cumsum(x);
    Value hi = t.slice_cols(c, w - 1, len);
    if (len == 1) return hi;
    Value lo = t.concat_cols(t.constant(Tensor::zeros(rows, 1)),
                             t.slice_cols(c, 0, len - 1));
    return t.sub(hi, lo);
}

Value mean_of_rows(Tape& t, const std::vector<Value>& terms) {
    Value acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = t.add(acc, terms[i]);
    return t.scale(acc, 1.0 / static_cast<double>(terms.size()));
}

// Batch-mean squared-return autocorrelations at lags 1..K, one scalar each.
// Per row: rho_k = sum_t c_t c_{t+k} / sum_t c_t^2 with c the centered r^2.
std::vector<Value> acf_sq_nodes(Tape& t, Value r, int lags) {
    const int n = t.val(r).cols;
    if (lags < 1) throw std::invalid_argument("acf lags must be >= 1");
    if (n <= lags + 1)
        throw std::invalid_argument("sequence length " + std::to_string(n) +
                                    " too short for " + std::to_string(lags) + " acf lags");
    Value x = t.square(r);
    Value m = t.scale(t.row_sum(x), 1.0 / static_cast<double>(n));
    Value c = t.sub(x, t.broadcast_col(m, n));
    Value denom = t.add_scalar(t.row_sum(t.square(c)), Tape::kEps);
    std::vector<Value> out;
    out.reserve(static_cast<std::size_t>(lags));
    for (int k = 1; k <= lags; ++k) {
        Value head = t.slice_cols(c, 0, n - k);
        Value tail = t.slice_cols(c, k, n - k);
        out.push_back(t.mean(t.div(t.row_sum(t.mul(head, tail)), denom)));
    }
    return out;
}

// Batch-mean correlation of r_t with the h-day realized vol starting at t+1.
Value leverage_stat_node(Tape& t, Value r, int horizon) {
    const int n = t.val(r).cols;
    if (horizon < 2) throw std::invalid_argument("leverage horizon must be >= 2");
    if (n - horizon < 2)
        throw std::invalid_argument("sequence length " + std::to_string(n) +
                                    " too short for leverage horizon " + std::to_string(horizon));
    Value vol = rolling_std_node(t, r, horizon);      // vol[t] covers [t, t+h-1]
    Value head = t.slice_cols(r, 0, n - horizon);
    Value fwd = t.slice_cols(vol, 1, n - horizon);    // window starting t+1
    return t.mean(row_pearson_node(t, head, fwd));
}

// Batch-mean vol-of-vol correlations for the six window pairs, end-aligned
// so every vol series covers the same dates. Order: (0,1),(0,2),...,(2,3).
std::vector<Value> cfvc_nodes(Tape& t, Value r) {
    const auto& ws = CfvcMatrix::kWindows;
    const int cols = t.val(r).cols;
    const int wmax = ws.back();
    if (cols < wmax + 2)
        throw std::invalid_argument("sequence length " + std::to_string(cols) +
                                    " too short for vol window " + std::to_string(wmax));
    const int len = cols - wmax + 1;
    std::array<Value, 4> vols{};
    for (std::size_t i = 0; i < ws.size(); ++i)
        vols[i] = t.slice_cols(rolling_std_node(t, r, ws[i]), wmax - ws[i], len);
    std::vector<Value> out;
    for (std::size_t i = 0; i < ws.size(); ++i)
        for (std::size_t j = i + 1; j < ws.size(); ++j)
            out.push_back(t.mean(row_pearson_node(t, vols[i], vols[j])));
    return out;
}

// Hill-type tail index of the loss tail, one term per usable sequence.
// Threshold and exceedance membership are picked from current values and
// treated as constants; gradients flow through the gathered entries.
Value hill_tail_node(Tape& t, Value r, double q, int min_exceed, TailSkipStats& stats) {
    const int batch = t.val(r).rows, n = t.val(r).cols;
    if (q <= 0.0 || q >= 1.0) throw std::invalid_argument("tail quantile must be in (0, 1)");
    if (min_exceed < 1) throw std::invalid_argument("min tail exceedances must be >= 1");
    Value w = t.neg(r);
    const Tensor wv = t.val(w); // copied: the loop below appends nodes
    const int k = std::max(1, static_cast<int>(std::floor(q * n)));
    std::vector<Value> terms;
    std::vector<double> sorted(static_cast<std::size_t>(n));
    for (int b = 0; b < batch; ++b) {
        const double* row = wv.data.data() + static_cast<std::size_t>(b) * n;
        std::copy(row, row + n, sorted.begin());
        std::sort(sorted.begin(), sorted.end());
        const double u = sorted[k - 1];
        if (!(u > 0.0)) {   // log-ratios need a positive threshold
            ++stats.skipped;
            continue;
        }
        std::vector<int> exceed;
        int u_idx = -1;
        for (int i = 0; i < n; ++i) {
            if (row[i] > u) exceed.push_back(i);
            else if (u_idx < 0 && row[i] == u) u_idx = i;
        }
        if (static_cast<int>(exceed.size()) < min_exceed) {
            ++stats.skipped;
            continue;
        }
        Value row_node = t.slice_rows(w, b, 1);
        Value u_node = t.broadcast_col(t.gather_cols(row_node, {u_idx}),
                                       static_cast<int>(exceed.size()));
        Value y = t.gather_cols(row_node, exceed);
        Value xi = t.scale(t.sum(t.log(t.div(y, u_node))),
                           1.0 / static_cast<double>(exceed.size()));
        terms.push_back(xi);
        ++stats.used;
    }
    if (terms.empty()) return t.constant(Tensor::scalar(0.0));
    return mean_of_rows(t, terms);
}

} // namespace

Value rolling_std_node(Tape& t, Value x, int window) {
    if (window < 2 || window > t.val(x).cols)
        throw std::invalid_argument("rolling std window " + std::to_string(window) +
                                    " out of range for " + t.val(x).shape_str());
    const double w = window;
    Value m = t.scale(rolling_sum(t, x, window), 1.0 / w);
    Value ex2 = t.scale(rolling_sum(t, t.square(x), window), 1.0 / w);
    Value var = t.scale(t.sub(ex2, t.square(m)), w / (w - 1.0));
    return t.sqrt(var);
}

Value row_pearson_node(Tape& t, Value a, Value b) {
    if (!t.val(a).same_shape(t.val(b)))
        throw std::invalid_argument("row_pearson shape mismatch: " + t.val(a).shape_str() +
                                    " vs " + t.val(b).shape_str());
    const int cols = t.val(a).cols;
    if (cols < 2) throw std::invalid_argument("row_pearson needs >= 2 columns");
    const double inv = 1.0 / static_cast<double>(cols);
    Value ca = t.sub(a, t.broadcast_col(t.scale(t.row_sum(a), inv), cols));
    Value cb = t.sub(b, t.broadcast_col(t.scale(t.row_sum(b), inv), cols));
    Value cov = t.row_sum(t.mul(ca, cb));
    Value denom = t.sqrt(t.mul(t.row_sum(t.square(ca)), t.row_sum(t.square(cb))));
    return t.div(cov, denom);
}

Value loss_gpd(Tape& tape, Value r_hat, double xi_real, const AlignmentConfig& cfg,
               TailSkipStats* stats) {
    TailSkipStats local;
    Value xi = hill_tail_node(tape, r_hat, cfg.tail_q, cfg.min_tail_exceed, local);
    if (stats) *stats = local;
    if (!local.active()) return tape.constant(Tensor::scalar(0.0));
    return tape.abs_smooth(tape.add_scalar(xi, -xi_real));
}

Value loss_acf(Tape& tape, Value r_hat, std::span<const double> acf_real) {
    const int lags = static_cast<int>(acf_real.size());
    auto rho = acf_sq_nodes(tape, r_hat, lags);
    Value acc = tape.square(tape.add_scalar(rho[0], -acf_real[0]));
    for (int k = 1; k < lags; ++k)
        acc = tape.add(acc, tape.square(tape.add_scalar(rho[k], -acf_real[k])));
    return tape.scale(acc, 1.0 / static_cast<double>(lags));
}

Value loss_leverage(Tape& tape, Value r_hat, double lev_real, int horizon) {
    return tape.abs_smooth(tape.add_scalar(leverage_stat_node(tape, r_hat, horizon), -lev_real));
}

Value loss_cfvc(Tape& tape, Value r_hat,
                const std::array<std::array<double, 4>, 4>& cfvc_real) {
    auto ms = cfvc_nodes(tape, r_hat);
    Value acc{};
    std::size_t p = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j, ++p) {
            Value sq = tape.square(tape.add_scalar(ms[p], -cfvc_real[i][j]));
            acc = p == 0 ? sq : tape.add(acc, sq);
        }
    }
    // Frobenius norm of the full 4x4 difference; the diagonal is exact and
    // each off-diagonal entry appears twice.
    return tape.sqrt(tape.scale(acc, 2.0));
}

AdversarialLosses loss_adversarial(Tape& tape, const ArchSpec& arch,
                                   std::span<const ad::Value> critic_params,
                                   const Tensor& r_real, const Tensor& r_hat,
                                   std::span<const double> interp_u, double lambda_gp) {
    if (!r_real.same_shape(r_hat))
        throw std::invalid_argument("adversarial batches differ: real " + r_real.shape_str() +
                                    " vs generated " + r_hat.shape_str());
    if (static_cast<int>(interp_u.size()) != r_real.rows)
        throw std::invalid_argument("need one interpolation draw per batch row, got " +
                                    std::to_string(interp_u.size()) + " for " +
                                    std::to_string(r_real.rows) + " rows");
    if (lambda_gp < 0.0) throw std::invalid_argument("gradient penalty weight must be >= 0");

    Tensor mix(r_real.rows, r_real.cols);
    for (int b = 0; b < r_real.rows; ++b) {
        const double u = interp_u[static_cast<std::size_t>(b)];
        if (u < 0.0 || u > 1.0)
            throw std::invalid_argument("interpolation draw outside [0, 1] at row " +
                                        std::to_string(b));
        for (int c = 0; c < r_real.cols; ++c)
            mix.at(b, c) = u * r_real.at(b, c) + (1.0 - u) * r_hat.at(b, c);
    }

    // Rows pass through the critic independently, so grad of the summed
    // outputs w.r.t. the batch stacks the per-row input gradients.
    Value x_mix = tape.input(mix);
    Value d_mix = critic_forward(tape, arch, critic_params, x_mix);
    Value grad = tape.gradients(tape.sum(d_mix), std::span<const Value>(&x_mix, 1))[0];
    Value norm = tape.sqrt(tape.row_sum(tape.square(grad)));
    Value penalty = tape.mean(tape.square(tape.add_scalar(norm, -1.0)));

    Value mean_fake = tape.mean(critic_forward(tape, arch, critic_params, tape.constant(r_hat)));
    Value mean_real = tape.mean(critic_forward(tape, arch, critic_params, tape.constant(r_real)));

    AdversarialLosses out;
    out.wasserstein = tape.sub(mean_fake, mean_real);
    out.penalty = penalty;
    out.critic_loss = tape.add(out.wasserstein, tape.scale(penalty, lambda_gp));
    out.gen_loss = tape.neg(mean_fake);
    return out;
}

SfagLossParts loss_sfag(Tape& tape, Value r_hat, Value gen_adv, const RealTargets& targets,
                        const LossWeights& weights, double anneal, const AlignmentConfig& cfg) {
    if (anneal < 0.0 || anneal > 1.0)
        throw std::invalid_argument("anneal coefficient must be in [0, 1]");
    if (weights.gpd < 0.0 || weights.acf < 0.0 || weights.lev < 0.0 || weights.cfvc < 0.0)
        throw std::invalid_argument("alignment weights must be >= 0");

    SfagLossParts parts;
    parts.adv = gen_adv;
    parts.gpd = parts.acf = parts.lev = parts.cfvc = gen_adv;
    parts.total = gen_adv;

    auto on = [&](double lambda) { return anneal > 0.0 && lambda > 0.0; };
    if (on(weights.gpd)) {
        parts.gpd = loss_gpd(tape, r_hat, targets.xi_tail, cfg, &parts.tail);
        parts.has_gpd = true;
        if (parts.tail.active())
            parts.total = tape.add(parts.total, tape.scale(parts.gpd, anneal * weights.gpd));
    }
    if (on(weights.acf)) {
        parts.acf = loss_acf(tape, r_hat, targets.acf_sq);
        parts.has_acf = true;
        parts.total = tape.add(parts.total, tape.scale(parts.acf, anneal * weights.acf));
    }
    if (on(weights.lev)) {
        parts.lev = loss_leverage(tape, r_hat, targets.leverage, cfg.lev_horizon);
        parts.has_lev = true;
        parts.total = tape.add(parts.total, tape.scale(parts.lev, anneal * weights.lev));
    }
    if (on(weights.cfvc)) {
        parts.cfvc = loss_cfvc(tape, r_hat, targets.cfvc);
        parts.has_cfvc = true;
        parts.total = tape.add(parts.total, tape.scale(parts.cfvc, anneal * weights.cfvc));
    }
    return parts;
}

RealTargets compute_real_targets(const ReturnSeries& real, int seq_len,
                                 const AlignmentConfig& cfg) {
    const int n = static_cast<int>(real.values.size());
    if (seq_len < CfvcMatrix::kWindows.back() + 2)
        throw std::invalid_argument("seq_len " + std::to_string(seq_len) +
                                    " too short for stylized-fact windows");
    if (n < seq_len)
        throw std::invalid_argument("real series length " + std::to_string(n) +
                                    " shorter than seq_len " + std::to_string(seq_len));

    const int count = std::min(64, n - seq_len + 1);
    const int stride = count > 1 ? (n - seq_len) / (count - 1) : 0;
    Tensor batch(count, seq_len);
    for (int b = 0; b < count; ++b) {
        const int start = b * stride;
        for (int c = 0; c < seq_len; ++c)
            batch.at(b, c) = real.values[static_cast<std::size_t>(start + c)];
    }

    Tape tape;
    Value r = tape.constant(std::move(batch));

    RealTargets tg;
    TailSkipStats st;
    Value xi = hill_tail_node(tape, r, cfg.tail_q, cfg.min_tail_exceed, st);
    if (!st.active())
        throw std::invalid_argument("tail target unavailable: no real window had usable exceedances");
    tg.xi_tail = tape.val(xi).scalar_value();

    for (Value v : acf_sq_nodes(tape, r, cfg.acf_lags))
        tg.acf_sq.push_back(tape.val(v).scalar_value());
    tg.leverage = tape.val(leverage_stat_node(tape, r, cfg.lev_horizon)).scalar_value();

    auto ms = cfvc_nodes(tape, r);
    std::size_t p = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        tg.cfvc[i][i] = 1.0;
        for (std::size_t j = i + 1; j < 4; ++j, ++p) {
            const double v = tape.val(ms[p]).scalar_value();
            tg.cfvc[i][j] = v;
            tg.cfvc[j][i] = v;
        }
    }
    return tg;
}

} // namespace sfag
