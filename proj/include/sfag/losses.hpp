#pragma once

#include "sfag/model.hpp"
#include "sfag/series.hpp"
#include "sfag/tape.hpp"

#include <array>
#include <span>
#include <vector>

namespace sfag {

/// Stylized-fact targets measured once on the real series and held fixed
/// during training. Computed with the same differentiable functionals the
/// losses use, so a generator matching the real data scores near zero.
struct RealTargets {
    double xi_tail = 0.0;
    std::vector<double> acf_sq;                    // lags 1..K of r^2
    double leverage = 0.0;
    std::array<std::array<double, 4>, 4> cfvc{};   // windows 5/20/60/120
};

struct LossWeights {
    double gpd = 1.0;
    double acf = 1.0;
    double lev = 1.0;
    double cfvc = 1.0;
    double gp = 10.0;   // gradient penalty coefficient
};

struct AlignmentConfig {
    int acf_lags = 20;
    int lev_horizon = 20;
    double tail_q = 0.95;       // per-sequence quantile of -r for the tail proxy
    int min_tail_exceed = 5;    // below this a sequence is skipped
};

/// Sequences whose loss-side tail proxy could not be formed (too few
/// exceedances, or a non-positive threshold early in training).
struct TailSkipStats {
    int skipped = 0;
    int used = 0;
    bool active() const { return used > 0; }
};

// Differentiable alignment losses on a generated batch r_hat [batch x seq_len].
// Each is a scalar node on the caller's tape.
ad::Value loss_gpd(ad::Tape& tape, ad::Value r_hat, double xi_real,
                   const AlignmentConfig& cfg, TailSkipStats* stats = nullptr);
ad::Value loss_acf(ad::Tape& tape, ad::Value r_hat, std::span<const double> acf_real);
ad::Value loss_leverage(ad::Tape& tape, ad::Value r_hat, double lev_real, int horizon);
ad::Value loss_cfvc(ad::Tape& tape, ad::Value r_hat,
                    const std::array<std::array<double, 4>, 4>& cfvc_real);

struct AdversarialLosses {
    ad::Value critic_loss;   // wasserstein + gp * penalty
    ad::Value gen_loss;      // -E[D(r_hat)]
    ad::Value wasserstein;   // E[D(r_hat)] - E[D(r)]
    ad::Value penalty;       // mean (||grad_xhat D||_2 - 1)^2
};

/// Builds both WGAN-GP objectives on one tape. `critic_params` must be tape
/// values for the critic arrays; `interp_u` holds one uniform draw per row of
/// the batch for the interpolation points x_hat = u r + (1-u) r_hat.
AdversarialLosses loss_adversarial(ad::Tape& tape, const ArchSpec& arch,
                                   std::span<const ad::Value> critic_params,
                                   const ad::Tensor& r_real, const ad::Tensor& r_hat,
                                   std::span<const double> interp_u, double lambda_gp);

struct SfagLossParts {
    ad::Value total;
    ad::Value adv;
    ad::Value gpd, acf, lev, cfvc;   // absent components alias `adv`
    bool has_gpd = false, has_acf = false, has_lev = false, has_cfvc = false;
    TailSkipStats tail;
};

/// Full generator objective: adversarial term plus annealed alignment terms.
/// Components with zero effective weight are not built at all.
SfagLossParts loss_sfag(ad::Tape& tape, ad::Value r_hat, ad::Value gen_adv,
                        const RealTargets& targets, const LossWeights& weights,
                        double anneal, const AlignmentConfig& cfg);

/// Measures targets on deterministic stride-spaced windows of the real series.
RealTargets compute_real_targets(const ReturnSeries& real, int seq_len,
                                 const AlignmentConfig& cfg);

// Shared differentiable statistics (exposed for tests).
ad::Value rolling_std_node(ad::Tape& tape, ad::Value x, int window);
ad::Value row_pearson_node(ad::Tape& tape, ad::Value a, ad::Value b);

} // namespace sfag
