#pragma once

#include "sfag/losses.hpp"
#include "sfag/model.hpp"
#include "sfag/rng.hpp"
#include "sfag/series.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace sfag {

struct TrainConfig {
    int iterations = 2000;      // generator iterations (desk-scale default)
    int n_critic = 5;
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double lambda_gp = 10.0;
    int batch = 24;
    double anneal_frac = 0.20;
    LossWeights weights;
    AlignmentConfig alignment;
    std::uint64_t seed = 0;
    int checkpoint_every = 500;

    void validate() const;
};

struct AdamState {
    std::vector<ad::Tensor> m, v;
    long step = 0;

    static AdamState like(const ModelParams& p);
};

/// One row per generator iteration. wall_seconds is informational only and
/// is never serialized, so logs from identical runs stay bit-identical.
struct TrainLogRecord {
    int iteration = 0;
    double critic_loss = 0.0;
    double wasserstein = 0.0;
    double penalty = 0.0;
    double gen_adv = 0.0;
    double gpd = 0.0, acf = 0.0, lev = 0.0, cfvc = 0.0;
    double total = 0.0;
    double anneal = 0.0;
    int tail_skipped = 0;
    double wall_seconds = 0.0;
};

struct TrainHooks {
    std::function<void(const TrainLogRecord&)> on_record;
    std::function<void(int, const ModelParams&, const ModelParams&)> on_checkpoint;
};

struct TrainResult {
    ModelParams generator;
    ModelParams critic;
    std::vector<TrainLogRecord> log;
    std::optional<RealTargets> targets;
};

/// Standard bias-corrected Adam over the flat parameter arrays.
void adam_step(ModelParams& params, std::span<const ad::Tensor> grads, AdamState& state,
               double lr, double beta1, double beta2, double eps = 1e-8);

/// Linear ramp 0 -> 1 over the first frac*total iterations, then 1.
double anneal_coeff(int iter, int total, double frac);

/// Uniformly random contiguous windows, sampled with replacement.
ad::Tensor sample_training_windows(const ReturnSeries& r, int seq_len, int batch, Rng& rng);

/// Full SFAG loop: per generator iteration, n_critic critic updates on the
/// WGAN-GP objective, then one generator update on the annealed joint loss.
/// RNG draw order (fixed; the baseline-equivalence test depends on it):
/// init generator then critic; per critic step window starts, latent z
/// (row-major), interpolation u; per generator step latent z.
TrainResult train(const ReturnSeries& real, const ArchSpec& arch, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

/// Adversarial-only reference loop. Identical draw order and update
/// arithmetic; the alignment losses are never built.
TrainResult train_wgan_gp(const ReturnSeries& real, const ArchSpec& arch,
                          const TrainConfig& cfg, const TrainHooks& hooks = {});

} // namespace sfag
