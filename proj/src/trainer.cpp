#include "sfag/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sfag {

using ad::Tape;
using ad::Tensor;
using ad::Value;

void TrainConfig::validate() const {
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (n_critic < 1) throw std::invalid_argument("n_critic must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("adam betas must lie in [0, 1)");
    if (lambda_gp < 0.0) throw std::invalid_argument("lambda_gp must be >= 0");
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    if (anneal_frac < 0.0 || anneal_frac > 1.0)
        throw std::invalid_argument("anneal_frac must be in [0, 1]");
    if (checkpoint_every < 1) throw std::invalid_argument("checkpoint_every must be >= 1");
}

AdamState AdamState::like(const ModelParams& p) {
    AdamState st;
    st.m.reserve(p.arrays.size());
    st.v.reserve(p.arrays.size());
    for (const Tensor& a : p.arrays) {
        st.m.push_back(Tensor::zeros(a.rows, a.cols));
        st.v.push_back(Tensor::zeros(a.rows, a.cols));
    }
    return st;
}

void adam_step(ModelParams& params, std::span<const Tensor> grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (grads.size() != params.arrays.size())
        throw std::invalid_argument("adam_step: " + std::to_string(grads.size()) +
                                    " gradients for " + std::to_string(params.arrays.size()) +
                                    " parameter arrays");
    if (state.m.size() != params.arrays.size())
        throw std::invalid_argument("adam_step: state does not match parameters");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.arrays.size(); ++i) {
        Tensor& p = params.arrays[i];
        const Tensor& g = grads[i];
        if (!p.same_shape(g))
            throw std::invalid_argument("adam_step: gradient " + g.shape_str() +
                                        " vs parameter " + p.shape_str() + " at array " +
                                        std::to_string(i));
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (int j = 0; j < p.numel(); ++j) {
            const double gj = g.data[static_cast<std::size_t>(j)];
            if (!std::isfinite(gj))
                throw std::invalid_argument("adam_step: non-finite gradient in array " +
                                            std::to_string(i));
            double& mj = m.data[static_cast<std::size_t>(j)];
            double& vj = v.data[static_cast<std::size_t>(j)];
            mj = beta1 * mj + (1.0 - beta1) * gj;
            vj = beta2 * vj + (1.0 - beta2) * gj * gj;
            p.data[static_cast<std::size_t>(j)] -=
                lr * (mj / bc1) / (std::sqrt(vj / bc2) + eps);
        }
    }
}

double anneal_coeff(int iter, int total, double frac) {
    if (total < 0 || iter < 0 || iter > total)
        throw std::invalid_argument("anneal iter " + std::to_string(iter) +
                                    " outside [0, " + std::to_string(total) + "]");
    if (frac < 0.0 || frac > 1.0)
        throw std::invalid_argument("anneal fraction must be in [0, 1]");
    // Rounded to a whole number of iterations so the ramp hits exactly 1.
    const double ramp = std::round(frac * static_cast<double>(total));
    if (ramp <= 0.0) return 1.0;
    return std::min(1.0, static_cast<double>(iter) / ramp);
}

Tensor sample_training_windows(const ReturnSeries& r, int seq_len, int batch, Rng& rng) {
    const int n = static_cast<int>(r.values.size());
    if (seq_len < 1 || batch < 1)
        throw std::invalid_argument("window shape must be positive");
    if (n < seq_len)
        throw std::invalid_argument("series length " + std::to_string(n) +
                                    " shorter than window " + std::to_string(seq_len));
    const std::uint64_t span = static_cast<std::uint64_t>(n - seq_len + 1);
    Tensor out(batch, seq_len);
    for (int b = 0; b < batch; ++b) {
        const int start = static_cast<int>(rng.uniform_int(span));
        for (int c = 0; c < seq_len; ++c)
            out.at(b, c) = r.values[static_cast<std::size_t>(start + c)];
    }
    return out;
}

namespace {

Tensor sample_latent(int batch, int dim, Rng& rng) {
    Tensor z(batch, dim);
    for (double& x : z.data) x = rng.normal();
    return z;
}

std::vector<Tensor> materialize(Tape& tape, const std::vector<Value>& vals) {
    std::vector<Tensor> out;
    out.reserve(vals.size());
    for (Value v : vals) out.push_back(tape.val(v));
    return out;
}

bool tensors_finite(const std::vector<Tensor>& ts) {
    for (const Tensor& t : ts)
        if (!t.all_finite()) return false;
    return true;
}

[[noreturn]] void abort_training(int iter, const std::string& component) {
    throw std::runtime_error("training aborted at iteration " + std::to_string(iter) +
                             ": non-finite gradient from " + component);
}

void require_window_supply(const ReturnSeries& real, int seq_len, int batch) {
    const int n = static_cast<int>(real.values.size());
    const int need = seq_len + batch - 1;
    if (n < need)
        throw std::invalid_argument("training series has " + std::to_string(n) +
                                    " observations; need at least " + std::to_string(need) +
                                    " for " + std::to_string(batch) + " windows of " +
                                    std::to_string(seq_len));
}

struct CriticStepStats {
    double loss = 0.0, wasserstein = 0.0, penalty = 0.0;
};

// One critic Adam update. Consumes, in order: batch window starts, latent z
// (row-major), one interpolation u per row.
CriticStepStats critic_step(const ReturnSeries& real, const ArchSpec& arch,
                            const TrainConfig& cfg, const ModelParams& gen,
                            ModelParams& critic, AdamState& cst, Rng& rng, int iter) {
    Tensor real_batch = sample_training_windows(real, arch.seq_len, cfg.batch, rng);
    Tensor z = sample_latent(cfg.batch, arch.latent_dim, rng);
    std::vector<double> u(static_cast<std::size_t>(cfg.batch));
    for (double& x : u) x = rng.uniform01();

    Tape tape;
    auto cp = params_as_inputs(tape, critic);
    auto gp = params_as_constants(tape, gen);
    Tensor fake = tape.val(generator_forward(tape, arch, gp, tape.constant(z)));
    AdversarialLosses adv = loss_adversarial(tape, arch, cp, real_batch, fake, u, cfg.lambda_gp);
    auto grads = materialize(tape, tape.gradients(adv.critic_loss, cp));

    CriticStepStats stats;
    stats.loss = tape.val(adv.critic_loss).scalar_value();
    stats.wasserstein = tape.val(adv.wasserstein).scalar_value();
    stats.penalty = tape.val(adv.penalty).scalar_value();

    if (!tensors_finite(grads)) {
        if (!std::isfinite(stats.wasserstein)) abort_training(iter, "critic wasserstein term");
        if (!std::isfinite(stats.penalty)) abort_training(iter, "gradient penalty");
        Tape probe;
        auto cp2 = params_as_inputs(probe, critic);
        AdversarialLosses adv2 =
            loss_adversarial(probe, arch, cp2, real_batch, fake, u, cfg.lambda_gp);
        if (!tensors_finite(materialize(probe, probe.gradients(adv2.wasserstein, cp2))))
            abort_training(iter, "critic wasserstein term");
        abort_training(iter, "gradient penalty");
    }
    adam_step(critic, grads, cst, cfg.lr, cfg.beta1, cfg.beta2);
    return stats;
}

struct GenGraph {
    std::vector<Value> params;
    Value r_hat;
    Value adv;
};

// Generator forward plus -E[D(r_hat)] with the critic frozen.
GenGraph gen_graph(Tape& tape, const ArchSpec& arch, const ModelParams& gen,
                   const ModelParams& critic, const Tensor& z) {
    GenGraph g;
    g.params = params_as_inputs(tape, gen);
    auto cp = params_as_constants(tape, critic);
    g.r_hat = generator_forward(tape, arch, g.params, tape.constant(z));
    g.adv = tape.neg(tape.mean(critic_forward(tape, arch, cp, g.r_hat)));
    return g;
}

TrainLogRecord make_record(int iter, const CriticStepStats& cs, double anneal) {
    TrainLogRecord rec;
    rec.iteration = iter;
    rec.critic_loss = cs.loss;
    rec.wasserstein = cs.wasserstein;
    rec.penalty = cs.penalty;
    rec.anneal = anneal;
    return rec;
}

void emit(TrainResult& out, const TrainHooks& hooks, const TrainConfig& cfg, int iter,
          TrainLogRecord rec) {
    out.log.push_back(rec);
    if (hooks.on_record) hooks.on_record(rec);
    if (hooks.on_checkpoint && iter % cfg.checkpoint_every == 0)
        hooks.on_checkpoint(iter, out.generator, out.critic);
}

} // namespace

TrainResult train(const ReturnSeries& real, const ArchSpec& arch, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
    arch.validate();
    cfg.validate();
    require_window_supply(real, arch.seq_len, cfg.batch);

    const LossWeights& w = cfg.weights;
    const bool aligned = w.gpd > 0.0 || w.acf > 0.0 || w.lev > 0.0 || w.cfvc > 0.0;

    TrainResult out;
    if (aligned) out.targets = compute_real_targets(real, arch.seq_len, cfg.alignment);

    Rng rng(cfg.seed);
    out.generator = init_generator(arch, rng, sample_std(real.values));
    out.critic = init_critic(arch, rng);
    AdamState gst = AdamState::like(out.generator);
    AdamState cst = AdamState::like(out.critic);

    const auto t0 = std::chrono::steady_clock::now();
    for (int iter = 1; iter <= cfg.iterations; ++iter) {
        CriticStepStats cs;
        for (int k = 0; k < cfg.n_critic; ++k)
            cs = critic_step(real, arch, cfg, out.generator, out.critic, cst, rng, iter);

        Tensor z = sample_latent(cfg.batch, arch.latent_dim, rng);
        const double a = anneal_coeff(iter, cfg.iterations, cfg.anneal_frac);

        Tape tape;
        GenGraph g = gen_graph(tape, arch, out.generator, out.critic, z);
        SfagLossParts parts;
        if (aligned) {
            parts = loss_sfag(tape, g.r_hat, g.adv, *out.targets, w, a, cfg.alignment);
        } else {
            parts.adv = parts.total = g.adv;
            parts.gpd = parts.acf = parts.lev = parts.cfvc = g.adv;
        }
        auto grads = materialize(tape, tape.gradients(parts.total, g.params));

        if (!tensors_finite(grads)) {
            if (!std::isfinite(tape.val(parts.adv).scalar_value()))
                abort_training(iter, "adversarial loss");
            if (parts.has_gpd && !std::isfinite(tape.val(parts.gpd).scalar_value()))
                abort_training(iter, "gpd loss");
            if (parts.has_acf && !std::isfinite(tape.val(parts.acf).scalar_value()))
                abort_training(iter, "acf loss");
            if (parts.has_lev && !std::isfinite(tape.val(parts.lev).scalar_value()))
                abort_training(iter, "leverage loss");
            if (parts.has_cfvc && !std::isfinite(tape.val(parts.cfvc).scalar_value()))
                abort_training(iter, "cfvc loss");
            // Values are finite, so probe each component's gradient alone.
            auto probe_bad = [&](auto build, const char* name) {
                Tape t2;
                GenGraph g2 = gen_graph(t2, arch, out.generator, out.critic, z);
                Value loss = build(t2, g2);
                if (!tensors_finite(materialize(t2, t2.gradients(loss, g2.params))))
                    abort_training(iter, name);
            };
            probe_bad([&](Tape&, GenGraph& g2) { return g2.adv; }, "adversarial loss");
            if (parts.has_gpd)
                probe_bad([&](Tape& t2, GenGraph& g2) {
                    return loss_gpd(t2, g2.r_hat, out.targets->xi_tail, cfg.alignment);
                }, "gpd loss");
            if (parts.has_acf)
                probe_bad([&](Tape& t2, GenGraph& g2) {
                    return loss_acf(t2, g2.r_hat, out.targets->acf_sq);
                }, "acf loss");
            if (parts.has_lev)
                probe_bad([&](Tape& t2, GenGraph& g2) {
                    return loss_leverage(t2, g2.r_hat, out.targets->leverage,
                                         cfg.alignment.lev_horizon);
                }, "leverage loss");
            if (parts.has_cfvc)
                probe_bad([&](Tape& t2, GenGraph& g2) {
                    return loss_cfvc(t2, g2.r_hat, out.targets->cfvc);
                }, "cfvc loss");
            abort_training(iter, "generator loss (unattributed)");
        }
        adam_step(out.generator, grads, gst, cfg.lr, cfg.beta1, cfg.beta2);

        TrainLogRecord rec = make_record(iter, cs, a);
        rec.gen_adv = tape.val(parts.adv).scalar_value();
        rec.total = tape.val(parts.total).scalar_value();
        if (parts.has_gpd) rec.gpd = tape.val(parts.gpd).scalar_value();
        if (parts.has_acf) rec.acf = tape.val(parts.acf).scalar_value();
        if (parts.has_lev) rec.lev = tape.val(parts.lev).scalar_value();
        if (parts.has_cfvc) rec.cfvc = tape.val(parts.cfvc).scalar_value();
        rec.tail_skipped = parts.tail.skipped;
        rec.wall_seconds = std::chrono::duration<double>(
            std::chrono::steady_clock::now() - t0).count();
        emit(out, hooks, cfg, iter, rec);
    }
    return out;
}

TrainResult train_wgan_gp(const ReturnSeries& real, const ArchSpec& arch,
                          const TrainConfig& cfg, const TrainHooks& hooks) {
    arch.validate();
    cfg.validate();
    require_window_supply(real, arch.seq_len, cfg.batch);

    TrainResult out;
    Rng rng(cfg.seed);
    out.generator = init_generator(arch, rng, sample_std(real.values));
    out.critic = init_critic(arch, rng);
    AdamState gst = AdamState::like(out.generator);
    AdamState cst = AdamState::like(out.critic);

    const auto t0 = std::chrono::steady_clock::now();
    for (int iter = 1; iter <= cfg.iterations; ++iter) {
        CriticStepStats cs;
        for (int k = 0; k < cfg.n_critic; ++k)
            cs = critic_step(real, arch, cfg, out.generator, out.critic, cst, rng, iter);

        Tensor z = sample_latent(cfg.batch, arch.latent_dim, rng);
        Tape tape;
        GenGraph g = gen_graph(tape, arch, out.generator, out.critic, z);
        auto grads = materialize(tape, tape.gradients(g.adv, g.params));
        if (!tensors_finite(grads)) abort_training(iter, "adversarial loss");
        adam_step(out.generator, grads, gst, cfg.lr, cfg.beta1, cfg.beta2);

        TrainLogRecord rec = make_record(iter, cs, anneal_coeff(iter, cfg.iterations,
                                                                cfg.anneal_frac));
        rec.gen_adv = tape.val(g.adv).scalar_value();
        rec.total = rec.gen_adv;
        rec.wall_seconds = std::chrono::duration<double>(
            std::chrono::steady_clock::now() - t0).count();
        emit(out, hooks, cfg, iter, rec);
    }
    return out;
}

} // namespace sfag
