#pragma once

#include "sfag/rng.hpp"
#include "sfag/tape.hpp"
#include "sfag/tensor.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfag {

/// Network sizes. seq_len >= 122 so the 120-day vol window always fits.
struct ArchSpec {
    int latent_dim = 100;
    int seq_len = 256;
    std::vector<int> gen_hidden = {256, 512};
    std::vector<int> critic_hidden = {512, 256};
    double leaky_slope = 0.2;

    void validate() const;
    bool operator==(const ArchSpec&) const = default;
};

enum class ModelRole : std::uint8_t { Generator = 0, Critic = 1 };

/// Flat parameter arrays in layer order: W0, b0, W1, b1, ... plus, for the
/// generator, a trailing per-output gain row.
struct ModelParams {
    ArchSpec arch;
    ModelRole role = ModelRole::Generator;
    std::vector<ad::Tensor> arrays;

    std::size_t total_size() const;
};

/// Generator: latent -> hidden (tanh) -> seq_len linear, scaled elementwise
/// by a learnable gain. Gain starts at the target return scale so early
/// samples are already in a sane range.
ModelParams init_generator(const ArchSpec& arch, Rng& rng, double output_gain);

/// Critic: seq_len -> hidden (leaky relu) -> 1 linear.
ModelParams init_critic(const ArchSpec& arch, Rng& rng);

/// Tape-graph forward passes. `params` are tape values (inputs or constants)
/// in the same order as ModelParams::arrays.
ad::Value generator_forward(ad::Tape& tape, const ArchSpec& arch,
                            std::span<const ad::Value> params, ad::Value z);
ad::Value critic_forward(ad::Tape& tape, const ArchSpec& arch,
                         std::span<const ad::Value> params, ad::Value x);

std::vector<ad::Value> params_as_inputs(ad::Tape& tape, const ModelParams& p);
std::vector<ad::Value> params_as_constants(ad::Tape& tape, const ModelParams& p);

/// Pure forward passes over plain tensors.
ad::Tensor generate(const ModelParams& gen, const ad::Tensor& z);
ad::Tensor criticize(const ModelParams& critic, const ad::Tensor& x);

struct CheckpointError : std::runtime_error {
    enum class Kind { Io, Corrupt, UnsupportedVersion, SizeMismatch };
    Kind kind;
    CheckpointError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Versioned binary checkpoint (.sfag): magic, schema version, architecture,
/// then little-endian IEEE doubles per array. Round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

} // namespace sfag
