#include "sfag/model.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace sfag {

using ad::Tape;
using ad::Tensor;
using ad::Value;

void ArchSpec::validate() const {
    if (latent_dim < 1) throw std::invalid_argument("latent_dim must be at least 1");
    if (seq_len < 122)
        throw std::invalid_argument("seq_len must be at least 122 to cover the 120-day window");
    if (gen_hidden.empty() || critic_hidden.empty())
        throw std::invalid_argument("hidden layer lists must be non-empty");
    for (int h : gen_hidden)
        if (h < 1) throw std::invalid_argument("generator hidden width must be positive");
    for (int h : critic_hidden)
        if (h < 1) throw std::invalid_argument("critic hidden width must be positive");
    if (!(leaky_slope > 0.0) || !(leaky_slope < 1.0))
        throw std::invalid_argument("leaky slope must be in (0,1)");
}

std::size_t ModelParams::total_size() const {
    std::size_t n = 0;
    for (const Tensor& t : arrays) n += t.data.size();
    return n;
}

namespace {

Tensor glorot_uniform(int fan_in, int fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor w(fan_in, fan_out);
    for (double& x : w.data) x = (2.0 * rng.uniform01() - 1.0) * limit;
    return w;
}

std::vector<int> layer_dims(const ArchSpec& arch, ModelRole role) {
    std::vector<int> dims;
    if (role == ModelRole::Generator) {
        dims.push_back(arch.latent_dim);
        for (int h : arch.gen_hidden) dims.push_back(h);
        dims.push_back(arch.seq_len);
    } else {
        dims.push_back(arch.seq_len);
        for (int h : arch.critic_hidden) dims.push_back(h);
        dims.push_back(1);
    }
    return dims;
}

} // namespace

ModelParams init_generator(const ArchSpec& arch, Rng& rng, double output_gain) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    p.role = ModelRole::Generator;
    const std::vector<int> dims = layer_dims(arch, ModelRole::Generator);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        p.arrays.push_back(glorot_uniform(dims[i], dims[i + 1], rng));
        p.arrays.push_back(Tensor::zeros(1, dims[i + 1]));
    }
    p.arrays.push_back(Tensor::full(1, arch.seq_len, output_gain));
    return p;
}

ModelParams init_critic(const ArchSpec& arch, Rng& rng) {
    arch.validate();
    ModelParams p;
    p.arch = arch;
    p.role = ModelRole::Critic;
    const std::vector<int> dims = layer_dims(arch, ModelRole::Critic);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        p.arrays.push_back(glorot_uniform(dims[i], dims[i + 1], rng));
        p.arrays.push_back(Tensor::zeros(1, dims[i + 1]));
    }
    return p;
}

Value generator_forward(Tape& tape, const ArchSpec& arch, std::span<const Value> params,
                        Value z) {
    const std::size_t n_layers = arch.gen_hidden.size() + 1;
    if (params.size() != 2 * n_layers + 1)
        throw std::invalid_argument("generator expects " + std::to_string(2 * n_layers + 1) +
                                    " parameter arrays, got " + std::to_string(params.size()));
    const int batch = tape.val(z).rows;
    Value h = z;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Value w = params[2 * l];
        const Value b = params[2 * l + 1];
        h = tape.add(tape.matmul(h, w), tape.broadcast_row(b, batch));
        if (l + 1 < n_layers) h = tape.tanh(h);
    }
    const Value gain = params.back();
    return tape.mul(h, tape.broadcast_row(gain, batch));
}

Value critic_forward(Tape& tape, const ArchSpec& arch, std::span<const Value> params, Value x) {
    const std::size_t n_layers = arch.critic_hidden.size() + 1;
    if (params.size() != 2 * n_layers)
        throw std::invalid_argument("critic expects " + std::to_string(2 * n_layers) +
                                    " parameter arrays, got " + std::to_string(params.size()));
    if (tape.val(x).cols != arch.seq_len)
        throw std::invalid_argument("critic input width " +
                                    std::to_string(tape.val(x).cols) +
                                    " does not match seq_len " + std::to_string(arch.seq_len));
    const int batch = tape.val(x).rows;
    Value h = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Value w = params[2 * l];
        const Value b = params[2 * l + 1];
        h = tape.add(tape.matmul(h, w), tape.broadcast_row(b, batch));
        if (l + 1 < n_layers) h = tape.leaky_relu(h, arch.leaky_slope);
    }
    return h; // [batch x 1]
}

std::vector<Value> params_as_inputs(Tape& tape, const ModelParams& p) {
    std::vector<Value> out;
    out.reserve(p.arrays.size());
    for (const Tensor& t : p.arrays) out.push_back(tape.input(t));
    return out;
}

std::vector<Value> params_as_constants(Tape& tape, const ModelParams& p) {
    std::vector<Value> out;
    out.reserve(p.arrays.size());
    for (const Tensor& t : p.arrays) out.push_back(tape.constant(t));
    return out;
}

Tensor generate(const ModelParams& gen, const Tensor& z) {
    if (gen.role != ModelRole::Generator)
        throw std::invalid_argument("generate called with non-generator parameters");
    if (z.cols != gen.arch.latent_dim)
        throw std::invalid_argument("latent width " + std::to_string(z.cols) +
                                    " does not match latent_dim " +
                                    std::to_string(gen.arch.latent_dim));
    Tape tape;
    const std::vector<Value> params = params_as_constants(tape, gen);
    const Value out = generator_forward(tape, gen.arch, params, tape.constant(z));
    return tape.val(out);
}

Tensor criticize(const ModelParams& critic, const Tensor& x) {
    if (critic.role != ModelRole::Critic)
        throw std::invalid_argument("criticize called with non-critic parameters");
    Tape tape;
    const std::vector<Value> params = params_as_constants(tape, critic);
    const Value out = critic_forward(tape, critic.arch, params, tape.constant(x));
    return tape.val(out);
}

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
    Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }

    void expect_magic(const char* magic) {
        need(4);
        if (std::memcmp(data_.data() + pos_, magic, 4) != 0)
            throw CheckpointError(CheckpointError::Kind::Corrupt,
                                  "corrupt checkpoint (bad magic): " + path_);
        pos_ += 4;
    }

    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > data_.size())
            throw CheckpointError(CheckpointError::Kind::Corrupt,
                                  "corrupt checkpoint (truncated): " + path_);
    }
    const std::string& data_;
    std::string path_;
    std::size_t pos_ = 0;
};

} // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::string buf;
    buf.reserve(64 + params.total_size() * 8);
    buf.append("SFAG", 4);
    put_u32(buf, kCheckpointVersion);
    put_u32(buf, static_cast<std::uint32_t>(params.role));
    put_u32(buf, static_cast<std::uint32_t>(params.arch.latent_dim));
    put_u32(buf, static_cast<std::uint32_t>(params.arch.seq_len));
    put_f64(buf, params.arch.leaky_slope);
    put_u32(buf, static_cast<std::uint32_t>(params.arch.gen_hidden.size()));
    for (int h : params.arch.gen_hidden) put_u32(buf, static_cast<std::uint32_t>(h));
    put_u32(buf, static_cast<std::uint32_t>(params.arch.critic_hidden.size()));
    for (int h : params.arch.critic_hidden) put_u32(buf, static_cast<std::uint32_t>(h));
    put_u32(buf, static_cast<std::uint32_t>(params.arrays.size()));
    for (const Tensor& t : params.arrays) {
        put_u32(buf, static_cast<std::uint32_t>(t.rows));
        put_u32(buf, static_cast<std::uint32_t>(t.cols));
    }
    for (const Tensor& t : params.arrays)
        for (double d : t.data) put_f64(buf, d);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot write checkpoint: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError(CheckpointError::Kind::Io, "short write: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot read checkpoint: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Reader r(data, path);
    r.expect_magic("SFAG");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw CheckpointError(CheckpointError::Kind::UnsupportedVersion,
                              "unsupported checkpoint version " + std::to_string(version) +
                                  " in " + path);

    ModelParams p;
    const std::uint32_t role = r.u32();
    if (role > 1)
        throw CheckpointError(CheckpointError::Kind::Corrupt,
                              "corrupt checkpoint (bad role): " + path);
    p.role = static_cast<ModelRole>(role);
    p.arch.latent_dim = static_cast<int>(r.u32());
    p.arch.seq_len = static_cast<int>(r.u32());
    p.arch.leaky_slope = r.f64();
    p.arch.gen_hidden.resize(r.u32());
    for (int& h : p.arch.gen_hidden) h = static_cast<int>(r.u32());
    p.arch.critic_hidden.resize(r.u32());
    for (int& h : p.arch.critic_hidden) h = static_cast<int>(r.u32());

    const std::uint32_t n_arrays = r.u32();
    std::vector<std::pair<int, int>> shapes;
    shapes.reserve(n_arrays);
    for (std::uint32_t i = 0; i < n_arrays; ++i) {
        const int rows = static_cast<int>(r.u32());
        const int cols = static_cast<int>(r.u32());
        if (rows <= 0 || cols <= 0)
            throw CheckpointError(CheckpointError::Kind::Corrupt,
                                  "corrupt checkpoint (bad array shape): " + path);
        shapes.emplace_back(rows, cols);
    }
    for (auto [rows, cols] : shapes) {
        Tensor t(rows, cols);
        for (double& d : t.data) d = r.f64();
        p.arrays.push_back(std::move(t));
    }
    if (!r.at_end())
        throw CheckpointError(CheckpointError::Kind::Corrupt,
                              "corrupt checkpoint (trailing bytes): " + path);

    // Cross-check array shapes against the declared architecture.
    try {
        p.arch.validate();
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(CheckpointError::Kind::Corrupt,
                              std::string("corrupt checkpoint (bad architecture): ") + e.what());
    }
    Rng dummy(0);
    const ModelParams ref = p.role == ModelRole::Generator
                                ? init_generator(p.arch, dummy, 1.0)
                                : init_critic(p.arch, dummy);
    if (ref.arrays.size() != p.arrays.size())
        throw CheckpointError(CheckpointError::Kind::SizeMismatch,
                              "checkpoint array count " + std::to_string(p.arrays.size()) +
                                  " does not match architecture (" +
                                  std::to_string(ref.arrays.size()) + "): " + path);
    for (std::size_t i = 0; i < ref.arrays.size(); ++i)
        if (!ref.arrays[i].same_shape(p.arrays[i]))
            throw CheckpointError(CheckpointError::Kind::SizeMismatch,
                                  "checkpoint array " + std::to_string(i) + " has shape " +
                                      p.arrays[i].shape_str() + ", expected " +
                                      ref.arrays[i].shape_str() + ": " + path);
    return p;
}

} // namespace sfag
