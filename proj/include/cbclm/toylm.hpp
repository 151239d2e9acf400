// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cbclm/errors.hpp"
#include "cbclm/rng.hpp"
#include "cbclm/sampler.hpp"

namespace cbclm {

// Minimal row-major matrix; all model math below is written against it
// directly.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
};

// Fixed-context feedforward language model: the probability of a token is
// conditioned on exactly the `context_size` tokens before it.
struct ModelConfig {
    int context_size = 3;
    int embed_dim = 16;
    int hidden_dim = 32;
    int vocab_size = 0;
    double learning_rate = 0.1;

    void validate() const {
        if (context_size < 1) throw config_error("context_size must be >= 1");
        if (embed_dim < 1) throw config_error("embed_dim must be >= 1");
        if (hidden_dim < 1) throw config_error("hidden_dim must be >= 1");
        if (vocab_size < 1) throw config_error("vocab_size must be >= 1");
        if (!(learning_rate > 0)) throw config_error("learning_rate must be > 0");
    }
};

struct ModelParams {
    Mat embedding;   // vocab_size x embed_dim
    Mat w1;          // (context_size * embed_dim) x hidden_dim
    std::vector<double> b1;
    Mat w2;          // hidden_dim x vocab_size
    std::vector<double> b2;

    static ModelParams zeros(const ModelConfig& cfg) {
        ModelParams p;
        const auto v = static_cast<std::size_t>(cfg.vocab_size);
        const auto e = static_cast<std::size_t>(cfg.embed_dim);
        const auto h = static_cast<std::size_t>(cfg.hidden_dim);
        const auto x = static_cast<std::size_t>(cfg.context_size) * e;
        p.embedding = Mat(v, e);
        p.w1 = Mat(x, h);
        p.b1.assign(h, 0.0);
        p.w2 = Mat(h, v);
        p.b2.assign(v, 0.0);
        return p;
    }
};

using Gradients = ModelParams;

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
inline ModelParams init_params(const ModelConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    ModelParams p = ModelParams::zeros(cfg);
    const auto fill = [&rng](Mat& m, double fan_in) {
        const double bound = 1.0 / std::sqrt(fan_in);
        for (double& w : m.data) w = uniform_real(rng, -bound, bound);
    };
    fill(p.embedding, static_cast<double>(cfg.embed_dim));
    fill(p.w1, static_cast<double>(cfg.context_size * cfg.embed_dim));
    fill(p.w2, static_cast<double>(cfg.hidden_dim));
    return p;
}

namespace detail {

// h = tanh(x W1 + b1) for the concatenated context embedding x.
inline void hidden_forward(const ModelConfig& cfg, const ModelParams& p,
                           std::span<const std::int32_t> context, std::vector<double>& h) {
    const auto e = static_cast<std::size_t>(cfg.embed_dim);
    const auto hd = static_cast<std::size_t>(cfg.hidden_dim);
    h.assign(hd, 0.0);
    for (std::size_t m = 0; m < context.size(); ++m) {
        const auto id = context[m];
        if (id < 0 || id >= cfg.vocab_size)
            throw data_error("token id " + std::to_string(id) + " out of range for vocab " +
                             std::to_string(cfg.vocab_size));
        const double* emb = p.embedding.row(static_cast<std::size_t>(id));
        for (std::size_t d = 0; d < e; ++d) {
            const double x = emb[d];
            const double* w = p.w1.row(m * e + d);
            for (std::size_t j = 0; j < hd; ++j) h[j] += x * w[j];
        }
    }
    for (std::size_t j = 0; j < hd; ++j) h[j] = std::tanh(h[j] + p.b1[j]);
}

// p = softmax(h W2 + b2), numerically stabilized.
inline void output_forward(const ModelConfig& cfg, const ModelParams& p,
                           const std::vector<double>& h, std::vector<double>& probs) {
    const auto v = static_cast<std::size_t>(cfg.vocab_size);
    const auto hd = static_cast<std::size_t>(cfg.hidden_dim);
    probs.assign(p.b2.begin(), p.b2.end());
    for (std::size_t j = 0; j < hd; ++j) {
        const double hj = h[j];
        const double* w = p.w2.row(j);
        for (std::size_t k = 0; k < v; ++k) probs[k] += hj * w[k];
    }
    double zmax = probs[0];
    for (double z : probs) zmax = std::max(zmax, z);
    double sum = 0.0;
    for (double& z : probs) {
        z = std::exp(z - zmax);
        sum += z;
    }
    for (double& z : probs) z /= sum;
}

} // namespace detail

inline std::vector<double> forward(const ModelConfig& cfg, const ModelParams& params,
                                   std::span<const std::int32_t> context) {
    if (context.size() != static_cast<std::size_t>(cfg.context_size))
        throw data_error("forward expects exactly " + std::to_string(cfg.context_size) +
                         " context ids, got " + std::to_string(context.size()));
    std::vector<double> h, probs;
    detail::hidden_forward(cfg, params, context, h);
    detail::output_forward(cfg, params, h, probs);
    return probs;
}

struct BatchGradients {
    double loss = 0.0;
    std::size_t positions = 0;
    Gradients grads;
};

namespace detail {

// Shared walk over a batch's scoreable positions: a position contributes
// when its target is unmasked and its full context window is PAD-free.
template <typename Visit>
std::size_t for_each_position(const ModelConfig& cfg, const Batch& batch, Visit&& visit) {
    const auto ctx = static_cast<std::size_t>(cfg.context_size);
    std::size_t visited = 0;
    for (std::size_t r = 0; r < batch.rows; ++r) {
        for (std::size_t i = ctx; i < batch.cols; ++i) {
            if (!batch.mask(r, i)) continue;
            bool clean = true;
            for (std::size_t j = i - ctx; j < i; ++j) {
                if (!batch.mask(r, j)) {
                    clean = false;
                    break;
                }
            }
            if (!clean) continue;
            visit(std::span<const std::int32_t>(&batch.token_ids[r * batch.cols + i - ctx], ctx),
                  batch.id(r, i));
            ++visited;
        }
    }
    return visited;
}

} // namespace detail

// Mean negative log-likelihood over unmasked positions whose context is
// PAD-free.
inline double batch_loss(const ModelConfig& cfg, const ModelParams& params,
                         const Batch& batch) {
    std::vector<double> h, probs;
    double total = 0.0;
    const std::size_t count =
        detail::for_each_position(cfg, batch, [&](auto context, std::int32_t target) {
            detail::hidden_forward(cfg, params, context, h);
            detail::output_forward(cfg, params, h, probs);
            total -= std::log(probs[static_cast<std::size_t>(target)]);
        });
    if (count == 0) throw data_error("degenerate batch: no scoreable positions");
    return total / static_cast<double>(count);
}

// Loss and exact analytic gradients in one pass. Accumulation order is the
// batch's row-major position order, so results are reproducible.
inline BatchGradients batch_gradients(const ModelConfig& cfg, const ModelParams& params,
                                      const Batch& batch) {
    const auto e = static_cast<std::size_t>(cfg.embed_dim);
    const auto hd = static_cast<std::size_t>(cfg.hidden_dim);
    const auto v = static_cast<std::size_t>(cfg.vocab_size);

    BatchGradients out;
    out.grads = ModelParams::zeros(cfg);
    std::vector<double> h, probs, da(hd);

    const std::size_t count = detail::for_each_position(
        cfg, batch, [&](std::span<const std::int32_t> context, std::int32_t target) {
            detail::hidden_forward(cfg, params, context, h);
            detail::output_forward(cfg, params, h, probs);
            out.loss -= std::log(probs[static_cast<std::size_t>(target)]);

            // dz = p - onehot(target), consumed in place
            probs[static_cast<std::size_t>(target)] -= 1.0;

            for (std::size_t j = 0; j < hd; ++j) {
                const double* w = params.w2.row(j);
                double* gw = out.grads.w2.row(j);
                const double hj = h[j];
                double dh = 0.0;
                for (std::size_t k = 0; k < v; ++k) {
                    gw[k] += hj * probs[k];
                    dh += w[k] * probs[k];
                }
                da[j] = dh * (1.0 - hj * hj);
            }
            for (std::size_t k = 0; k < v; ++k) out.grads.b2[k] += probs[k];
            for (std::size_t j = 0; j < hd; ++j) out.grads.b1[j] += da[j];

            for (std::size_t m = 0; m < context.size(); ++m) {
                const auto id = static_cast<std::size_t>(context[m]);
                const double* emb = params.embedding.row(id);
                double* gemb = out.grads.embedding.row(id);
                for (std::size_t d = 0; d < e; ++d) {
                    const std::size_t xi = m * e + d;
                    const double* w = params.w1.row(xi);
                    double* gw = out.grads.w1.row(xi);
                    const double x = emb[d];
                    double dx = 0.0;
                    for (std::size_t j = 0; j < hd; ++j) {
                        gw[j] += x * da[j];
                        dx += w[j] * da[j];
                    }
                    gemb[d] += dx;
                }
            }
        });
    if (count == 0) throw data_error("degenerate batch: no scoreable positions");

    const double scale = 1.0 / static_cast<double>(count);
    out.loss *= scale;
    out.positions = count;
    for (double& g : out.grads.embedding.data) g *= scale;
    for (double& g : out.grads.w1.data) g *= scale;
    for (double& g : out.grads.b1) g *= scale;
    for (double& g : out.grads.w2.data) g *= scale;
    for (double& g : out.grads.b2) g *= scale;
    return out;
}

inline Gradients backward(const ModelConfig& cfg, const ModelParams& params,
                          const Batch& batch) {
    return batch_gradients(cfg, params, batch).grads;
}

inline void sgd_step(ModelParams& params, const Gradients& grads, double learning_rate) {
    const auto apply = [learning_rate](std::vector<double>& theta,
                                       const std::vector<double>& g) {
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= learning_rate * g[i];
    };
    apply(params.embedding.data, grads.embedding.data);
    apply(params.w1.data, grads.w1.data);
    apply(params.b1, grads.b1);
    apply(params.w2.data, grads.w2.data);
    apply(params.b2, grads.b2);
}

// exp(mean NLL) over every position with a full context, one pass over the
// unpadded dataset.
inline double perplexity(const ModelConfig& cfg, const ModelParams& params,
                         const std::vector<std::vector<std::int32_t>>& dataset) {
    const auto ctx = static_cast<std::size_t>(cfg.context_size);
    std::vector<double> h, probs;
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& ids : dataset) {
        if (ids.size() <= ctx) continue;
        for (std::size_t i = ctx; i < ids.size(); ++i) {
            detail::hidden_forward(cfg, params, {ids.data() + i - ctx, ctx}, h);
            detail::output_forward(cfg, params, h, probs);
            total -= std::log(probs[static_cast<std::size_t>(ids[i])]);
            ++count;
        }
    }
    if (count == 0) throw data_error("perplexity undefined: no scoreable positions");
    return std::exp(total / static_cast<double>(count));
}

// ---------------------------------------------------------------------------
// Checkpoint: versioned little-endian binary dump of config + matrices with
// an FNV-1a checksum. Round-trips bit-exactly.

namespace detail {

constexpr char checkpoint_magic[4] = {'C', 'B', 'L', 'M'};
constexpr std::uint32_t checkpoint_version = 1;

inline std::uint64_t fnv1a(const unsigned char* bytes, std::size_t n,
                           std::uint64_t hash = 0xcbf29ce484222325ULL) {
    for (std::size_t i = 0; i < n; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

template <typename T>
void put(std::string& buf, const T& value) {
    const auto* p = reinterpret_cast<const char*>(&value);
    buf.append(p, sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t& at, const std::string& path) {
    if (at + sizeof(T) > buf.size())
        throw data_error("corrupt checkpoint (truncated): " + path);
    T value;
    std::memcpy(&value, buf.data() + at, sizeof(T));
    at += sizeof(T);
    return value;
}

inline void put_doubles(std::string& buf, const std::vector<double>& v) {
    buf.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

inline void get_doubles(const std::string& buf, std::size_t& at, std::vector<double>& v,
                        const std::string& path) {
    const std::size_t bytes = v.size() * sizeof(double);
    if (at + bytes > buf.size())
        throw data_error("corrupt checkpoint (truncated): " + path);
    std::memcpy(v.data(), buf.data() + at, bytes);
    at += bytes;
}

} // namespace detail

inline void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                            const ModelParams& params) {
    std::string payload;
    detail::put(payload, std::int32_t{cfg.context_size});
    detail::put(payload, std::int32_t{cfg.embed_dim});
    detail::put(payload, std::int32_t{cfg.hidden_dim});
    detail::put(payload, std::int32_t{cfg.vocab_size});
    detail::put(payload, cfg.learning_rate);
    detail::put_doubles(payload, params.embedding.data);
    detail::put_doubles(payload, params.w1.data);
    detail::put_doubles(payload, params.b1);
    detail::put_doubles(payload, params.w2.data);
    detail::put_doubles(payload, params.b2);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write checkpoint: " + path);
    out.write(detail::checkpoint_magic, sizeof(detail::checkpoint_magic));
    const std::uint32_t version = detail::checkpoint_version;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t checksum =
        detail::fnv1a(reinterpret_cast<const unsigned char*>(payload.data()), payload.size());
    out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw data_error("write failure on checkpoint: " + path);
}

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open checkpoint: " + path);
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw data_error("read failure on checkpoint: " + path);

    std::size_t at = 0;
    if (blob.size() < sizeof(detail::checkpoint_magic) ||
        std::memcmp(blob.data(), detail::checkpoint_magic, sizeof(detail::checkpoint_magic)) != 0)
        throw data_error("corrupt checkpoint (bad magic): " + path);
    at += sizeof(detail::checkpoint_magic);
    const auto version = detail::get<std::uint32_t>(blob, at, path);
    if (version != detail::checkpoint_version)
        throw data_error("unsupported checkpoint version " + std::to_string(version) +
                         ": " + path);
    const auto stored_checksum = detail::get<std::uint64_t>(blob, at, path);
    const std::size_t payload_at = at;

    Checkpoint ck;
    ck.config.context_size = detail::get<std::int32_t>(blob, at, path);
    ck.config.embed_dim = detail::get<std::int32_t>(blob, at, path);
    ck.config.hidden_dim = detail::get<std::int32_t>(blob, at, path);
    ck.config.vocab_size = detail::get<std::int32_t>(blob, at, path);
    ck.config.learning_rate = detail::get<double>(blob, at, path);
    try {
        ck.config.validate();
    } catch (const config_error& e) {
        throw data_error("corrupt checkpoint (bad config): " + path + ": " + e.what());
    }
    ck.params = ModelParams::zeros(ck.config);
    detail::get_doubles(blob, at, ck.params.embedding.data, path);
    detail::get_doubles(blob, at, ck.params.w1.data, path);
    detail::get_doubles(blob, at, ck.params.b1, path);
    detail::get_doubles(blob, at, ck.params.w2.data, path);
    detail::get_doubles(blob, at, ck.params.b2, path);
    if (at != blob.size())
        throw data_error("corrupt checkpoint (trailing bytes): " + path);
    const std::uint64_t checksum = detail::fnv1a(
        reinterpret_cast<const unsigned char*>(blob.data() + payload_at), blob.size() - payload_at);
    if (checksum != stored_checksum)
        throw data_error("corrupt checkpoint (checksum mismatch): " + path);
    return ck;
}

} // namespace cbclm
