#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "decor/common.hpp"
#include "decor/envelope.hpp"
#include "decor/filterbank.hpp"
#include "decor/nn.hpp"
#include "decor/signal.hpp"

namespace decor {

struct EncoderConfig {
    int num_blocks = 9;
    int kernel_size = 15;
    int stride = 2;
    std::vector<int> channel_plan = {32, 64, 64, 128, 128, 256, 256, 512, 512};
    int pooled_length = 4;
    int latent_dim = 128;
};

struct DecoderConfig {
    int noise_dim = 32;   // v length
    int hidden_layers = 7;
    int hidden_width = 512;
    int num_filters = 10; // M
    int num_decays = 20;  // N
    double decay_time_lo_s = 0.05;
    double decay_time_hi_s = 3.0;
    int fir_order = 1023; // P
};

struct ModelConfig {
    double sample_rate = 48000.0;
    double head_s = 0.05;
    double tail_s = 0.95;
    EncoderConfig encoder;
    DecoderConfig decoder;

    std::size_t head_length() const {
        return static_cast<std::size_t>(std::llround(head_s * sample_rate));
    }
    std::size_t tail_length() const {
        return static_cast<std::size_t>(std::llround(tail_s * sample_rate));
    }
    TimeGrid tail_grid() const { return make_tail_grid(sample_rate, head_s, tail_s); }
};

struct EncoderBlock {
    Conv1D conv; // strided, biased
    Conv1D skip; // pointwise projection, unbiased
};

// Every trainable tensor of the completion model.
struct ModelParams {
    ModelConfig config;
    std::vector<EncoderBlock> blocks;
    Linear latent_proj;
    std::vector<Linear> mlp_trunk;
    Linear head_log_amp;
    Linear head_mask;
    std::vector<double> decay_times; // N, seconds
    std::vector<double> fir_taps;    // M x (P+1), row-major
    std::vector<double> mix_weights; // M

    std::size_t taps_per_band() const {
        return static_cast<std::size_t>(config.decoder.fir_order) + 1;
    }
    const double* band_taps(std::size_t i) const {
        return fir_taps.data() + i * taps_per_band();
    }
};

// Uniform view over the parameter tensors, in the fixed order used by
// gradients, optimizer state, and checkpoints.
struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double>* data;
    bool apply_weight_decay;
};

inline std::vector<TensorRef> tensor_refs(ModelParams& p) {
    std::vector<TensorRef> refs;
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        EncoderBlock& blk = p.blocks[i];
        const std::string base = "encoder.block" + std::to_string(i);
        refs.push_back({base + ".conv.w",
                        {static_cast<std::size_t>(blk.conv.out_ch),
                         static_cast<std::size_t>(blk.conv.in_ch),
                         static_cast<std::size_t>(blk.conv.kernel)},
                        &blk.conv.w,
                        true});
        refs.push_back({base + ".conv.b",
                        {static_cast<std::size_t>(blk.conv.out_ch)},
                        &blk.conv.b,
                        false});
        refs.push_back({base + ".skip.w",
                        {static_cast<std::size_t>(blk.skip.out_ch),
                         static_cast<std::size_t>(blk.skip.in_ch), 1},
                        &blk.skip.w,
                        true});
    }
    refs.push_back({"encoder.latent.w",
                    {static_cast<std::size_t>(p.latent_proj.out_dim),
                     static_cast<std::size_t>(p.latent_proj.in_dim)},
                    &p.latent_proj.w,
                    true});
    refs.push_back({"encoder.latent.b",
                    {static_cast<std::size_t>(p.latent_proj.out_dim)},
                    &p.latent_proj.b,
                    false});
    for (std::size_t i = 0; i < p.mlp_trunk.size(); ++i) {
        Linear& l = p.mlp_trunk[i];
        const std::string base = "decoder.mlp" + std::to_string(i);
        refs.push_back({base + ".w",
                        {static_cast<std::size_t>(l.out_dim), static_cast<std::size_t>(l.in_dim)},
                        &l.w,
                        true});
        refs.push_back({base + ".b", {static_cast<std::size_t>(l.out_dim)}, &l.b, false});
    }
    refs.push_back({"decoder.head_log_amp.w",
                    {static_cast<std::size_t>(p.head_log_amp.out_dim),
                     static_cast<std::size_t>(p.head_log_amp.in_dim)},
                    &p.head_log_amp.w,
                    true});
    refs.push_back({"decoder.head_log_amp.b",
                    {static_cast<std::size_t>(p.head_log_amp.out_dim)},
                    &p.head_log_amp.b,
                    false});
    refs.push_back({"decoder.head_mask.w",
                    {static_cast<std::size_t>(p.head_mask.out_dim),
                     static_cast<std::size_t>(p.head_mask.in_dim)},
                    &p.head_mask.w,
                    true});
    refs.push_back({"decoder.head_mask.b",
                    {static_cast<std::size_t>(p.head_mask.out_dim)},
                    &p.head_mask.b,
                    false});
    refs.push_back({"decoder.decay_times",
                    {p.decay_times.size()},
                    &p.decay_times,
                    false});
    refs.push_back({"decoder.fir_taps",
                    {static_cast<std::size_t>(p.config.decoder.num_filters), p.taps_per_band()},
                    &p.fir_taps,
                    false});
    refs.push_back({"decoder.mix_weights", {p.mix_weights.size()}, &p.mix_weights, false});
    return refs;
}

inline std::vector<TensorRef> tensor_refs(const ModelParams& p) {
    return tensor_refs(const_cast<ModelParams&>(p));
}

inline double round_to_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

inline void round_params_to_f32(ModelParams& p) {
    for (TensorRef& ref : tensor_refs(p))
        for (double& x : *ref.data) x = round_to_f32(x);
}

namespace detail {

class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
    // in [-1, 1)
    double symmetric() { return 2.0 * unit() - 1.0; }
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }

private:
    std::mt19937_64 engine_;
};

inline void init_fan_in_uniform(std::vector<double>& w, std::vector<double>& b, int fan_in,
                                UniformStream& stream, bool has_bias = true) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : w) x = bound * stream.symmetric();
    if (has_bias)
        for (double& x : b) x = bound * stream.symmetric();
}

} // namespace detail

inline ModelParams init_model_params(const ModelConfig& config, std::uint64_t seed) {
    require(static_cast<int>(config.encoder.channel_plan.size()) == config.encoder.num_blocks,
            "init_model_params: channel plan must list one width per block");
    require(config.decoder.num_filters >= 1 && config.decoder.num_decays >= 1,
            "init_model_params: decoder needs at least one filter and one decay");

    ModelParams p;
    p.config = config;
    detail::UniformStream stream(derive_seed(seed, "init"));

    int in_ch = 1;
    int len = static_cast<int>(config.head_length());
    for (int i = 0; i < config.encoder.num_blocks; ++i) {
        EncoderBlock blk;
        const int out_ch = config.encoder.channel_plan[static_cast<std::size_t>(i)];
        blk.conv.in_ch = in_ch;
        blk.conv.out_ch = out_ch;
        blk.conv.kernel = config.encoder.kernel_size;
        blk.conv.stride = config.encoder.stride;
        blk.conv.w.resize(static_cast<std::size_t>(out_ch) * in_ch * config.encoder.kernel_size);
        blk.conv.b.resize(static_cast<std::size_t>(out_ch));
        detail::init_fan_in_uniform(blk.conv.w, blk.conv.b, in_ch * config.encoder.kernel_size,
                                    stream);
        blk.skip.in_ch = in_ch;
        blk.skip.out_ch = out_ch;
        blk.skip.kernel = 1;
        blk.skip.stride = config.encoder.stride;
        blk.skip.has_bias = false;
        blk.skip.w.resize(static_cast<std::size_t>(out_ch) * in_ch);
        detail::init_fan_in_uniform(blk.skip.w, blk.skip.b, in_ch, stream, false);
        p.blocks.push_back(std::move(blk));
        in_ch = out_ch;
        len /= config.encoder.stride;
        require(len >= 1, "init_model_params: encoder collapses the head to zero frames");
    }

    p.latent_proj.in_dim = in_ch * config.encoder.pooled_length;
    p.latent_proj.out_dim = config.encoder.latent_dim;
    p.latent_proj.w.resize(static_cast<std::size_t>(p.latent_proj.out_dim) * p.latent_proj.in_dim);
    p.latent_proj.b.resize(static_cast<std::size_t>(p.latent_proj.out_dim));
    detail::init_fan_in_uniform(p.latent_proj.w, p.latent_proj.b, p.latent_proj.in_dim, stream);

    int mlp_in = config.encoder.latent_dim + config.decoder.noise_dim;
    for (int i = 0; i < config.decoder.hidden_layers; ++i) {
        Linear l;
        l.in_dim = mlp_in;
        l.out_dim = config.decoder.hidden_width;
        l.w.resize(static_cast<std::size_t>(l.out_dim) * l.in_dim);
        l.b.resize(static_cast<std::size_t>(l.out_dim));
        detail::init_fan_in_uniform(l.w, l.b, l.in_dim, stream);
        p.mlp_trunk.push_back(std::move(l));
        mlp_in = config.decoder.hidden_width;
    }
    const int head_out = config.decoder.num_filters * config.decoder.num_decays;
    for (Linear* head : {&p.head_log_amp, &p.head_mask}) {
        head->in_dim = mlp_in;
        head->out_dim = head_out;
        head->w.resize(static_cast<std::size_t>(head_out) * mlp_in);
        head->b.resize(static_cast<std::size_t>(head_out));
        detail::init_fan_in_uniform(head->w, head->b, mlp_in, stream);
    }

    p.decay_times = linspace_decay_times(config.decoder.decay_time_lo_s,
                                         config.decoder.decay_time_hi_s,
                                         static_cast<std::size_t>(config.decoder.num_decays));
    const FilterBank fb =
        init_octave_filterbank(static_cast<std::size_t>(config.decoder.num_filters),
                               config.decoder.fir_order, config.sample_rate);
    p.fir_taps.reserve(static_cast<std::size_t>(config.decoder.num_filters) * p.taps_per_band());
    for (const auto& taps : fb.taps) p.fir_taps.insert(p.fir_taps.end(), taps.begin(), taps.end());
    p.mix_weights.assign(static_cast<std::size_t>(config.decoder.num_filters),
                         1.0 / config.decoder.num_filters);

    round_params_to_f32(p);
    return p;
}

inline FilterBank filterbank_from_params(const ModelParams& p) {
    FilterBank fb;
    fb.order = p.config.decoder.fir_order;
    fb.sample_rate = p.config.sample_rate;
    const std::size_t taps = p.taps_per_band();
    for (int i = 0; i < p.config.decoder.num_filters; ++i) {
        const double* row = p.band_taps(static_cast<std::size_t>(i));
        fb.taps.emplace_back(row, row + taps);
    }
    fb.band_centers_hz = detail::octave_centers(
        static_cast<std::size_t>(p.config.decoder.num_filters), p.config.sample_rate);
    return fb;
}

// --- forward passes ----------------------------------------------------------

struct EncoderCache {
    std::vector<std::vector<double>> inputs;  // activation entering each block
    std::vector<int> in_lens;
    std::vector<std::vector<double>> preacts; // conv output before the nonlinearity
    std::vector<double> final_act;
    int final_len = 0;
    std::vector<double> pooled; // [ch][pooled_length], flattened input of latent_proj
};

inline std::vector<double> encode(const Signal& head, const ModelParams& p,
                                  EncoderCache* cache = nullptr) {
    const std::size_t want = p.config.head_length();
    require(head.size() == want, "encode: head must be exactly " + std::to_string(want) +
                                     " samples at the configured rate");
    std::vector<double> act = head.samples;
    int len = static_cast<int>(want);
    int ch = 1;
    if (cache) {
        cache->inputs.clear();
        cache->in_lens.clear();
        cache->preacts.clear();
    }
    std::vector<double> preact, skip;
    for (const EncoderBlock& blk : p.blocks) {
        if (cache) {
            cache->inputs.push_back(act);
            cache->in_lens.push_back(len);
        }
        conv1d_forward(blk.conv, act, len, preact);
        conv1d_forward(blk.skip, act, len, skip);
        const int out_len = blk.conv.out_len(len);
        if (cache) cache->preacts.push_back(preact);
        std::vector<double> next(preact.size());
        for (std::size_t k = 0; k < preact.size(); ++k)
            next[k] = leaky_relu(preact[k]) + skip[k];
        act = std::move(next);
        len = out_len;
        ch = blk.conv.out_ch;
    }
    std::vector<double> pooled;
    adaptive_avg_pool(act, ch, len, p.config.encoder.pooled_length, pooled);
    std::vector<double> z;
    linear_forward(p.latent_proj, pooled, z);
    if (cache) {
        cache->final_act = std::move(act);
        cache->final_len = len;
        cache->pooled = std::move(pooled);
    }
    return z;
}

struct MlpCache {
    std::vector<std::vector<double>> inputs;  // input of each trunk layer
    std::vector<std::vector<double>> preacts; // trunk preactivations
    std::vector<double> trunk_out;            // input of the two heads
};

// MLP on concat(z, v) -> damping density; Y = A * E over the tail grid.
struct DecodeResult {
    DampingDensity dd;
    std::vector<double> envelopes; // Y, M x T
};

inline DampingDensity decode_damping(const std::vector<double>& z, const std::vector<double>& v,
                                     const ModelParams& p, MlpCache* cache = nullptr) {
    require(static_cast<int>(z.size()) == p.config.encoder.latent_dim,
            "decode: latent size mismatch");
    require(static_cast<int>(v.size()) == p.config.decoder.noise_dim,
            "decode: noise vector size mismatch");
    std::vector<double> act;
    act.reserve(z.size() + v.size());
    act.insert(act.end(), z.begin(), z.end());
    act.insert(act.end(), v.begin(), v.end());
    if (cache) {
        cache->inputs.clear();
        cache->preacts.clear();
    }
    std::vector<double> preact;
    for (const Linear& l : p.mlp_trunk) {
        if (cache) cache->inputs.push_back(act);
        linear_forward(l, act, preact);
        if (cache) cache->preacts.push_back(preact);
        act.resize(preact.size());
        for (std::size_t k = 0; k < preact.size(); ++k) act[k] = leaky_relu(preact[k]);
    }
    if (cache) cache->trunk_out = act;
    std::vector<double> log_amps, mask_logits;
    linear_forward(p.head_log_amp, act, log_amps);
    linear_forward(p.head_mask, act, mask_logits);
    return compose_amplitudes(static_cast<std::size_t>(p.config.decoder.num_filters),
                              static_cast<std::size_t>(p.config.decoder.num_decays), log_amps,
                              mask_logits);
}

inline DecodeResult decode(const std::vector<double>& z, const std::vector<double>& v,
                           const ModelParams& p, const EnvelopeBank& env,
                           MlpCache* cache = nullptr) {
    DecodeResult out;
    out.dd = decode_damping(z, v, p, cache);
    out.envelopes = envelope_rows(out.dd, env);
    return out;
}

inline EnvelopeBank envelope_bank_from_params(const ModelParams& p) {
    return build_envelope_bank(p.decay_times, p.config.tail_grid());
}

// Seeds for the two stochastic inputs of a completion.
struct CompletionSeeds {
    std::uint64_t v_seed = 0;     // decoder noise vector
    std::uint64_t noise_seed = 0; // filtered-noise carrier
};

inline CompletionSeeds split_completion_seed(std::uint64_t seed) {
    return {derive_seed(seed, "v"), derive_seed(seed, "carrier")};
}

struct CompletionResult {
    Signal tail;
    DampingDensity dd;
};

inline std::vector<double> sample_noise_vector(const ModelParams& p, std::uint64_t v_seed) {
    std::vector<double> v(static_cast<std::size_t>(p.config.decoder.noise_dim));
    GaussianStream stream(v_seed);
    stream.fill(v);
    return v;
}

inline CompletionResult complete(const Signal& head, const ModelParams& p,
                                 const CompletionSeeds& seeds) {
    const EnvelopeBank env = envelope_bank_from_params(p);
    const std::vector<double> z = encode(head, p);
    const std::vector<double> v = sample_noise_vector(p, seeds.v_seed);
    const DecodeResult dec = decode(z, v, p, env);

    const std::size_t T = env.grid.length;
    const Signal noise = generate_white_noise(T, seeds.noise_seed, p.config.sample_rate);
    const FilterBank fb = filterbank_from_params(p);
    const std::vector<Signal> bands = apply_filterbank(fb, noise);

    CompletionResult out;
    out.dd = dec.dd;
    out.tail.sample_rate = p.config.sample_rate;
    out.tail.samples.assign(T, 0.0);
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const double w = p.mix_weights[i];
        const double* yrow = dec.envelopes.data() + i * T;
        const double* srow = bands[i].samples.data();
        for (std::size_t t = 0; t < T; ++t) out.tail.samples[t] += w * yrow[t] * srow[t];
    }
    return out;
}

inline CompletionResult complete(const Signal& head, const ModelParams& p, std::uint64_t seed) {
    return complete(head, p, split_completion_seed(seed));
}

inline DampingDensity damping_density(const Signal& head, const ModelParams& p,
                                      std::uint64_t seed) {
    const std::vector<double> z = encode(head, p);
    const std::vector<double> v = sample_noise_vector(p, split_completion_seed(seed).v_seed);
    return decode_damping(z, v, p);
}

} // namespace decor
