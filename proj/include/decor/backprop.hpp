#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <thread>
#include <utility>
#include <vector>

#include "decor/common.hpp"
#include "decor/envelope.hpp"
#include "decor/filterbank.hpp"
#include "decor/metrics.hpp"
#include "decor/model.hpp"
#include "decor/nn.hpp"
#include "decor/signal.hpp"
#include "decor/stft.hpp"

namespace decor {

// One gradient buffer per entry of tensor_refs(params), same order and shapes.
struct GradientSet {
    std::vector<std::vector<double>> tensors;
};

inline GradientSet zero_gradients(const ModelParams& p) {
    GradientSet g;
    for (const TensorRef& ref : tensor_refs(p)) g.tensors.emplace_back(ref.data->size(), 0.0);
    return g;
}

inline void accumulate_scaled(GradientSet& acc, const GradientSet& g, double scale) {
    require(acc.tensors.size() == g.tensors.size(), "accumulate_scaled: layout mismatch");
    for (std::size_t i = 0; i < acc.tensors.size(); ++i)
        for (std::size_t k = 0; k < acc.tensors[i].size(); ++k)
            acc.tensors[i][k] += scale * g.tensors[i][k];
}

inline bool gradients_finite(const GradientSet& g) {
    for (const auto& t : g.tensors)
        if (!all_finite(t)) return false;
    return true;
}

// Indices of the named tensors inside a GradientSet.
struct GradientLayout {
    int num_blocks = 0;
    int trunk_layers = 0;

    std::size_t conv_w(int block) const { return static_cast<std::size_t>(3 * block); }
    std::size_t conv_b(int block) const { return static_cast<std::size_t>(3 * block + 1); }
    std::size_t skip_w(int block) const { return static_cast<std::size_t>(3 * block + 2); }
    std::size_t latent_w() const { return static_cast<std::size_t>(3 * num_blocks); }
    std::size_t latent_b() const { return latent_w() + 1; }
    std::size_t trunk_w(int layer) const { return latent_b() + 1 + static_cast<std::size_t>(2 * layer); }
    std::size_t trunk_b(int layer) const { return trunk_w(layer) + 1; }
    std::size_t head_log_amp_w() const { return trunk_w(trunk_layers); }
    std::size_t head_log_amp_b() const { return head_log_amp_w() + 1; }
    std::size_t head_mask_w() const { return head_log_amp_w() + 2; }
    std::size_t head_mask_b() const { return head_log_amp_w() + 3; }
    std::size_t decay_times() const { return head_log_amp_w() + 4; }
    std::size_t fir_taps() const { return head_log_amp_w() + 5; }
    std::size_t mix_weights() const { return head_log_amp_w() + 6; }
};

inline GradientLayout gradient_layout(const ModelParams& p) {
    GradientLayout l;
    l.num_blocks = static_cast<int>(p.blocks.size());
    l.trunk_layers = static_cast<int>(p.mlp_trunk.size());
    return l;
}

// --- multiresolution STFT loss with signal-domain gradient -------------------

struct LossWithGrad {
    double loss = 0.0;
    std::vector<double> dpred;
};

inline LossWithGrad mstft_loss_with_grad(const Signal& pred, const Signal& target,
                                         const std::vector<StftResolution>& resolutions) {
    require(pred.size() == target.size(), "mstft_loss_with_grad: length mismatch");
    require(!resolutions.empty(), "mstft_loss_with_grad: need at least one resolution");
    LossWithGrad out;
    out.dpred.assign(pred.size(), 0.0);
    for (const StftResolution& res : resolutions) {
        StftCache cache;
        const Spectrogram mp = stft_magnitude(pred, res, &cache);
        const Spectrogram mt = stft_magnitude(target, res);

        double num_sq = 0.0, den_sq = 0.0;
        for (std::size_t k = 0; k < mt.mag.size(); ++k) {
            const double d = mt.mag[k] - mp.mag[k];
            num_sq += d * d;
            den_sq += mt.mag[k] * mt.mag[k];
        }
        require(den_sq > 0.0, "mstft_loss_with_grad: target spectrum is identically zero");
        const double num = std::sqrt(num_sq);
        const double den = std::sqrt(den_sq);
        const double n_el = static_cast<double>(mt.mag.size());

        double log_term = 0.0;
        std::vector<double> mag_grad(mt.mag.size(), 0.0);
        for (std::size_t k = 0; k < mt.mag.size(); ++k) {
            // spectral convergence: d/dMp ||Mt - Mp||_F / ||Mt||_F
            if (num > 1e-300)
                mag_grad[k] += (mp.mag[k] - mt.mag[k]) / (num * den);
            // log-magnitude L1
            const double lt = std::log(mt.mag[k] + kLogMagnitudeEpsilon);
            const double lp = std::log(mp.mag[k] + kLogMagnitudeEpsilon);
            log_term += std::abs(lt - lp);
            const double sign = lt > lp ? 1.0 : (lt < lp ? -1.0 : 0.0);
            mag_grad[k] += -sign / (n_el * (mp.mag[k] + kLogMagnitudeEpsilon));
        }
        out.loss += num / den + log_term / n_el;

        const std::vector<double> dsig = stft_magnitude_backward(cache, mag_grad, pred.size());
        for (std::size_t t = 0; t < dsig.size(); ++t) out.dpred[t] += dsig[t];
    }
    return out;
}

// --- full synthesis forward/backward for one example --------------------------

struct ExampleResult {
    double loss = 0.0;
    GradientSet grads;
};

// Loss of the completed tail against the true tail, differentiated with
// respect to every trainable tensor. env and fb must be built from p.
inline ExampleResult example_forward_backward(const Signal& head, const Signal& target_tail,
                                              const ModelParams& p, const EnvelopeBank& env,
                                              const FilterBank& fb,
                                              const CompletionSeeds& seeds,
                                              const std::vector<StftResolution>& resolutions) {
    const std::size_t T = env.grid.length;
    require(target_tail.size() == T, "example_forward_backward: tail length mismatch");
    const std::size_t M = static_cast<std::size_t>(p.config.decoder.num_filters);
    const std::size_t N = static_cast<std::size_t>(p.config.decoder.num_decays);

    // forward
    EncoderCache enc;
    const std::vector<double> z = encode(head, p, &enc);
    const std::vector<double> v = sample_noise_vector(p, seeds.v_seed);
    MlpCache mlp;
    const DecodeResult dec = decode(z, v, p, env, &mlp);

    const Signal noise = generate_white_noise(T, seeds.noise_seed, p.config.sample_rate);
    const std::vector<Signal> bands = apply_filterbank(fb, noise);

    Signal tail;
    tail.sample_rate = p.config.sample_rate;
    tail.samples.assign(T, 0.0);
    for (std::size_t i = 0; i < M; ++i) {
        const double w = p.mix_weights[i];
        const double* yrow = dec.envelopes.data() + i * T;
        const double* srow = bands[i].samples.data();
        for (std::size_t t = 0; t < T; ++t) tail.samples[t] += w * yrow[t] * srow[t];
    }

    LossWithGrad lg = mstft_loss_with_grad(tail, target_tail, resolutions);

    // backward
    ExampleResult out;
    out.loss = lg.loss;
    out.grads = zero_gradients(p);
    const GradientLayout lay = gradient_layout(p);
    const std::vector<double>& dtail = lg.dpred;

    std::vector<double> d_y(M * T), d_s(M * T);
    std::vector<double>& d_mix = out.grads.tensors[lay.mix_weights()];
    for (std::size_t i = 0; i < M; ++i) {
        const double w = p.mix_weights[i];
        const double* yrow = dec.envelopes.data() + i * T;
        const double* srow = bands[i].samples.data();
        double mix_acc = 0.0;
        double* dyrow = d_y.data() + i * T;
        double* dsrow = d_s.data() + i * T;
        for (std::size_t t = 0; t < T; ++t) {
            const double g = dtail[t];
            mix_acc += g * yrow[t] * srow[t];
            dyrow[t] = g * w * srow[t];
            dsrow[t] = g * w * yrow[t];
        }
        d_mix[i] += mix_acc;
    }

    // dA = dY E^T; decay-time gradient through E[j][t] = exp(-b_j n_t)
    std::vector<double> d_amps(M * N, 0.0);
    for (std::size_t i = 0; i < M; ++i) {
        const double* dyrow = d_y.data() + i * T;
        for (std::size_t j = 0; j < N; ++j) {
            const double* erow = env.row(j);
            double acc = 0.0;
            for (std::size_t t = 0; t < T; ++t) acc += dyrow[t] * erow[t];
            d_amps[i * N + j] = acc;
        }
    }
    std::vector<double>& d_decay = out.grads.tensors[lay.decay_times()];
    for (std::size_t j = 0; j < N; ++j) {
        const double* erow = env.row(j);
        const double t60 = env.decay_times[j];
        const double coeff = kDecayLog / (t60 * t60); // dE/dT = E * n * ln(1e3) / T^2
        double acc = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            double q = 0.0;
            for (std::size_t i = 0; i < M; ++i) q += dec.dd.amps[i * N + j] * d_y[i * T + t];
            acc += q * erow[t] * env.grid.time(t);
        }
        d_decay[j] += acc * coeff;
    }

    // through A = exp(A') . sigmoid(C')
    std::vector<double> d_log_amps(M * N), d_mask_logits(M * N);
    for (std::size_t k = 0; k < M * N; ++k) {
        const double a = dec.dd.amps[k];
        const double s = sigmoid(dec.dd.mask_logits[k]);
        d_log_amps[k] = d_amps[k] * a;
        d_mask_logits[k] = d_amps[k] * a * (1.0 - s);
    }

    // decoder heads and trunk
    std::vector<double> d_trunk(mlp.trunk_out.size(), 0.0), d_tmp;
    linear_backward(p.head_log_amp, mlp.trunk_out, d_log_amps,
                    out.grads.tensors[lay.head_log_amp_w()],
                    out.grads.tensors[lay.head_log_amp_b()], &d_tmp);
    for (std::size_t k = 0; k < d_trunk.size(); ++k) d_trunk[k] += d_tmp[k];
    linear_backward(p.head_mask, mlp.trunk_out, d_mask_logits,
                    out.grads.tensors[lay.head_mask_w()], out.grads.tensors[lay.head_mask_b()],
                    &d_tmp);
    for (std::size_t k = 0; k < d_trunk.size(); ++k) d_trunk[k] += d_tmp[k];

    std::vector<double> d_act = std::move(d_trunk);
    for (int layer = static_cast<int>(p.mlp_trunk.size()) - 1; layer >= 0; --layer) {
        const std::vector<double>& preact = mlp.preacts[static_cast<std::size_t>(layer)];
        for (std::size_t k = 0; k < d_act.size(); ++k) d_act[k] *= leaky_relu_grad(preact[k]);
        linear_backward(p.mlp_trunk[static_cast<std::size_t>(layer)],
                        mlp.inputs[static_cast<std::size_t>(layer)], d_act,
                        out.grads.tensors[lay.trunk_w(layer)],
                        out.grads.tensors[lay.trunk_b(layer)], &d_tmp);
        d_act = std::move(d_tmp);
    }
    std::vector<double> d_z(d_act.begin(), d_act.begin() + p.config.encoder.latent_dim);

    // encoder
    linear_backward(p.latent_proj, enc.pooled, d_z, out.grads.tensors[lay.latent_w()],
                    out.grads.tensors[lay.latent_b()], &d_tmp);
    std::vector<double> d_blockout;
    adaptive_avg_pool_backward(d_tmp, p.blocks.back().conv.out_ch, enc.final_len,
                               p.config.encoder.pooled_length, d_blockout);
    std::vector<double> d_in_main, d_in_skip;
    for (int blk = static_cast<int>(p.blocks.size()) - 1; blk >= 0; --blk) {
        const EncoderBlock& b = p.blocks[static_cast<std::size_t>(blk)];
        const std::vector<double>& input = enc.inputs[static_cast<std::size_t>(blk)];
        const int in_len = enc.in_lens[static_cast<std::size_t>(blk)];
        const std::vector<double>& preact = enc.preacts[static_cast<std::size_t>(blk)];
        std::vector<double> d_pre(d_blockout.size());
        for (std::size_t k = 0; k < d_pre.size(); ++k)
            d_pre[k] = d_blockout[k] * leaky_relu_grad(preact[k]);
        conv1d_backward(b.conv, input, in_len, d_pre, out.grads.tensors[lay.conv_w(blk)],
                        out.grads.tensors[lay.conv_b(blk)], &d_in_main);
        std::vector<double> unused_bias;
        conv1d_backward(b.skip, input, in_len, d_blockout, out.grads.tensors[lay.skip_w(blk)],
                        unused_bias, &d_in_skip);
        d_blockout.resize(d_in_main.size());
        for (std::size_t k = 0; k < d_in_main.size(); ++k)
            d_blockout[k] = d_in_main[k] + d_in_skip[k];
    }

    // filtered-noise carriers: dtaps_i[k] = sum_t dS_i[t] * w[t + delay - k]
    std::vector<double>& d_taps = out.grads.tensors[lay.fir_taps()];
    const int delay = fb.delay_samples();
    const std::size_t taps = p.taps_per_band();
    const std::ptrdiff_t Ts = static_cast<std::ptrdiff_t>(T);
    for (std::size_t i = 0; i < M; ++i) {
        const double* dsrow = d_s.data() + i * T;
        double* dtrow = d_taps.data() + i * taps;
        for (std::size_t k = 0; k < taps; ++k) {
            const std::ptrdiff_t off = delay - static_cast<std::ptrdiff_t>(k);
            const std::ptrdiff_t t_lo = off < 0 ? -off : 0;
            const std::ptrdiff_t t_hi = std::min<std::ptrdiff_t>(Ts, Ts - off);
            double acc = 0.0;
            for (std::ptrdiff_t t = t_lo; t < t_hi; ++t)
                acc += dsrow[t] * noise.samples[static_cast<std::size_t>(t + off)];
            dtrow[k] += acc;
        }
    }

    return out;
}

// --- batched training objective ------------------------------------------------

struct BatchItem {
    const Signal* head = nullptr;
    const Signal* tail = nullptr;
    CompletionSeeds seeds;
};

struct BatchResult {
    double loss = 0.0;   // mean over the batch
    GradientSet grads;   // gradients of the mean loss
};

// Mean loss and gradients over a batch. Examples run in parallel; gradients
// are reduced in example order, so the result does not depend on the thread
// count.
inline BatchResult forward_backward(const std::vector<BatchItem>& batch, const ModelParams& p,
                                    const std::vector<StftResolution>& resolutions,
                                    int threads = 0) {
    require(!batch.empty(), "forward_backward: empty batch");
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;

    const EnvelopeBank env = envelope_bank_from_params(p);
    const FilterBank fb = filterbank_from_params(p);

    BatchResult out;
    out.grads = zero_gradients(p);
    const double scale = 1.0 / static_cast<double>(batch.size());

    const std::size_t chunk = std::max<std::size_t>(1, 2 * static_cast<std::size_t>(threads));
    std::vector<ExampleResult> slots(std::min(chunk, batch.size()));
    std::vector<std::exception_ptr> errors(slots.size());

    for (std::size_t chunk_start = 0; chunk_start < batch.size(); chunk_start += chunk) {
        const std::size_t count = std::min(chunk, batch.size() - chunk_start);
        std::fill(errors.begin(), errors.end(), std::exception_ptr());
        auto worker = [&](std::size_t begin, std::size_t step) {
            for (std::size_t s = begin; s < count; s += step) {
                try {
                    const BatchItem& item = batch[chunk_start + s];
                    slots[s] = example_forward_backward(*item.head, *item.tail, p, env, fb,
                                                        item.seeds, resolutions);
                } catch (...) {
                    errors[s] = std::current_exception();
                }
            }
        };
        if (threads == 1 || count == 1) {
            worker(0, 1);
        } else {
            std::vector<std::thread> pool;
            const std::size_t nthreads = std::min<std::size_t>(threads, count);
            for (std::size_t t = 0; t < nthreads; ++t)
                pool.emplace_back(worker, t, nthreads);
            for (std::thread& t : pool) t.join();
        }
        for (std::size_t s = 0; s < count; ++s) {
            if (errors[s]) std::rethrow_exception(errors[s]);
            if (!std::isfinite(slots[s].loss))
                throw DivergenceError("forward_backward: non-finite loss at batch index " +
                                      std::to_string(chunk_start + s) + " (loss=" +
                                      std::to_string(slots[s].loss) + ")");
            out.loss += scale * slots[s].loss;
            accumulate_scaled(out.grads, slots[s].grads, scale);
        }
    }
    if (!gradients_finite(out.grads))
        throw DivergenceError("forward_backward: non-finite gradients in batch");
    return out;
}

} // namespace decor
