#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "decor/common.hpp"
#include "decor/signal.hpp"

namespace decor {

// ln(10^3): a decay rate b = kDecayLog / T60 reaches -60 dB at t = T60.
inline constexpr double kDecayLog = 6.907755278982137;

inline double decay_rate_from_t60(double t60_s) {
    require(t60_s > 0.0, "decay_rate_from_t60: decay time must be positive");
    return kDecayLog / t60_s;
}

// Matrix of exponential decay envelopes, one row per decay rate, sampled on a
// time grid: matrix[j][t] = exp(-b_j * n_t).
struct EnvelopeBank {
    std::vector<double> decay_rates; // b, 1/s
    std::vector<double> decay_times; // T60 per row, s
    TimeGrid grid;
    std::vector<double> matrix; // N x T, row-major

    std::size_t num_rates() const { return decay_rates.size(); }
    const double* row(std::size_t j) const { return matrix.data() + j * grid.length; }
};

inline EnvelopeBank build_envelope_bank(const std::vector<double>& decay_times,
                                        const TimeGrid& grid) {
    require(!decay_times.empty(), "build_envelope_bank: need at least one decay time");
    require(grid.length > 0 && grid.step_s > 0.0, "build_envelope_bank: invalid grid");
    EnvelopeBank bank;
    bank.decay_times = decay_times;
    bank.grid = grid;
    bank.decay_rates.reserve(decay_times.size());
    for (double t60 : decay_times) bank.decay_rates.push_back(decay_rate_from_t60(t60));
    bank.matrix.resize(decay_times.size() * grid.length);
    for (std::size_t j = 0; j < bank.decay_rates.size(); ++j) {
        const double b = bank.decay_rates[j];
        double* row = bank.matrix.data() + j * grid.length;
        for (std::size_t t = 0; t < grid.length; ++t) row[t] = std::exp(-b * grid.time(t));
    }
    return bank;
}

// N decay times spread linearly over [lo, hi].
inline std::vector<double> linspace_decay_times(double lo, double hi, std::size_t n) {
    require(lo > 0.0 && hi >= lo && n >= 1, "linspace_decay_times: bad range");
    std::vector<double> times(n);
    if (n == 1) {
        times[0] = lo;
        return times;
    }
    for (std::size_t j = 0; j < n; ++j)
        times[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
    return times;
}

// Amplitude matrix A with its log/mask factorization:
// amps = exp(log_amps) . sigmoid(mask_logits), elementwise.
struct DampingDensity {
    std::size_t num_bands = 0;  // M
    std::size_t num_decays = 0; // N
    std::vector<double> log_amps;    // A', M x N
    std::vector<double> mask_logits; // C', M x N
    std::vector<double> amps;        // A,  M x N

    double amp(std::size_t i, std::size_t j) const { return amps[i * num_decays + j]; }
};

inline DampingDensity compose_amplitudes(std::size_t num_bands, std::size_t num_decays,
                                         const std::vector<double>& log_amps,
                                         const std::vector<double>& mask_logits) {
    require(log_amps.size() == num_bands * num_decays &&
                mask_logits.size() == num_bands * num_decays,
            "compose_amplitudes: shape mismatch");
    DampingDensity dd;
    dd.num_bands = num_bands;
    dd.num_decays = num_decays;
    dd.log_amps = log_amps;
    dd.mask_logits = mask_logits;
    dd.amps.resize(log_amps.size());
    for (std::size_t k = 0; k < log_amps.size(); ++k)
        dd.amps[k] = std::exp(log_amps[k]) * sigmoid(mask_logits[k]);
    return dd;
}

// Per-band time envelopes Y = A * E (M x T).
inline std::vector<double> envelope_rows(const DampingDensity& dd, const EnvelopeBank& env) {
    require(dd.num_decays == env.num_rates(), "envelope_rows: decay-grid size mismatch");
    const std::size_t T = env.grid.length;
    std::vector<double> y(dd.num_bands * T, 0.0);
    for (std::size_t i = 0; i < dd.num_bands; ++i) {
        double* yrow = y.data() + i * T;
        for (std::size_t j = 0; j < dd.num_decays; ++j) {
            const double a = dd.amp(i, j);
            if (a == 0.0) continue;
            const double* erow = env.row(j);
            for (std::size_t t = 0; t < T; ++t) yrow[t] += a * erow[t];
        }
    }
    return y;
}

// h = sum_i mix[i] * (Y_i . S_i): envelopes applied to band-limited noise,
// linearly combined into the tail.
inline Signal synthesize_tail(const DampingDensity& dd, const EnvelopeBank& env,
                              const std::vector<Signal>& bands,
                              const std::vector<double>& mix_weights) {
    const std::size_t T = env.grid.length;
    require(bands.size() == dd.num_bands, "synthesize_tail: band count mismatch");
    require(mix_weights.size() == dd.num_bands, "synthesize_tail: mix weight count mismatch");
    for (const Signal& s : bands)
        require(s.size() == T, "synthesize_tail: band length does not match grid");

    const std::vector<double> y = envelope_rows(dd, env);
    Signal out;
    out.sample_rate = bands.empty() ? 48000.0 : bands[0].sample_rate;
    out.samples.assign(T, 0.0);
    for (std::size_t i = 0; i < dd.num_bands; ++i) {
        const double w = mix_weights[i];
        if (w == 0.0) continue;
        const double* yrow = y.data() + i * T;
        const double* srow = bands[i].samples.data();
        for (std::size_t t = 0; t < T; ++t) out.samples[t] += w * yrow[t] * srow[t];
    }
    return out;
}

} // namespace decor
