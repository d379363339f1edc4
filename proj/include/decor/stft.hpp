#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "decor/common.hpp"
#include "decor/fft.hpp"
#include "decor/signal.hpp"

namespace decor {

// One STFT resolution: Hann window of window_size samples, frames hop_size
// apart, one-sided spectrum of window_size/2 + 1 bins.
struct StftResolution {
    std::size_t window_size = 0;
    std::size_t hop_size = 0;
};

inline std::vector<StftResolution> default_stft_resolutions() {
    return {{64, 32}, {512, 256}, {2048, 1024}, {8192, 4096}};
}

struct Spectrogram {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<double> mag; // frames x bins, row-major

    double& at(std::size_t f, std::size_t b) { return mag[f * bins + b]; }
    double at(std::size_t f, std::size_t b) const { return mag[f * bins + b]; }
};

inline std::vector<double> hann_window(std::size_t n) {
    const double two_pi = 2.0 * 3.141592653589793238462643383279502884;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

inline void validate_resolution(const StftResolution& res) {
    require(res.window_size > 0 && res.hop_size > 0, "stft: window and hop must be positive");
    require(res.hop_size <= res.window_size, "stft: hop must not exceed window");
    require((res.window_size & (res.window_size - 1)) == 0,
            "stft: window size must be a power of two");
}

inline std::size_t stft_frame_count(std::size_t signal_len, const StftResolution& res) {
    require(signal_len >= res.window_size, "stft: signal shorter than window");
    return (signal_len - res.window_size) / res.hop_size + 1;
}

// Full complex STFT kept around for gradient propagation.
struct StftCache {
    StftResolution res;
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<std::complex<double>> spectra; // frames x bins
};

inline Spectrogram stft_magnitude(const Signal& sig, const StftResolution& res,
                                  StftCache* cache = nullptr) {
    validate_resolution(res);
    const std::size_t W = res.window_size;
    const std::size_t frames = stft_frame_count(sig.size(), res);
    const std::size_t bins = W / 2 + 1;
    const std::vector<double> win = hann_window(W);
    FftPlan plan(W);

    Spectrogram out;
    out.frames = frames;
    out.bins = bins;
    out.mag.resize(frames * bins);
    if (cache) {
        cache->res = res;
        cache->frames = frames;
        cache->bins = bins;
        cache->spectra.resize(frames * bins);
    }

    std::vector<std::complex<double>> buf(W);
    for (std::size_t f = 0; f < frames; ++f) {
        const double* x = sig.samples.data() + f * res.hop_size;
        for (std::size_t i = 0; i < W; ++i) buf[i] = {x[i] * win[i], 0.0};
        plan.forward(buf);
        for (std::size_t b = 0; b < bins; ++b) {
            const double m = std::abs(buf[b]);
            out.mag[f * bins + b] = m;
            if (cache) cache->spectra[f * bins + b] = buf[b];
        }
    }
    return out;
}

// Adjoint of the magnitude STFT: maps per-element magnitude gradients back to
// a signal-domain gradient. |z| derivative is taken as 0 below 1e-12.
inline std::vector<double> stft_magnitude_backward(const StftCache& cache,
                                                   const std::vector<double>& mag_grad,
                                                   std::size_t signal_len) {
    const std::size_t W = cache.res.window_size;
    const std::size_t bins = cache.bins;
    require(mag_grad.size() == cache.frames * bins, "stft backward: gradient shape mismatch");
    const std::vector<double> win = hann_window(W);
    FftPlan plan(W);

    std::vector<double> grad(signal_len, 0.0);
    std::vector<std::complex<double>> buf(W);
    for (std::size_t f = 0; f < cache.frames; ++f) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        for (std::size_t b = 0; b < bins; ++b) {
            const std::complex<double> z = cache.spectra[f * bins + b];
            const double m = std::abs(z);
            if (m < 1e-12) continue;
            const double g = mag_grad[f * bins + b];
            if (g == 0.0) continue;
            buf[b] = z * (g / m); // d|z|/dz in the real-pair sense
        }
        // dL/dx_n = win[n] * Re(sum_b G_b e^{+2 pi i b n / W}) over one-sided bins
        plan.inverse_unscaled(buf);
        double* gx = grad.data() + f * cache.res.hop_size;
        for (std::size_t i = 0; i < W; ++i) gx[i] += win[i] * buf[i].real();
    }
    return grad;
}

} // namespace decor
