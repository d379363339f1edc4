#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "decor/common.hpp"
#include "decor/signal.hpp"

namespace decor {

// Bank of M FIR band-pass filters, P+1 taps each. Taps are mutable state:
// they seed the model's trainable filterbank.
struct FilterBank {
    std::vector<std::vector<double>> taps; // M x (P+1)
    int order = 0;                         // P
    std::vector<double> band_centers_hz;   // design-time centers, documentation only
    double sample_rate = 48000.0;

    std::size_t num_bands() const { return taps.size(); }
    int delay_samples() const { return order / 2; }
};

namespace detail {

// Nominal octave series; extended downward by halving when more bands are
// asked for than the table carries.
inline std::vector<double> octave_centers(std::size_t num_bands, double sample_rate) {
    static const double kSeries[] = {31.5, 63.0, 125.0, 250.0, 500.0, 1000.0,
                                     2000.0, 4000.0, 8000.0, 16000.0};
    const double nyquist = sample_rate / 2.0;
    std::vector<double> usable;
    for (double c : kSeries)
        if (c < nyquist) usable.push_back(c);
    require(!usable.empty(), "octave_centers: sample rate too low for the octave series");
    while (usable.size() < num_bands)
        usable.insert(usable.begin(), usable.front() / 2.0);
    return {usable.end() - static_cast<std::ptrdiff_t>(num_bands), usable.end()};
}

inline double blackman(double x, double span) {
    const double pi = 3.141592653589793238462643383279502884;
    const double u = x / span; // in [0, 1]
    return 0.42 - 0.5 * std::cos(2.0 * pi * u) + 0.08 * std::cos(4.0 * pi * u);
}

// Ideal low-pass impulse response sample at offset t (in samples) for cutoff
// fc (Hz), i.e. (2 fc / fs) sinc(2 fc t / fs).
inline double lowpass_tap(double fc, double sample_rate, double t) {
    const double pi = 3.141592653589793238462643383279502884;
    const double x = 2.0 * pi * fc / sample_rate * t;
    if (std::abs(x) < 1e-12) return 2.0 * fc / sample_rate;
    return std::sin(x) / (pi * t);
}

} // namespace detail

// Blackman-windowed-sinc band-pass with one-octave edges around center_hz,
// symmetric around P/2 (linear phase at init).
inline std::vector<double> design_bandpass(double center_hz, int order, double sample_rate) {
    require(order >= 2, "design_bandpass: order must be >= 2");
    const double nyquist = sample_rate / 2.0;
    require(center_hz > 0.0 && center_hz < nyquist,
            "design_bandpass: center must lie below Nyquist");
    const double sqrt2 = std::sqrt(2.0);
    const double lo = center_hz / sqrt2;
    const double hi = std::min(center_hz * sqrt2, 0.999 * nyquist);
    const double mid = static_cast<double>(order) / 2.0;
    std::vector<double> taps(static_cast<std::size_t>(order) + 1);
    for (int k = 0; k <= order; ++k) {
        const double t = static_cast<double>(k) - mid;
        const double ideal = detail::lowpass_tap(hi, sample_rate, t) -
                             detail::lowpass_tap(lo, sample_rate, t);
        taps[static_cast<std::size_t>(k)] =
            ideal * detail::blackman(static_cast<double>(k), static_cast<double>(order));
    }
    return taps;
}

inline FilterBank init_octave_filterbank(std::vector<double> centers_hz, int order,
                                         double sample_rate) {
    require(!centers_hz.empty(), "init_octave_filterbank: need at least one band");
    require(order >= 2, "init_octave_filterbank: order must be >= 2");
    FilterBank fb;
    fb.order = order;
    fb.sample_rate = sample_rate;
    fb.band_centers_hz = centers_hz;
    fb.taps.reserve(centers_hz.size());
    for (double c : centers_hz) fb.taps.push_back(design_bandpass(c, order, sample_rate));
    return fb;
}

// Octave-spaced centers taken from the top of the nominal series that fits
// under Nyquist.
inline FilterBank init_octave_filterbank(std::size_t num_bands, int order, double sample_rate) {
    require(num_bands >= 1, "init_octave_filterbank: need at least one band");
    return init_octave_filterbank(detail::octave_centers(num_bands, sample_rate), order,
                                  sample_rate);
}

// Same-length convolution of one tap set with a signal, with the filter's
// linear-phase group delay removed so envelopes align in time.
inline void apply_filter_into(const std::vector<double>& taps, int delay,
                              const std::vector<double>& x, std::vector<double>& out) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    const std::ptrdiff_t ntaps = static_cast<std::ptrdiff_t>(taps.size());
    out.assign(x.size(), 0.0);
    // out[t] = sum_k taps[k] * x[t + delay - k]
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        const std::ptrdiff_t base = t + delay;
        const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, base - (n - 1));
        const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(ntaps - 1, base);
        double acc = 0.0;
        for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k)
            acc += taps[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(base - k)];
        out[static_cast<std::size_t>(t)] = acc;
    }
}

inline std::vector<Signal> apply_filterbank(const FilterBank& fb, const Signal& noise) {
    require(noise.size() >= 1, "apply_filterbank: empty input");
    std::vector<Signal> bands(fb.num_bands());
    for (std::size_t i = 0; i < fb.num_bands(); ++i) {
        bands[i].sample_rate = noise.sample_rate;
        apply_filter_into(fb.taps[i], fb.delay_samples(), noise.samples, bands[i].samples);
    }
    return bands;
}

// Magnitude response |H(f)| of a tap set at one frequency.
inline double magnitude_response_at(const std::vector<double>& taps, double freq_hz,
                                    double sample_rate) {
    const double w = 2.0 * 3.141592653589793238462643383279502884 * freq_hz / sample_rate;
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < taps.size(); ++k) {
        re += taps[k] * std::cos(w * static_cast<double>(k));
        im -= taps[k] * std::sin(w * static_cast<double>(k));
    }
    return std::sqrt(re * re + im * im);
}

} // namespace decor
