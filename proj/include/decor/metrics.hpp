#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "decor/common.hpp"
#include "decor/filterbank.hpp"
#include "decor/signal.hpp"
#include "decor/stft.hpp"

namespace decor {

// Floor added inside log-magnitude terms.
inline constexpr double kLogMagnitudeEpsilon = 1e-7;
// Linear-EDF floor relative to the reference energy when converting to dB;
// keeps zero-padded suffixes from mapping to -inf.
inline constexpr double kEdfDbFloorRel = 1e-14;

// ||  |STFT(target)| - |STFT(pred)|  ||_F / || |STFT(target)| ||_F
inline double spectral_convergence(const Signal& pred, const Signal& target,
                                   const StftResolution& res) {
    require(pred.size() == target.size(), "spectral_convergence: length mismatch");
    const Spectrogram mp = stft_magnitude(pred, res);
    const Spectrogram mt = stft_magnitude(target, res);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < mt.mag.size(); ++k) {
        const double d = mt.mag[k] - mp.mag[k];
        num += d * d;
        den += mt.mag[k] * mt.mag[k];
    }
    require(den > 0.0, "spectral_convergence: target spectrum is identically zero");
    return std::sqrt(num) / std::sqrt(den);
}

// Mean L1 distance of floored log magnitudes.
inline double log_magnitude_loss(const Signal& pred, const Signal& target,
                                 const StftResolution& res) {
    require(pred.size() == target.size(), "log_magnitude_loss: length mismatch");
    const Spectrogram mp = stft_magnitude(pred, res);
    const Spectrogram mt = stft_magnitude(target, res);
    double acc = 0.0;
    for (std::size_t k = 0; k < mt.mag.size(); ++k)
        acc += std::abs(std::log(mt.mag[k] + kLogMagnitudeEpsilon) -
                        std::log(mp.mag[k] + kLogMagnitudeEpsilon));
    return acc / static_cast<double>(mt.mag.size());
}

// Sum over resolutions of spectral convergence plus log-magnitude terms.
inline double mstft_loss(const Signal& pred, const Signal& target,
                         const std::vector<StftResolution>& resolutions) {
    require(!resolutions.empty(), "mstft_loss: need at least one resolution");
    double total = 0.0;
    for (const StftResolution& res : resolutions)
        total += spectral_convergence(pred, target, res) + log_magnitude_loss(pred, target, res);
    return total;
}

// Backward-integrated energy decay curve.
struct EnergyDecayFunction {
    std::vector<double> values_db;
    std::vector<double> energy; // linear backward-integrated energy, unfloored
    double reference_energy = 0.0;
    double sample_rate = 48000.0;
    bool normalized = true;
};

inline EnergyDecayFunction schroeder_edf(const Signal& sig, bool normalize = true) {
    require(sig.size() >= 1, "schroeder_edf: empty signal");
    EnergyDecayFunction edf;
    edf.sample_rate = sig.sample_rate;
    edf.normalized = normalize;
    edf.energy.resize(sig.size());
    double acc = 0.0;
    for (std::size_t n = sig.size(); n-- > 0;) {
        const double h = sig.samples[n];
        acc += h * h;
        edf.energy[n] = acc;
    }
    edf.reference_energy = edf.energy[0];
    require(edf.reference_energy > 0.0, "schroeder_edf: signal has zero energy");
    const double ref = normalize ? edf.reference_energy : 1.0;
    const double floor_lin = edf.reference_energy * kEdfDbFloorRel;
    edf.values_db.resize(sig.size());
    for (std::size_t n = 0; n < sig.size(); ++n)
        edf.values_db[n] = 10.0 * std::log10(std::max(edf.energy[n], floor_lin) / ref);
    return edf;
}

inline std::pair<double, double> edf_errors(const EnergyDecayFunction& pred,
                                            const EnergyDecayFunction& truth) {
    require(pred.values_db.size() == truth.values_db.size(), "edf_errors: length mismatch");
    double abs_acc = 0.0, sq_acc = 0.0;
    for (std::size_t n = 0; n < pred.values_db.size(); ++n) {
        const double d = pred.values_db[n] - truth.values_db[n];
        abs_acc += std::abs(d);
        sq_acc += d * d;
    }
    const double inv_n = 1.0 / static_cast<double>(pred.values_db.size());
    return {abs_acc * inv_n, std::sqrt(sq_acc * inv_n)};
}

// T60 from a least-squares line through the normalized EDF between -5 and
// -25 dB; T60 = -60 / slope.
inline double estimate_t60(const EnergyDecayFunction& edf) {
    require(!edf.values_db.empty(), "estimate_t60: empty EDF");
    const double ref_db = edf.normalized ? 0.0 : edf.values_db[0];
    std::size_t i5 = edf.values_db.size(), i25 = edf.values_db.size();
    for (std::size_t n = 0; n < edf.values_db.size(); ++n) {
        const double v = edf.values_db[n] - ref_db;
        if (i5 == edf.values_db.size() && v <= -5.0) i5 = n;
        if (v <= -25.0) {
            i25 = n;
            break;
        }
    }
    if (i25 == edf.values_db.size())
        throw InsufficientDecay("estimate_t60: EDF never spans -25 dB of decay");
    // fit over [i5, i25]; time in seconds
    const double dt = 1.0 / edf.sample_rate;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n_pts = static_cast<double>(i25 - i5 + 1);
    for (std::size_t n = i5; n <= i25; ++n) {
        const double x = static_cast<double>(n) * dt;
        const double y = edf.values_db[n];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n_pts * sxx - sx * sx;
    if (denom <= 0.0) throw InsufficientDecay("estimate_t60: degenerate fit span");
    const double slope = (n_pts * sxy - sx * sy) / denom; // dB/s
    if (!(slope < 0.0)) throw InsufficientDecay("estimate_t60: non-decreasing fit span");
    return -60.0 / slope;
}

// 10 log10 of direct-window energy over post-window energy. The lower window
// edge is clamped at 0 because trimmed RIRs carry their direct peak at n=0.
inline double drr(const Signal& rir, std::size_t direct_index, double half_window_ms = 1.0) {
    require(direct_index < rir.size(), "drr: direct index outside signal");
    const std::size_t n0 =
        static_cast<std::size_t>(std::llround(half_window_ms * 1e-3 * rir.sample_rate));
    const std::size_t lo = direct_index >= n0 ? direct_index - n0 : 0;
    const std::size_t hi = direct_index + n0;
    require(hi < rir.size(), "drr: direct window reaches past the signal end");
    double direct = 0.0;
    for (std::size_t n = lo; n <= hi; ++n) direct += rir.samples[n] * rir.samples[n];
    double tail = 0.0;
    for (std::size_t n = hi; n < rir.size(); ++n) tail += rir.samples[n] * rir.samples[n];
    require(tail > 0.0, "drr: zero tail energy");
    require(direct > 0.0, "drr: zero direct energy");
    return 10.0 * std::log10(direct / tail);
}

inline std::vector<EnergyDecayFunction> octave_band_edfs(const Signal& rir,
                                                         const FilterBank& fb,
                                                         bool normalize = true) {
    const std::vector<Signal> bands = apply_filterbank(fb, rir);
    std::vector<EnergyDecayFunction> out;
    out.reserve(bands.size());
    for (const Signal& band : bands) out.push_back(schroeder_edf(band, normalize));
    return out;
}

// Broadband T60 of each band-filtered signal.
inline std::vector<double> estimate_t60_per_band(const Signal& rir, const FilterBank& fb) {
    std::vector<double> t60s;
    for (const EnergyDecayFunction& edf : octave_band_edfs(rir, fb)) t60s.push_back(estimate_t60(edf));
    return t60s;
}

// One row of the evaluation table.
struct MetricReport {
    double mstft = 0.0;
    double edf_mae_db = 0.0;
    double edf_rmse_db = 0.0;
    double t60_mse_s2 = 0.0;
    double drr_mse_db2 = 0.0;
};

} // namespace decor
