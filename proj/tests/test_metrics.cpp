#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include <decor/envelope.hpp>
#include <decor/metrics.hpp>
#include <decor/signal.hpp>

using namespace decor;

namespace {

Signal sinusoid(std::size_t len, double cycles_per_window, std::size_t window, double fs) {
    Signal s;
    s.sample_rate = fs;
    s.samples.resize(len);
    const double w = 2.0 * 3.141592653589793238462643383279502884 * cycles_per_window /
                     static_cast<double>(window);
    for (std::size_t n = 0; n < len; ++n) s.samples[n] = std::sin(w * static_cast<double>(n));
    return s;
}

// Direct-evaluation DFT of one Hann-windowed frame; oracle for stft_magnitude.
std::vector<double> dft_frame_magnitudes(const std::vector<double>& frame) {
    const std::size_t w = frame.size();
    const std::vector<double> win = hann_window(w);
    std::vector<double> mags(w / 2 + 1);
    for (std::size_t k = 0; k <= w / 2; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < w; ++n) {
            const double a = -2.0 * 3.141592653589793238462643383279502884 *
                             static_cast<double>(k) * static_cast<double>(n) /
                             static_cast<double>(w);
            re += frame[n] * win[n] * std::cos(a);
            im += frame[n] * win[n] * std::sin(a);
        }
        mags[k] = std::hypot(re, im);
    }
    return mags;
}

} // namespace

TEST_CASE("stft magnitude of silence is zero", "[metrics]") {
    Signal zeros;
    zeros.samples.assign(256, 0.0);
    const Spectrogram spec = stft_magnitude(zeros, {64, 32});
    REQUIRE(spec.frames == (256 - 64) / 32 + 1);
    REQUIRE(spec.bins == 33);
    for (double m : spec.mag) REQUIRE(m == 0.0);
}

TEST_CASE("stft magnitude matches a direct DFT oracle", "[metrics]") {
    const Signal s = sinusoid(64, 9.0, 64, 48000.0);
    const Spectrogram spec = stft_magnitude(s, {64, 32});
    REQUIRE(spec.frames == 1);
    const std::vector<double> oracle = dft_frame_magnitudes(s.samples);
    double total = 0.0, lobe = 0.0;
    std::size_t argmax = 0;
    for (std::size_t b = 0; b < spec.bins; ++b) {
        REQUIRE(spec.mag[b] == Catch::Approx(oracle[b]).margin(1e-9));
        total += oracle[b] * oracle[b];
        if (oracle[b] > oracle[argmax]) argmax = b;
    }
    REQUIRE(argmax == 9); // energy concentrates at the driven bin
    for (std::size_t b = 8; b <= 10; ++b) lobe += oracle[b] * oracle[b];
    REQUIRE(lobe >= 0.9 * total);
}

TEST_CASE("stft DC bin of a constant frame equals the window sum", "[metrics]") {
    Signal ones;
    ones.samples.assign(64, 1.0);
    const Spectrogram spec = stft_magnitude(ones, {64, 64});
    const std::vector<double> win = hann_window(64);
    double wsum = 0.0;
    for (double w : win) wsum += w;
    REQUIRE(spec.mag[0] == Catch::Approx(wsum).margin(1e-9));
}

TEST_CASE("stft rejects signals shorter than the window", "[metrics]") {
    Signal s;
    s.samples.assign(63, 1.0);
    REQUIRE_THROWS_AS(stft_magnitude(s, {64, 32}), InvalidArgument);
}

TEST_CASE("spectral convergence identities", "[metrics]") {
    const Signal x = generate_white_noise(400, 5);
    REQUIRE(spectral_convergence(x, x, {64, 32}) == 0.0);

    Signal zeros;
    zeros.samples.assign(400, 0.0);
    REQUIRE(spectral_convergence(zeros, x, {64, 32}) == Catch::Approx(1.0));

    Signal doubled = x;
    for (double& v : doubled.samples) v *= 2.0;
    REQUIRE(spectral_convergence(doubled, x, {64, 32}) == Catch::Approx(1.0).epsilon(1e-12));

    REQUIRE_THROWS_AS(spectral_convergence(x, zeros, {64, 32}), InvalidArgument);
}

TEST_CASE("log-magnitude loss identities", "[metrics]") {
    Signal x = generate_white_noise(400, 6);
    for (double& v : x.samples) v *= 100.0; // keep magnitudes far from the log floor
    REQUIRE(log_magnitude_loss(x, x, {64, 32}) == 0.0);

    Signal scaled = x;
    for (double& v : scaled.samples) v *= std::exp(1.0);
    REQUIRE(log_magnitude_loss(scaled, x, {64, 32}) == Catch::Approx(1.0).epsilon(1e-4));

    Signal zeros;
    zeros.samples.assign(400, 0.0);
    REQUIRE(log_magnitude_loss(zeros, zeros, {64, 32}) == 0.0);
}

TEST_CASE("multiresolution loss sums its per-resolution terms", "[metrics]") {
    const Signal target = generate_white_noise(9000, 7);
    const Signal pred = generate_white_noise(9000, 8);
    const std::vector<StftResolution> res = default_stft_resolutions();
    REQUIRE(res.size() == 4);

    REQUIRE(mstft_loss(target, target, res) == 0.0);

    const double total = mstft_loss(pred, target, res);
    double sum = 0.0;
    for (const StftResolution& r : res) {
        const double term = spectral_convergence(pred, target, r) + log_magnitude_loss(pred, target, r);
        REQUIRE(total >= term);
        sum += term;
    }
    REQUIRE(total == Catch::Approx(sum).epsilon(1e-12));
}

TEST_CASE("schroeder EDF of small hand signals", "[metrics]") {
    Signal s;
    s.sample_rate = 4.0;
    s.samples = {1.0, 1.0, 1.0, 1.0};
    const EnergyDecayFunction edf = schroeder_edf(s, true);
    REQUIRE(edf.energy == std::vector<double>{4.0, 3.0, 2.0, 1.0});
    REQUIRE(edf.values_db[0] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(edf.values_db[1] == Catch::Approx(-1.249).margin(1e-3));
    REQUIRE(edf.values_db[2] == Catch::Approx(-3.010).margin(1e-3));
    REQUIRE(edf.values_db[3] == Catch::Approx(-6.021).margin(1e-3));

    Signal impulse;
    impulse.sample_rate = 4.0;
    impulse.samples = {1.0, 0.0, 0.0, 0.0};
    const EnergyDecayFunction iedf = schroeder_edf(impulse, true);
    REQUIRE(iedf.energy == std::vector<double>{1.0, 0.0, 0.0, 0.0});

    Signal zeros;
    zeros.samples.assign(8, 0.0);
    REQUIRE_THROWS_AS(schroeder_edf(zeros, true), InvalidArgument);
}

TEST_CASE("schroeder EDF is non-increasing", "[metrics]") {
    const Signal noise = generate_white_noise(2048, 9);
    const EnergyDecayFunction edf = schroeder_edf(noise, true);
    for (std::size_t n = 1; n < edf.values_db.size(); ++n)
        REQUIRE(edf.values_db[n] <= edf.values_db[n - 1] + 1e-9);
}

TEST_CASE("EDF error pairs", "[metrics]") {
    Signal s = generate_white_noise(512, 10);
    const EnergyDecayFunction a = schroeder_edf(s, true);

    const auto [mae0, rmse0] = edf_errors(a, a);
    REQUIRE(mae0 == 0.0);
    REQUIRE(rmse0 == 0.0);

    EnergyDecayFunction shifted = a;
    for (double& v : shifted.values_db) v += 3.0;
    const auto [mae3, rmse3] = edf_errors(shifted, a);
    REQUIRE(mae3 == Catch::Approx(3.0).margin(1e-12));
    REQUIRE(rmse3 == Catch::Approx(3.0).margin(1e-12));

    EnergyDecayFunction alt = a;
    for (std::size_t n = 0; n < alt.values_db.size(); ++n)
        alt.values_db[n] += (n % 2 == 0) ? 2.0 : -2.0;
    const auto [mae2, rmse2] = edf_errors(alt, a);
    REQUIRE(mae2 == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(rmse2 == Catch::Approx(2.0).margin(1e-12));

    EnergyDecayFunction trunc = a;
    trunc.values_db.pop_back();
    REQUIRE_THROWS_AS(edf_errors(trunc, a), InvalidArgument);
}

TEST_CASE("RMSE dominates MAE for random EDF pairs", "[metrics]") {
    const Signal p = generate_white_noise(1024, 11);
    const Signal q = generate_white_noise(1024, 12);
    const auto [mae, rmse] = edf_errors(schroeder_edf(p, true), schroeder_edf(q, true));
    REQUIRE(rmse >= mae);
}

namespace {

Signal pure_exponential(double t60_s, double fs) {
    const double b = decay_rate_from_t60(t60_s);
    Signal s;
    s.sample_rate = fs;
    s.samples.resize(static_cast<std::size_t>(t60_s * fs));
    for (std::size_t n = 0; n < s.samples.size(); ++n)
        s.samples[n] = std::exp(-b * static_cast<double>(n) / fs);
    return s;
}

} // namespace

TEST_CASE("T60 estimation recovers the constructing decay time", "[metrics]") {
    for (double t60 : {0.2, 0.5, 1.0, 2.0}) {
        const Signal s = pure_exponential(t60, 8000.0);
        const double est = estimate_t60(schroeder_edf(s, true));
        REQUIRE(est == Catch::Approx(t60).epsilon(0.01));
    }
}

TEST_CASE("T60 estimation rejects insufficient decay", "[metrics]") {
    Signal flat;
    flat.samples.assign(16, 1.0);
    flat.sample_rate = 16.0;
    REQUIRE_THROWS_AS(estimate_t60(schroeder_edf(flat, true)), InsufficientDecay);
}

TEST_CASE("DRR of constructed two-block signals", "[metrics]") {
    const double fs = 48000.0;
    const std::size_t n0 = 48;
    const std::size_t nd = n0;

    SECTION("direct energy ten times tail energy") {
        Signal s;
        s.sample_rate = fs;
        s.samples.assign(193, 0.0);
        for (std::size_t n = 0; n < 96; ++n) s.samples[n] = std::sqrt(10.0) * 0.1;
        for (std::size_t n = 97; n < 193; ++n) s.samples[n] = 0.1;
        REQUIRE(drr(s, nd) == Catch::Approx(10.0).margin(1e-9));
    }
    SECTION("equal energies give 0 dB") {
        Signal s;
        s.sample_rate = fs;
        s.samples.assign(193, 0.0);
        for (std::size_t n = 0; n < 96; ++n) s.samples[n] = 0.3;
        for (std::size_t n = 97; n < 193; ++n) s.samples[n] = 0.3;
        REQUIRE(drr(s, nd) == Catch::Approx(0.0).margin(1e-9));
    }
    SECTION("zero direct energy is an error") {
        Signal s;
        s.sample_rate = fs;
        s.samples.assign(400, 0.0);
        for (std::size_t n = 100; n < 400; ++n) s.samples[n] = 0.5;
        REQUIRE_THROWS_AS(drr(s, 0), InvalidArgument);
    }
    SECTION("zero tail energy is an error") {
        Signal s;
        s.sample_rate = fs;
        s.samples.assign(400, 0.0);
        for (std::size_t n = 0; n < 90; ++n) s.samples[n] = 0.5;
        REQUIRE_THROWS_AS(drr(s, 48), InvalidArgument);
    }
}

TEST_CASE("DRR is invariant to amplitude scaling", "[metrics]") {
    Signal s = generate_white_noise(4000, 13);
    s.sample_rate = 16000.0;
    for (std::size_t n = 0; n < s.samples.size(); ++n)
        s.samples[n] *= std::exp(-3.0 * static_cast<double>(n) / 4000.0);
    const double base = drr(s, 16);
    for (double& v : s.samples) v *= 7.25;
    REQUIRE(drr(s, 16) == Catch::Approx(base).margin(1e-9));
}

TEST_CASE("octave band EDFs", "[metrics]") {
    const FilterBank fb = init_octave_filterbank(4, 255, 16000.0);

    SECTION("white noise gives non-increasing EDFs per band") {
        Signal noise = generate_white_noise(4000, 14, 16000.0);
        const auto edfs = octave_band_edfs(noise, fb);
        REQUIRE(edfs.size() == 4);
        for (const auto& edf : edfs)
            for (std::size_t n = 1; n < edf.values_db.size(); ++n)
                REQUIRE(edf.values_db[n] <= edf.values_db[n - 1] + 1e-9);
    }
    SECTION("band-limited input leaves little energy two octaves away") {
        const Signal noise = generate_white_noise(8000, 15, 16000.0);
        const std::vector<Signal> carriers = apply_filterbank(fb, noise);
        const auto edfs = octave_band_edfs(carriers[0], fb); // band 0 = 500 Hz
        REQUIRE(edfs[2].reference_energy <= 0.01 * edfs[0].reference_energy); // 2 kHz band
    }
    SECTION("silence propagates the EDF error") {
        Signal zeros;
        zeros.samples.assign(2048, 0.0);
        zeros.sample_rate = 16000.0;
        REQUIRE_THROWS_AS(octave_band_edfs(zeros, fb), InvalidArgument);
    }
}
