#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "decor/common.hpp"

namespace decor {

// Mono sample buffer. Samples are dimensionless amplitudes.
struct Signal {
    std::vector<double> samples;
    double sample_rate = 48000.0;

    std::size_t size() const { return samples.size(); }
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Uniform time grid n[t] = start_s + t * step_s.
struct TimeGrid {
    double start_s = 0.0;
    double step_s = 1.0;
    std::size_t length = 0;

    double time(std::size_t t) const { return start_s + static_cast<double>(t) * step_s; }
};

// Grid covering a tail of tail_s seconds that starts head_s after the RIR onset.
inline TimeGrid make_tail_grid(double sample_rate, double head_s, double tail_s) {
    require(sample_rate > 0.0, "make_tail_grid: sample_rate must be positive");
    TimeGrid g;
    g.start_s = head_s;
    g.step_s = 1.0 / sample_rate;
    g.length = static_cast<std::size_t>(std::llround(tail_s * sample_rate));
    require(g.length > 0, "make_tail_grid: empty grid");
    return g;
}

// Seeded standard-normal generator (Box-Muller over mt19937_64). Hand-rolled
// so the stream is fixed by the seed alone, not by the stdlib's distribution.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    void fill(std::vector<double>& out) {
        for (double& x : out) x = next();
    }

private:
    double uniform01() {
        // in (0, 1]; log() above needs a nonzero argument
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// i.i.d. standard-normal samples; the same seed reproduces the same buffer.
inline Signal generate_white_noise(std::size_t length, std::uint64_t seed,
                                   double sample_rate = 48000.0) {
    require(length >= 1, "generate_white_noise: length must be >= 1");
    Signal out;
    out.sample_rate = sample_rate;
    out.samples.resize(length);
    GaussianStream stream(seed);
    stream.fill(out.samples);
    return out;
}

} // namespace decor
