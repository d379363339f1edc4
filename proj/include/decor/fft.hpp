#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "decor/common.hpp"

namespace decor {

// Radix-2 in-place FFT with precomputed twiddles. Plans are cheap value
// objects; callers that transform many frames of one size reuse one plan.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n) {
        require(n >= 2 && (n & (n - 1)) == 0, "FftPlan: size must be a power of two >= 2");
        bitrev_.resize(n);
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            bitrev_[i] = r;
        }
        twiddles_.resize(n / 2);
        const double two_pi = 2.0 * 3.141592653589793238462643383279502884;
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double a = -two_pi * static_cast<double>(k) / static_cast<double>(n);
            twiddles_[k] = {std::cos(a), std::sin(a)};
        }
    }

    std::size_t size() const { return n_; }

    // X[k] = sum_n x[n] e^{-2 pi i k n / N)
    void forward(std::vector<std::complex<double>>& x) const {
        transform(x, false);
    }

    // x[n] = sum_k X[k] e^{+2 pi i k n / N} (no 1/N scaling)
    void inverse_unscaled(std::vector<std::complex<double>>& x) const {
        transform(x, true);
    }

private:
    void transform(std::vector<std::complex<double>>& x, bool inverse) const {
        require(x.size() == n_, "FftPlan: buffer size does not match plan");
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j = bitrev_[i];
            if (i < j) std::swap(x[i], x[j]);
        }
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len >> 1;
            const std::size_t stride = n_ / len;
            for (std::size_t start = 0; start < n_; start += len) {
                for (std::size_t k = 0; k < half; ++k) {
                    std::complex<double> w = twiddles_[k * stride];
                    if (inverse) w = std::conj(w);
                    const std::complex<double> odd = x[start + k + half] * w;
                    const std::complex<double> even = x[start + k];
                    x[start + k] = even + odd;
                    x[start + k + half] = even - odd;
                }
            }
        }
    }

    std::size_t n_;
    std::vector<std::size_t> bitrev_;
    std::vector<std::complex<double>> twiddles_;
};

} // namespace decor
