#pragma once

#include <cstddef>
#include <vector>

#include "decor/common.hpp"

namespace decor {

inline constexpr double kLeakySlope = 0.2;

inline double leaky_relu(double x) { return x > 0.0 ? x : kLeakySlope * x; }
inline double leaky_relu_grad(double x) { return x > 0.0 ? 1.0 : kLeakySlope; }

// 1D convolution, weights [out_ch][in_ch][kernel], activations [ch][len]
// row-major. Output length is in_len / stride with centered zero padding.
struct Conv1D {
    int in_ch = 1;
    int out_ch = 1;
    int kernel = 1;
    int stride = 1;
    bool has_bias = true;
    std::vector<double> w;
    std::vector<double> b;

    int pad() const { return (kernel - 1) / 2; }
    int out_len(int in_len) const { return in_len / stride; }

    double& wat(int co, int ci, int k) { return w[(co * in_ch + ci) * kernel + k]; }
    double wat(int co, int ci, int k) const { return w[(co * in_ch + ci) * kernel + k]; }
};

inline void conv1d_forward(const Conv1D& c, const std::vector<double>& in, int in_len,
                           std::vector<double>& out) {
    const int out_len = c.out_len(in_len);
    require(out_len >= 1, "conv1d: input too short for stride");
    out.assign(static_cast<std::size_t>(c.out_ch) * out_len, 0.0);
    const int pad = c.pad();
    for (int co = 0; co < c.out_ch; ++co) {
        double* orow = out.data() + static_cast<std::size_t>(co) * out_len;
        for (int t = 0; t < out_len; ++t) {
            const int base = t * c.stride - pad;
            const int k_lo = base < 0 ? -base : 0;
            const int k_hi = base + c.kernel <= in_len ? c.kernel : in_len - base;
            double acc = c.has_bias ? c.b[static_cast<std::size_t>(co)] : 0.0;
            for (int ci = 0; ci < c.in_ch; ++ci) {
                const double* irow = in.data() + static_cast<std::size_t>(ci) * in_len;
                const double* wrow = c.w.data() +
                                     (static_cast<std::size_t>(co) * c.in_ch + ci) * c.kernel;
                for (int k = k_lo; k < k_hi; ++k) acc += wrow[k] * irow[base + k];
            }
            orow[t] = acc;
        }
    }
}

// Accumulates weight/bias gradients and (when din != nullptr) input gradients.
inline void conv1d_backward(const Conv1D& c, const std::vector<double>& in, int in_len,
                            const std::vector<double>& dout, std::vector<double>& dw,
                            std::vector<double>& db, std::vector<double>* din) {
    const int out_len = c.out_len(in_len);
    const int pad = c.pad();
    if (din) din->assign(in.size(), 0.0);
    for (int co = 0; co < c.out_ch; ++co) {
        const double* grow = dout.data() + static_cast<std::size_t>(co) * out_len;
        for (int t = 0; t < out_len; ++t) {
            const double g = grow[t];
            if (g == 0.0) continue;
            if (c.has_bias) db[static_cast<std::size_t>(co)] += g;
            const int base = t * c.stride - pad;
            const int k_lo = base < 0 ? -base : 0;
            const int k_hi = base + c.kernel <= in_len ? c.kernel : in_len - base;
            for (int ci = 0; ci < c.in_ch; ++ci) {
                const double* irow = in.data() + static_cast<std::size_t>(ci) * in_len;
                double* dwrow = dw.data() +
                                (static_cast<std::size_t>(co) * c.in_ch + ci) * c.kernel;
                const double* wrow = c.w.data() +
                                     (static_cast<std::size_t>(co) * c.in_ch + ci) * c.kernel;
                if (din) {
                    double* dirow = din->data() + static_cast<std::size_t>(ci) * in_len;
                    for (int k = k_lo; k < k_hi; ++k) {
                        dwrow[k] += g * irow[base + k];
                        dirow[base + k] += g * wrow[k];
                    }
                } else {
                    for (int k = k_lo; k < k_hi; ++k) dwrow[k] += g * irow[base + k];
                }
            }
        }
    }
}

// Dense layer, weights [out][in].
struct Linear {
    int in_dim = 1;
    int out_dim = 1;
    std::vector<double> w;
    std::vector<double> b;
};

inline void linear_forward(const Linear& l, const std::vector<double>& in,
                           std::vector<double>& out) {
    require(static_cast<int>(in.size()) == l.in_dim, "linear: input size mismatch");
    out.assign(static_cast<std::size_t>(l.out_dim), 0.0);
    for (int o = 0; o < l.out_dim; ++o) {
        const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in_dim;
        double acc = l.b[static_cast<std::size_t>(o)];
        for (int i = 0; i < l.in_dim; ++i) acc += wrow[i] * in[i];
        out[static_cast<std::size_t>(o)] = acc;
    }
}

inline void linear_backward(const Linear& l, const std::vector<double>& in,
                            const std::vector<double>& dout, std::vector<double>& dw,
                            std::vector<double>& db, std::vector<double>* din) {
    if (din) din->assign(static_cast<std::size_t>(l.in_dim), 0.0);
    for (int o = 0; o < l.out_dim; ++o) {
        const double g = dout[static_cast<std::size_t>(o)];
        if (g == 0.0) continue;
        db[static_cast<std::size_t>(o)] += g;
        const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in_dim;
        double* dwrow = dw.data() + static_cast<std::size_t>(o) * l.in_dim;
        for (int i = 0; i < l.in_dim; ++i) {
            dwrow[i] += g * in[i];
            if (din) (*din)[static_cast<std::size_t>(i)] += g * wrow[i];
        }
    }
}

// Adaptive average pooling over the time axis: [ch][frames] -> [ch][groups],
// group g spans [floor(g*F/G), ceil((g+1)*F/G)).
inline void adaptive_avg_pool(const std::vector<double>& in, int channels, int frames,
                              int groups, std::vector<double>& out) {
    require(frames >= 1, "adaptive_avg_pool: empty input");
    out.assign(static_cast<std::size_t>(channels) * groups, 0.0);
    for (int c = 0; c < channels; ++c) {
        const double* irow = in.data() + static_cast<std::size_t>(c) * frames;
        for (int g = 0; g < groups; ++g) {
            const int start = (g * frames) / groups;
            const int end = ((g + 1) * frames + groups - 1) / groups;
            double acc = 0.0;
            for (int f = start; f < end; ++f) acc += irow[f];
            out[static_cast<std::size_t>(c) * groups + g] = acc / (end - start);
        }
    }
}

inline void adaptive_avg_pool_backward(const std::vector<double>& dout, int channels, int frames,
                                       int groups, std::vector<double>& din) {
    din.assign(static_cast<std::size_t>(channels) * frames, 0.0);
    for (int c = 0; c < channels; ++c) {
        double* drow = din.data() + static_cast<std::size_t>(c) * frames;
        for (int g = 0; g < groups; ++g) {
            const int start = (g * frames) / groups;
            const int end = ((g + 1) * frames + groups - 1) / groups;
            const double share = dout[static_cast<std::size_t>(c) * groups + g] / (end - start);
            for (int f = start; f < end; ++f) drow[f] += share;
        }
    }
}

} // namespace decor
