#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "decor/backprop.hpp"
#include "decor/common.hpp"
#include "decor/model.hpp"

namespace decor {

// Adaptive-moment optimizer with decoupled weight decay. Weight decay touches
// only tensors flagged in tensor_refs (conv/linear weight matrices).
struct OptimizerConfig {
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-2;
    double decay_time_clamp_lo_s = 0.01;
    double decay_time_clamp_hi_s = 10.0;
};

struct OptimizerState {
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

inline OptimizerState init_optimizer_state(const ModelParams& p) {
    OptimizerState s;
    for (const TensorRef& ref : tensor_refs(p)) {
        s.m.emplace_back(ref.data->size(), 0.0);
        s.v.emplace_back(ref.data->size(), 0.0);
    }
    return s;
}

// One update step. Parameters and moments are rounded to f32-representable
// values afterwards so checkpoints serialize them losslessly.
inline void optimizer_step(ModelParams& p, const GradientSet& grads, OptimizerState& state,
                           const OptimizerConfig& cfg) {
    std::vector<TensorRef> refs = tensor_refs(p);
    require(grads.tensors.size() == refs.size() && state.m.size() == refs.size(),
            "optimizer_step: layout mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < refs.size(); ++i) {
        std::vector<double>& param = *refs[i].data;
        const std::vector<double>& g = grads.tensors[i];
        std::vector<double>& m = state.m[i];
        std::vector<double>& v = state.v[i];
        const double lambda = refs[i].apply_weight_decay ? cfg.weight_decay : 0.0;
        for (std::size_t k = 0; k < param.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double m_hat = m[k] / bc1;
            const double v_hat = v[k] / bc2;
            double x = param[k];
            x -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
            x -= cfg.learning_rate * lambda * param[k];
            param[k] = round_to_f32(x);
            m[k] = round_to_f32(m[k]);
            v[k] = round_to_f32(v[k]);
        }
    }
    for (double& t60 : p.decay_times) {
        if (t60 < cfg.decay_time_clamp_lo_s) t60 = cfg.decay_time_clamp_lo_s;
        if (t60 > cfg.decay_time_clamp_hi_s) t60 = cfg.decay_time_clamp_hi_s;
    }
}

} // namespace decor
