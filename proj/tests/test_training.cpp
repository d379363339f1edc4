#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include <decor/backprop.hpp>
#include <decor/optimizer.hpp>

#include "test_helpers.hpp"

using namespace decor;
using namespace decor::testing;

TEST_CASE("analytic gradients match central finite differences", "[training][grad]") {
    const ModelConfig cfg = tiny_model_config();
    ModelParams params = gradcheck_params(cfg, 2024);
    const Signal head = make_test_head(cfg, 41);
    const Signal tail = make_test_tail(cfg, 43);
    const CompletionSeeds seeds{101, 202};

    const GradCheckWorst worst =
        gradient_check(params, head, tail, seeds, tiny_resolutions(), 12, 1e-4);
    INFO("worst tensor " << worst.tensor << "[" << worst.index << "] analytic "
                         << worst.analytic << " numeric " << worst.numeric << " over "
                         << worst.checked << " entries");
    REQUIRE(worst.checked > 300);
    REQUIRE(worst.max_rel_error <= kGradCheckRtol);
}

TEST_CASE("loss and signal gradient vanish when prediction equals target", "[training]") {
    const ModelConfig cfg = tiny_model_config();
    const Signal tail = make_test_tail(cfg, 47);
    const LossWithGrad lg = mstft_loss_with_grad(tail, tail, tiny_resolutions());
    REQUIRE(lg.loss == 0.0);
    for (double g : lg.dpred) REQUIRE(g == 0.0);
}

TEST_CASE("duplicating a batch example leaves mean loss and gradients unchanged", "[training]") {
    const ModelConfig cfg = tiny_model_config();
    const ModelParams params = init_model_params(cfg, 3030);
    const Signal head = make_test_head(cfg, 53);
    const Signal tail = make_test_tail(cfg, 59);
    const CompletionSeeds seeds{11, 22};

    const BatchResult single =
        forward_backward({BatchItem{&head, &tail, seeds}}, params, tiny_resolutions(), 1);
    const BatchResult doubled = forward_backward(
        {BatchItem{&head, &tail, seeds}, BatchItem{&head, &tail, seeds}}, params,
        tiny_resolutions(), 1);

    REQUIRE(doubled.loss == Catch::Approx(single.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < single.grads.tensors.size(); ++i)
        for (std::size_t k = 0; k < single.grads.tensors[i].size(); ++k)
            REQUIRE(doubled.grads.tensors[i][k] ==
                    Catch::Approx(single.grads.tensors[i][k]).margin(1e-12));
}

TEST_CASE("batch gradients do not depend on the thread count", "[training]") {
    const ModelConfig cfg = tiny_model_config();
    const ModelParams params = init_model_params(cfg, 4040);
    std::vector<Signal> heads, tails;
    for (std::uint64_t i = 0; i < 5; ++i) {
        heads.push_back(make_test_head(cfg, 100 + i));
        tails.push_back(make_test_tail(cfg, 200 + i, 0.2 + 0.1 * static_cast<double>(i)));
    }
    std::vector<BatchItem> batch;
    for (std::size_t i = 0; i < heads.size(); ++i)
        batch.push_back({&heads[i], &tails[i], CompletionSeeds{i, 50 + i}});

    const BatchResult serial = forward_backward(batch, params, tiny_resolutions(), 1);
    const BatchResult threaded = forward_backward(batch, params, tiny_resolutions(), 4);
    REQUIRE(serial.loss == threaded.loss);
    REQUIRE(serial.grads.tensors == threaded.grads.tensors);
}

TEST_CASE("divergence raises a dedicated error", "[training]") {
    const ModelConfig cfg = tiny_model_config();
    ModelParams params = init_model_params(cfg, 5050);
    params.mix_weights[0] = std::numeric_limits<double>::quiet_NaN();
    const Signal head = make_test_head(cfg, 61);
    const Signal tail = make_test_tail(cfg, 67);
    REQUIRE_THROWS_AS(
        forward_backward({BatchItem{&head, &tail, CompletionSeeds{1, 2}}}, params,
                         tiny_resolutions(), 1),
        DivergenceError);
}

TEST_CASE("optimizer leaves parameters alone for zero gradients without decay", "[training]") {
    const ModelConfig cfg = tiny_model_config();
    ModelParams params = init_model_params(cfg, 7);
    const ModelParams before = params;
    OptimizerState state = init_optimizer_state(params);
    OptimizerConfig ocfg;
    ocfg.weight_decay = 0.0;
    const GradientSet zeros = zero_gradients(params);
    optimizer_step(params, zeros, state, ocfg);
    for (std::size_t i = 0; i < tensor_refs(params).size(); ++i)
        REQUIRE(*tensor_refs(params)[i].data == *tensor_refs(before)[i].data);
}

TEST_CASE("optimizer step size approaches the learning rate under unit gradients", "[training]") {
    const ModelConfig cfg = tiny_model_config();
    ModelParams params = init_model_params(cfg, 1);
    OptimizerState state = init_optimizer_state(params);
    OptimizerConfig ocfg;
    ocfg.learning_rate = 1e-3;
    ocfg.weight_decay = 0.0;
    GradientSet g = zero_gradients(params);
    const GradientLayout lay = gradient_layout(params);
    const std::size_t probe = lay.mix_weights();

    double prev = params.mix_weights[0];
    double step_size = 0.0;
    for (int iter = 0; iter < 400; ++iter) {
        g.tensors[probe][0] = 1.0;
        optimizer_step(params, g, state, ocfg);
        const double cur = params.mix_weights[0];
        step_size = prev - cur;
        prev = cur;
    }
    REQUIRE(step_size == Catch::Approx(ocfg.learning_rate).epsilon(0.01));
}

TEST_CASE("decoupled weight decay shrinks weights geometrically", "[training]") {
    const ModelConfig cfg = tiny_model_config();
    ModelParams params = init_model_params(cfg, 9);
    OptimizerState state = init_optimizer_state(params);
    OptimizerConfig ocfg;
    ocfg.learning_rate = 1e-2;
    ocfg.weight_decay = 0.1;
    const GradientSet zeros = zero_gradients(params);

    const double w0 = params.blocks[0].conv.w[0];
    const double b0 = params.blocks[0].conv.b[0];
    const double t0 = params.decay_times[0];
    optimizer_step(params, zeros, state, ocfg);
    REQUIRE(params.blocks[0].conv.w[0] ==
            Catch::Approx(w0 * (1.0 - ocfg.learning_rate * ocfg.weight_decay)).epsilon(1e-6));
    REQUIRE(params.blocks[0].conv.b[0] == b0); // biases are not decayed
    REQUIRE(params.decay_times[0] == t0);      // nor the decay-time grid
}

TEST_CASE("decay times are clamped after each step", "[training]") {
    const ModelConfig cfg = tiny_model_config();
    ModelParams params = init_model_params(cfg, 11);
    OptimizerState state = init_optimizer_state(params);
    OptimizerConfig ocfg;
    ocfg.learning_rate = 0.5; // push hard toward zero
    GradientSet g = zero_gradients(params);
    const GradientLayout lay = gradient_layout(params);
    std::fill(g.tensors[lay.decay_times()].begin(), g.tensors[lay.decay_times()].end(), 1.0);
    optimizer_step(params, g, state, ocfg);
    for (double t60 : params.decay_times) REQUIRE(t60 >= ocfg.decay_time_clamp_lo_s);
}
