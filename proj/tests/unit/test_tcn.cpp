#include <doctest.h>

#include "cantcn/nn/tcn.hpp"
#include "nn_checks.hpp"

using namespace cantcn::nn;
using cantcn::testing::random_tensor;

TEST_CASE("zero residual branch passes non-negative input through")
{
    ModelConfig cfg;
    auto model = make_model(cfg);
    std::mt19937_64 gen(1);
    const auto x = random_tensor(gen, 2, 20, 64, 0.0, 2.0);
    const auto& block = model.blocks[1];
    REQUIRE_FALSE(block.downsample.has_value());
    CHECK(residual_block_forward(x, block) == x);
}

TEST_CASE("zero residual branch with a projection")
{
    auto model = make_model(ModelConfig{3});
    auto block = model.blocks[0];
    REQUIRE(block.downsample.has_value());
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& w : block.downsample->weights)
        w = u(gen);
    const auto x = random_tensor(gen, 2, 7, 3);
    const auto y = residual_block_forward(x, block);
    const auto expect = relu(causal_conv1d(x, *block.downsample));
    CHECK(y == expect);

    const auto linear = residual_block_forward(x, block, false);
    CHECK(linear == causal_conv1d(x, *block.downsample));
}

TEST_CASE("architecture")
{
    const auto model = init_model(3, 7);
    CHECK(model.blocks.size() == 3);
    CHECK(model.receptive_field() == 15);
    CHECK(model.blocks[0].downsample.has_value());
    CHECK_FALSE(model.blocks[1].downsample.has_value());
    CHECK(model.blocks[2].conv1.dilation == 4);
    CHECK(model.output_proj.kernel_size == 1);
    CHECK(model.output_proj.out_channels == 3);
    // block 1: 2*3*64+64, 2*64*64+64, 3*64+64; blocks 2-3: 2*(2*64*64+64); projection 64*3+3
    CHECK(model.parameter_count() == 448 + 8256 + 256 + 4 * 8256 + 195);

    for (const auto& c : {model.blocks[0].conv1, model.blocks[2].conv2}) {
        const double bound = std::sqrt(6.0 / static_cast<double>(c.fan_in()));
        for (double w : c.weights)
            CHECK(std::abs(w) <= bound);
        for (double b : c.bias)
            CHECK(b == 0.0);
    }
    CHECK(init_model(3, 7) == model);
    CHECK_FALSE(init_model(3, 8) == model);
    CHECK_THROWS(init_model(0, 1));
    CHECK_THROWS(init_model(9, 1));
}

TEST_CASE("forward shapes")
{
    const auto model = init_model(3, 1);
    const auto y = tcn_forward(Tensor3(2, 20, 3), model);
    CHECK(y.batch() == 2);
    CHECK(y.time() == 20);
    CHECK(y.channels() == 3);
    CHECK_THROWS_AS(tcn_forward(Tensor3(2, 20, 2), model), ShapeError);

    const auto zero = make_model(ModelConfig{3});
    const auto y0 = tcn_forward(Tensor3(2, 20, 3), zero);
    for (double v : y0.values())
        CHECK(v == 0.0);
}

TEST_CASE("causality and receptive field")
{
    std::mt19937_64 gen(3);
    auto model = init_model(2, 11);
    cantcn::testing::jitter_biases(model, gen);
    const auto x = random_tensor(gen, 2, 20, 2);
    CHECK(cantcn::testing::is_causal(model, x, gen));

    const auto pos = cantcn::testing::sensitive_positions(model, x, 19);
    std::set<std::size_t> expect;
    for (std::size_t t = 5; t <= 19; ++t)
        expect.insert(t);
    CHECK(pos == expect);
}

TEST_CASE("mse loss")
{
    Tensor3 y(1, 2, 1), t(1, 2, 1);
    y(0, 0, 0) = 1;
    y(0, 1, 0) = 1;
    t(0, 1, 0) = 2;
    CHECK(mse_loss(y, t) == 1.0);
    CHECK(mse_loss(y, y) == 0.0);
    CHECK_THROWS_AS(mse_loss(y, Tensor3(1, 3, 1)), ShapeError);

    std::mt19937_64 gen(4);
    const auto a = random_tensor(gen, 3, 5, 2);
    const auto b = random_tensor(gen, 3, 5, 2);
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t c = 0; c < 2; ++c)
                sum += (a(i, j, c) - b(i, j, c)) * (a(i, j, c) - b(i, j, c));
    CHECK(std::abs(mse_loss(a, b) - sum / 30.0) <= 1e-12);
}

TEST_CASE("single weight gradient")
{
    // y = w*x through a 1x1 convolution, L = (y - 0)^2 -> dL/dw = 2*y*x.
    Conv1d c(1, 1, 1, 1);
    c.weights = {1.0};
    Tensor3 x(1, 1, 1, 2.0);
    const auto y = causal_conv1d(x, c);
    Tensor3 dy(1, 1, 1, 2.0 * y(0, 0, 0));
    Conv1d grad(1, 1, 1, 1);
    causal_conv1d_backward(x, c, dy, grad);
    CHECK(grad.weights[0] == 8.0);
}

TEST_CASE("zero loss gives zero gradients")
{
    const auto model = make_model(ModelConfig{2});
    const Tensor3 x(2, 20, 2);
    const auto g = backward(model, x, x);
    CHECK(g.loss == 0.0);
    for (auto s : g.grads.parameters())
        for (double v : s)
            CHECK(v == 0.0);
}

TEST_CASE("analytic gradient agrees with finite differences")
{
    std::mt19937_64 gen(5);
    for (bool relu_after_add : {true, false}) {
        ModelConfig cfg;
        cfg.n_signals = 2;
        cfg.filters = 6;
        cfg.relu_after_add = relu_after_add;
        auto model = init_model(cfg, 21);
        cantcn::testing::jitter_biases(model, gen);
        const auto x = random_tensor(gen, 2, 20, 2, 0.0, 1.0);
        const auto target = random_tensor(gen, 2, 20, 2, 0.0, 1.0);
        const auto r = cantcn::testing::gradient_check(model, x, target);
        CHECK(r.checked == model.parameter_count());
        CHECK(r.max_rel_error < 1e-4);
    }
}
