#include "cantcn/nn/tcn.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

namespace cantcn::nn {

namespace {

template <typename Model, typename Fn>
void for_each_conv(Model& model, Fn&& fn)
{
    for (auto& block : model.blocks) {
        fn(block.conv1);
        fn(block.conv2);
        if (block.downsample)
            fn(*block.downsample);
    }
    fn(model.output_proj);
}

struct BlockCache
{
    Tensor3 input;
    Tensor3 h1; // conv1 output before ReLU
    Tensor3 a1; // ReLU(h1)
    Tensor3 z;  // conv2(a1) + skip(input)
};

void add_inplace(Tensor3& a, const Tensor3& b)
{
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i)
        av[i] += bv[i];
}

// grad *= (pre > 0)
void relu_backward_inplace(Tensor3& grad, const Tensor3& pre)
{
    auto g = grad.values();
    auto p = pre.values();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(p[i] > 0.0))
            g[i] = 0.0;
}

Tensor3 block_forward(const Tensor3& x, const ResidualBlock& block, bool relu_after_add, BlockCache* cache)
{
    Tensor3 h1 = causal_conv1d(x, block.conv1);
    Tensor3 a1 = relu(h1);
    Tensor3 z = causal_conv1d(a1, block.conv2);
    if (block.downsample) {
        add_inplace(z, causal_conv1d(x, *block.downsample));
    } else {
        if (!z.same_shape(x))
            throw ShapeError(fmt::format("identity skip of {} cannot be added to {}", x.shape_string(),
                                         z.shape_string()));
        add_inplace(z, x);
    }
    Tensor3 out = relu_after_add ? relu(z) : z;
    if (cache) {
        cache->input = x;
        cache->h1 = std::move(h1);
        cache->a1 = std::move(a1);
        cache->z = std::move(z);
    }
    return out;
}

void check_model_input(const Tensor3& x, const TcnModel& model)
{
    if (x.channels() != model.n_signals())
        throw ShapeError(fmt::format("model reconstructs {} signals, input is {}", model.n_signals(),
                                     x.shape_string()));
}

} // namespace

std::size_t TcnModel::receptive_field() const
{
    std::size_t rf = 1;
    for (const auto& block : blocks)
        rf += block.conv1.history() + block.conv2.history();
    return rf;
}

std::vector<std::span<double>> TcnModel::parameters()
{
    std::vector<std::span<double>> out;
    for_each_conv(*this, [&](Conv1d& c) {
        out.emplace_back(c.weights);
        out.emplace_back(c.bias);
    });
    return out;
}

std::vector<std::span<const double>> TcnModel::parameters() const
{
    std::vector<std::span<const double>> out;
    for_each_conv(*this, [&](const Conv1d& c) {
        out.emplace_back(c.weights);
        out.emplace_back(c.bias);
    });
    return out;
}

std::size_t TcnModel::parameter_count() const
{
    std::size_t n = 0;
    for (auto p : parameters())
        n += p.size();
    return n;
}

TcnModel TcnModel::zeros_like() const
{
    TcnModel out = *this;
    for (auto p : out.parameters())
        std::fill(p.begin(), p.end(), 0.0);
    return out;
}

TcnModel make_model(const ModelConfig& config)
{
    if (config.n_signals < 1 || config.n_signals > kMaxSignals)
        throw std::invalid_argument(fmt::format("n_signals must be in [1, {}], got {}", kMaxSignals, config.n_signals));
    if (config.filters == 0 || config.kernel_size == 0 || config.dilations.empty())
        throw std::invalid_argument("model needs positive filters, kernel size and at least one block");

    TcnModel model;
    model.config = config;
    std::size_t width = config.n_signals;
    for (std::size_t d : config.dilations) {
        ResidualBlock block{Conv1d(config.kernel_size, width, config.filters, d),
                            Conv1d(config.kernel_size, config.filters, config.filters, d), std::nullopt};
        if (width != config.filters)
            block.downsample = Conv1d(1, width, config.filters, 1);
        model.blocks.push_back(std::move(block));
        width = config.filters;
    }
    model.output_proj = Conv1d(1, config.filters, config.n_signals, 1);
    return model;
}

TcnModel init_model(const ModelConfig& config, std::uint64_t seed)
{
    TcnModel model = make_model(config);
    std::mt19937_64 gen(seed);
    for_each_conv(model, [&](Conv1d& c) {
        const double bound = std::sqrt(6.0 / static_cast<double>(c.fan_in()));
        for (double& w : c.weights) {
            const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
            w = (2.0 * u - 1.0) * bound;
        }
    });
    return model;
}

TcnModel init_model(std::size_t n_signals, std::uint64_t seed)
{
    ModelConfig config;
    config.n_signals = n_signals;
    return init_model(config, seed);
}

Tensor3 relu(Tensor3 x)
{
    for (double& v : x.values())
        v = v > 0.0 ? v : 0.0;
    return x;
}

Tensor3 residual_block_forward(const Tensor3& x, const ResidualBlock& block, bool relu_after_add)
{
    return block_forward(x, block, relu_after_add, nullptr);
}

Tensor3 tcn_forward(const Tensor3& x, const TcnModel& model)
{
    check_model_input(x, model);
    Tensor3 h = x;
    for (const auto& block : model.blocks)
        h = block_forward(h, block, model.config.relu_after_add, nullptr);
    return causal_conv1d(h, model.output_proj);
}

double mse_loss(const Tensor3& y, const Tensor3& target)
{
    if (!y.same_shape(target))
        throw ShapeError(fmt::format("loss shapes differ: {} vs {}", y.shape_string(), target.shape_string()));
    auto a = y.values();
    auto b = target.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

Gradients backward(const TcnModel& model, const Tensor3& x, const Tensor3& target)
{
    check_model_input(x, model);
    if (!x.same_shape(target))
        throw ShapeError(fmt::format("target {} does not match input {}", target.shape_string(), x.shape_string()));

    std::vector<BlockCache> caches(model.blocks.size());
    Tensor3 h = x;
    for (std::size_t i = 0; i < model.blocks.size(); ++i)
        h = block_forward(h, model.blocks[i], model.config.relu_after_add, &caches[i]);
    const Tensor3 y = causal_conv1d(h, model.output_proj);

    Gradients out;
    out.loss = mse_loss(y, target);
    out.grads = model.zeros_like();

    Tensor3 dy(y.batch(), y.time(), y.channels());
    const double scale = 2.0 / static_cast<double>(y.size());
    for (std::size_t i = 0; i < dy.size(); ++i)
        dy.values()[i] = scale * (y.values()[i] - target.values()[i]);

    Tensor3 grad = causal_conv1d_backward(h, model.output_proj, dy, out.grads.output_proj);

    for (std::size_t i = model.blocks.size(); i-- > 0;) {
        const auto& block = model.blocks[i];
        auto& gblock = out.grads.blocks[i];
        const auto& cache = caches[i];
        const bool need_input_grad = i > 0;

        // grad is dL/d(block output); turn it into dL/dz.
        if (model.config.relu_after_add)
            relu_backward_inplace(grad, cache.z);

        Tensor3 da1 = causal_conv1d_backward(cache.a1, block.conv2, grad, gblock.conv2);
        relu_backward_inplace(da1, cache.h1);
        Tensor3 dx = causal_conv1d_backward(cache.input, block.conv1, da1, gblock.conv1, need_input_grad);

        if (block.downsample) {
            Tensor3 dskip =
                causal_conv1d_backward(cache.input, *block.downsample, grad, *gblock.downsample, need_input_grad);
            if (need_input_grad)
                add_inplace(dx, dskip);
        } else if (need_input_grad) {
            add_inplace(dx, grad);
        }
        grad = std::move(dx);
    }
    return out;
}

} // namespace cantcn::nn
