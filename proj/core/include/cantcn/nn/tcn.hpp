#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cantcn/nn/conv.hpp"
#include "cantcn/nn/tensor.hpp"

namespace cantcn::nn {

inline constexpr std::size_t kMaxSignals = 8;

struct ModelConfig
{
    std::size_t n_signals = 1;
    std::size_t filters = 64;
    std::size_t kernel_size = 2;
    std::vector<std::size_t> dilations{1, 2, 4};
    /// y = ReLU(F(x) + skip(x)) when set, y = F(x) + skip(x) otherwise.
    bool relu_after_add = true;

    bool operator==(const ModelConfig&) const = default;
};

/// Two dilated causal convolutions sharing one dilation, plus a skip path.
/// The skip path is a 1x1 projection when the input width differs from the
/// filter count and the identity otherwise.
struct ResidualBlock
{
    Conv1d conv1;
    Conv1d conv2;
    std::optional<Conv1d> downsample;

    bool operator==(const ResidualBlock&) const = default;
};

struct TcnModel
{
    ModelConfig config;
    std::vector<ResidualBlock> blocks;
    Conv1d output_proj; ///< linear 1x1 convolution, filters -> n_signals

    std::size_t n_signals() const { return config.n_signals; }

    /// 1 + sum over every block convolution of (k-1)*d.
    std::size_t receptive_field() const;

    /// Every weight and bias array in a fixed order: per block conv1 (w, b),
    /// conv2 (w, b), downsample (w, b) if present, then the output projection.
    std::vector<std::span<double>> parameters();
    std::vector<std::span<const double>> parameters() const;
    std::size_t parameter_count() const;

    /// Same architecture with every parameter zero; used as a gradient buffer.
    TcnModel zeros_like() const;

    bool operator==(const TcnModel&) const = default;
};

/// Architecture with all parameters zero.
TcnModel make_model(const ModelConfig& config);

/// He-uniform weights in [-sqrt(6/fan_in), sqrt(6/fan_in)], zero biases.
TcnModel init_model(const ModelConfig& config, std::uint64_t seed);
TcnModel init_model(std::size_t n_signals, std::uint64_t seed);

Tensor3 relu(Tensor3 x);

Tensor3 residual_block_forward(const Tensor3& x, const ResidualBlock& block, bool relu_after_add = true);

/// Reconstruction of x; the output has the same shape as the input.
Tensor3 tcn_forward(const Tensor3& x, const TcnModel& model);

double mse_loss(const Tensor3& y, const Tensor3& target);

struct Gradients
{
    double loss = 0.0;
    TcnModel grads; ///< same shape as the model
};

/// Exact reverse-mode gradient of mse_loss(tcn_forward(x), target). The ReLU
/// derivative at zero is taken as zero.
Gradients backward(const TcnModel& model, const Tensor3& x, const Tensor3& target);

} // namespace cantcn::nn
