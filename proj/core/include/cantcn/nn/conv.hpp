#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cantcn/nn/tensor.hpp"

namespace cantcn::nn {

/// Weights of a dilated causal 1-D convolution. weights are laid out as
/// (tap, in_channel, out_channel), so tap j reads the input (k-1-j)*dilation
/// steps in the past.
struct Conv1d
{
    std::size_t kernel_size = 1;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t dilation = 1;
    AlignedBuffer weights;
    AlignedBuffer bias;

    Conv1d() = default;
    Conv1d(std::size_t kernel, std::size_t in, std::size_t out, std::size_t dilation_factor = 1);

    double& weight(std::size_t tap, std::size_t in, std::size_t out)
    {
        return weights[(tap * in_channels + in) * out_channels + out];
    }
    double weight(std::size_t tap, std::size_t in, std::size_t out) const
    {
        return weights[(tap * in_channels + in) * out_channels + out];
    }

    std::size_t fan_in() const { return kernel_size * in_channels; }
    /// How many past steps one output can see beyond its own position.
    std::size_t history() const { return (kernel_size - 1) * dilation; }

    bool operator==(const Conv1d&) const = default;
};

/// y[b,t,o] = bias[o] + sum_j sum_c w[j,c,o] * x[b, t-(k-1-j)*d, c], with
/// positions before the start of the sequence reading zero.
Tensor3 causal_conv1d(const Tensor3& x, const Conv1d& conv);

/// Accumulates dL/dweights and dL/dbias into grad (same shape as conv) and
/// returns dL/dx, or an empty tensor when want_input_grad is false.
Tensor3 causal_conv1d_backward(const Tensor3& x, const Conv1d& conv, const Tensor3& grad_out, Conv1d& grad,
                               bool want_input_grad = true);

} // namespace cantcn::nn
