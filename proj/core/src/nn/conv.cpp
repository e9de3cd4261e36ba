#include "cantcn/nn/conv.hpp"

#include <algorithm>

#include <Eigen/Core>
#include <fmt/format.h>

namespace cantcn::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

void check_input(const Tensor3& x, const Conv1d& conv)
{
    if (x.channels() != conv.in_channels)
        throw ShapeError(fmt::format("convolution expects {} input channels, got tensor {}", conv.in_channels,
                                     x.shape_string()));
}

// Unrolls the causal taps into rows of (k * C_in): row (b,t) holds
// [x[b,t-(k-1)d,:], ..., x[b,t,:]] with zeros before the sequence start.
RowMatrix unroll(const Tensor3& x, const Conv1d& conv)
{
    const std::size_t T = x.time();
    const std::size_t C = conv.in_channels;
    const std::size_t k = conv.kernel_size;
    RowMatrix col = RowMatrix::Zero(static_cast<Eigen::Index>(x.batch() * T), static_cast<Eigen::Index>(k * C));
    for (std::size_t b = 0; b < x.batch(); ++b) {
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t shift = (k - 1 - j) * conv.dilation;
            for (std::size_t t = shift; t < T; ++t) {
                const double* src = x.data() + (b * T + t - shift) * C;
                double* dst = col.data() + (b * T + t) * k * C + j * C;
                std::copy(src, src + C, dst);
            }
        }
    }
    return col;
}

} // namespace

Conv1d::Conv1d(std::size_t kernel, std::size_t in, std::size_t out, std::size_t dilation_factor)
    : kernel_size(kernel)
    , in_channels(in)
    , out_channels(out)
    , dilation(dilation_factor)
    , weights(kernel * in * out, 0.0)
    , bias(out, 0.0)
{
    if (kernel == 0 || in == 0 || out == 0 || dilation_factor == 0)
        throw ShapeError("convolution dimensions and dilation must be positive");
}

Tensor3 causal_conv1d(const Tensor3& x, const Conv1d& conv)
{
    check_input(x, conv);
    const auto rows = static_cast<Eigen::Index>(x.batch() * x.time());
    Tensor3 y(x.batch(), x.time(), conv.out_channels);
    MutMap out(y.data(), rows, static_cast<Eigen::Index>(conv.out_channels));
    ConstMap w(conv.weights.data(), static_cast<Eigen::Index>(conv.fan_in()),
               static_cast<Eigen::Index>(conv.out_channels));

    if (conv.kernel_size == 1) {
        out.noalias() = ConstMap(x.data(), rows, static_cast<Eigen::Index>(conv.in_channels)) * w;
    } else {
        out.noalias() = unroll(x, conv) * w;
    }
    out.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(conv.bias.data(), static_cast<Eigen::Index>(conv.out_channels));
    return y;
}

Tensor3 causal_conv1d_backward(const Tensor3& x, const Conv1d& conv, const Tensor3& grad_out, Conv1d& grad,
                               bool want_input_grad)
{
    check_input(x, conv);
    if (grad_out.batch() != x.batch() || grad_out.time() != x.time() || grad_out.channels() != conv.out_channels)
        throw ShapeError(fmt::format("output gradient {} does not match convolution output", grad_out.shape_string()));
    if (grad.weights.size() != conv.weights.size() || grad.bias.size() != conv.bias.size())
        throw ShapeError("gradient buffer shape differs from convolution");

    const auto rows = static_cast<Eigen::Index>(x.batch() * x.time());
    const auto fan_in = static_cast<Eigen::Index>(conv.fan_in());
    const auto n_out = static_cast<Eigen::Index>(conv.out_channels);
    ConstMap dy(grad_out.data(), rows, n_out);
    ConstMap w(conv.weights.data(), fan_in, n_out);
    MutMap dw(grad.weights.data(), fan_in, n_out);
    Eigen::Map<Eigen::RowVectorXd>(grad.bias.data(), n_out) += dy.colwise().sum();

    if (conv.kernel_size == 1) {
        ConstMap col(x.data(), rows, fan_in);
        dw.noalias() += col.transpose() * dy;
        if (!want_input_grad)
            return {};
        Tensor3 dx(x.batch(), x.time(), x.channels());
        MutMap(dx.data(), rows, fan_in).noalias() = dy * w.transpose();
        return dx;
    }

    const RowMatrix col = unroll(x, conv);
    dw.noalias() += col.transpose() * dy;
    if (!want_input_grad)
        return {};

    const RowMatrix dcol = dy * w.transpose();
    const std::size_t T = x.time();
    const std::size_t C = conv.in_channels;
    const std::size_t k = conv.kernel_size;
    Tensor3 dx(x.batch(), T, C);
    for (std::size_t b = 0; b < x.batch(); ++b) {
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t shift = (k - 1 - j) * conv.dilation;
            for (std::size_t t = shift; t < T; ++t) {
                const double* src = dcol.data() + (b * T + t) * k * C + j * C;
                double* dst = &dx(b, t - shift, 0);
                for (std::size_t c = 0; c < C; ++c)
                    dst[c] += src[c];
            }
        }
    }
    return dx;
}

} // namespace cantcn::nn
