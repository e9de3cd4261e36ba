#include "cantcn/nn/tensor.hpp"

#include <fmt/format.h>

namespace cantcn::nn {

Tensor3::Tensor3(std::size_t batch, std::size_t time, std::size_t channels, double fill)
    : batch_(batch)
    , time_(time)
    , channels_(channels)
{
    if (batch == 0 || time == 0 || channels == 0)
        throw ShapeError(fmt::format("tensor dimensions must be positive, got ({}, {}, {})", batch, time, channels));
    values_.assign(batch * time * channels, fill);
}

std::string Tensor3::shape_string() const
{
    return fmt::format("({}, {}, {})", batch_, time_, channels_);
}

} // namespace cantcn::nn
