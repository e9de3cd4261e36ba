#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cantcn/nn/aligned.hpp"

namespace cantcn::nn {

class ShapeError : public std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

/// Dense (batch, time, channels) array of doubles, row-major.
class Tensor3
{
public:
    Tensor3() = default;
    Tensor3(std::size_t batch, std::size_t time, std::size_t channels, double fill = 0.0);

    std::size_t batch() const { return batch_; }
    std::size_t time() const { return time_; }
    std::size_t channels() const { return channels_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t b, std::size_t t, std::size_t c)
    {
        return values_[(b * time_ + t) * channels_ + c];
    }
    double operator()(std::size_t b, std::size_t t, std::size_t c) const
    {
        return values_[(b * time_ + t) * channels_ + c];
    }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }

    bool same_shape(const Tensor3& other) const
    {
        return batch_ == other.batch_ && time_ == other.time_ && channels_ == other.channels_;
    }
    std::string shape_string() const;

    bool operator==(const Tensor3&) const = default;

private:
    std::size_t batch_ = 0;
    std::size_t time_ = 0;
    std::size_t channels_ = 0;
    AlignedBuffer values_;
};

} // namespace cantcn::nn
