#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cantcn/nn/tensor.hpp"
#include "cantcn/series.hpp"

namespace cantcn::detector {

/// Stride-one sliding windows over a series. Window i covers messages
/// [i, i + window - 1]; windows are contiguous slices of the row-major values.
class WindowedDataset
{
public:
    WindowedDataset(const SignalSeries& series, std::size_t window);

    std::size_t count() const { return count_; }
    std::size_t window() const { return window_; }
    std::size_t n_signals() const { return n_signals_; }

    std::span<const double> window_values(std::size_t i) const;

    /// Stack the selected windows into a (indices.size(), window, n_signals) batch.
    nn::Tensor3 gather(std::span<const std::size_t> indices) const;
    /// Windows [first, last) in order.
    nn::Tensor3 gather_range(std::size_t first, std::size_t last) const;

private:
    std::vector<double> values_;
    std::size_t window_;
    std::size_t n_signals_;
    std::size_t count_;
};

/// Throws std::length_error when the series is shorter than the window.
WindowedDataset make_windows(const SignalSeries& series, std::size_t window);

} // namespace cantcn::detector
