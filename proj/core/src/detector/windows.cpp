#include "cantcn/detector/windows.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace cantcn::detector {

WindowedDataset::WindowedDataset(const SignalSeries& series, std::size_t window)
    : values_(series.values)
    , window_(window)
    , n_signals_(series.n_signals)
{
    if (window == 0)
        throw std::invalid_argument("window length must be positive");
    if (series.size() < window)
        throw std::length_error(fmt::format("series of {} messages is shorter than the window of {}", series.size(),
                                            window));
    count_ = series.size() - window + 1;
}

std::span<const double> WindowedDataset::window_values(std::size_t i) const
{
    if (i >= count_)
        throw std::out_of_range(fmt::format("window {} of {}", i, count_));
    return std::span<const double>(values_).subspan(i * n_signals_, window_ * n_signals_);
}

nn::Tensor3 WindowedDataset::gather(std::span<const std::size_t> indices) const
{
    nn::Tensor3 batch(indices.size(), window_, n_signals_);
    double* dst = batch.data();
    for (std::size_t i : indices) {
        auto w = window_values(i);
        dst = std::copy(w.begin(), w.end(), dst);
    }
    return batch;
}

nn::Tensor3 WindowedDataset::gather_range(std::size_t first, std::size_t last) const
{
    if (first >= last || last > count_)
        throw std::out_of_range(fmt::format("window range [{}, {}) of {}", first, last, count_));
    nn::Tensor3 batch(last - first, window_, n_signals_);
    double* dst = batch.data();
    for (std::size_t i = first; i < last; ++i) {
        auto w = window_values(i);
        dst = std::copy(w.begin(), w.end(), dst);
    }
    return batch;
}

WindowedDataset make_windows(const SignalSeries& series, std::size_t window)
{
    return WindowedDataset(series, window);
}

} // namespace cantcn::detector
