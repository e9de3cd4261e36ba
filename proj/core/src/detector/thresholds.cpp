#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cantcn/detector/scoring.hpp"
#include "cantcn/detector/windows.hpp"

namespace cantcn::detector {

double percentile_linear(std::vector<double> values, double percentile)
{
    if (values.empty())
        throw std::invalid_argument("percentile of an empty population");
    if (!(percentile >= 0.0 && percentile <= 100.0))
        throw std::invalid_argument(fmt::format("percentile {} outside [0, 100]", percentile));
    std::sort(values.begin(), values.end());
    const double rank = percentile / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> last_position_errors(const nn::TcnModel& model, const SignalSeries& normalized,
                                         std::size_t window, std::size_t chunk)
{
    const WindowedDataset data(normalized, window);
    const std::size_t S = normalized.n_signals;
    std::vector<double> errors;
    errors.reserve(data.count() * S);
    for (std::size_t first = 0; first < data.count(); first += chunk) {
        const std::size_t last = std::min(first + chunk, data.count());
        const nn::Tensor3 x = data.gather_range(first, last);
        const nn::Tensor3 y = nn::tcn_forward(x, model);
        for (std::size_t b = 0; b < x.batch(); ++b) {
            for (std::size_t s = 0; s < S; ++s) {
                const double d = x(b, window - 1, s) - y(b, window - 1, s);
                errors.push_back(d * d);
            }
        }
    }
    return errors;
}

ThresholdSet calibrate_thresholds(const nn::TcnModel& model, const SignalSeries& validation_normalized,
                                  std::size_t window, double percentile)
{
    if (validation_normalized.size() < window || window == 0)
        throw std::length_error(fmt::format("validation series of {} messages has no complete window of {}",
                                            validation_normalized.size(), window));
    const std::size_t S = validation_normalized.n_signals;
    const auto errors = last_position_errors(model, validation_normalized, window);
    const std::size_t n = errors.size() / S;

    ThresholdSet set;
    set.percentile = percentile;
    set.validation_windows = n;
    std::vector<double> column(n);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t i = 0; i < n; ++i)
            column[i] = errors[i * S + s];
        set.thresholds.push_back(percentile_linear(column, percentile));
    }
    return set;
}

} // namespace cantcn::detector
