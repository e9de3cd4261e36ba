#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cantcn {

/// Per-message signal values of one message ID, row-major (message, signal).
struct SignalSeries
{
    std::string msg_id;
    std::size_t n_signals = 0;
    std::vector<double> timestamps;
    std::vector<double> values;

    SignalSeries() = default;
    SignalSeries(std::string id, std::size_t signals) : msg_id(std::move(id)), n_signals(signals) {}

    std::size_t size() const { return timestamps.size(); }
    bool empty() const { return timestamps.empty(); }

    double at(std::size_t t, std::size_t s) const { return values[t * n_signals + s]; }
    double& at(std::size_t t, std::size_t s) { return values[t * n_signals + s]; }

    std::span<const double> row(std::size_t t) const
    {
        return {values.data() + t * n_signals, n_signals};
    }

    void push_back(double timestamp, std::span<const double> row_values)
    {
        if (row_values.size() != n_signals)
            throw std::invalid_argument("signal count " + std::to_string(row_values.size()) +
                                        " does not match series width " + std::to_string(n_signals));
        timestamps.push_back(timestamp);
        values.insert(values.end(), row_values.begin(), row_values.end());
    }

    /// Messages [first, last) as a new series.
    SignalSeries slice(std::size_t first, std::size_t last) const
    {
        if (first > last || last > size())
            throw std::out_of_range("series slice out of range");
        SignalSeries out(msg_id, n_signals);
        out.timestamps.assign(timestamps.begin() + first, timestamps.begin() + last);
        out.values.assign(values.begin() + first * n_signals, values.begin() + last * n_signals);
        return out;
    }
};

} // namespace cantcn
