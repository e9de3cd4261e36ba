#pragma once

// Test-only generator of a clean, correlated multi-signal CAN trace.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "cantcn/canlog.hpp"
#include "cantcn/sigmap.hpp"

namespace cantcn::testing {

struct SinusoidTrace
{
    std::uint32_t can_id = 0x1A0;
    std::size_t period = 64;     ///< messages per cycle of the base oscillation
    double noise_sigma = 0.01;   ///< on the unit-scaled signal
    std::int64_t step_us = 10'000;
    std::uint64_t seed = 1;
};

/// Three 16-bit big-endian signals packed into a 6-byte payload.
inline sigmap::SignalLayout sinusoid_layout(std::uint32_t can_id)
{
    sigmap::SignalLayout layout;
    layout.msg_id = can_id;
    layout.dlc = 6;
    layout.specs = {{0, 0, 16}, {1, 16, 16}, {2, 32, 16}};
    return layout;
}

/// Unit-scale values of the three signals at message n (before noise).
inline std::array<double, 3> sinusoid_values(double n, std::size_t period)
{
    const double theta = 2.0 * std::numbers::pi * n / static_cast<double>(period);
    return {0.5 + 0.4 * std::sin(theta), 0.5 + 0.4 * std::sin(theta + 0.6),
            0.5 + 0.25 * std::sin(theta) + 0.15 * std::sin(2.0 * theta + 0.3)};
}

/// Messages [first, first + count) of the infinite trace.
inline std::vector<canlog::CanFrame> make_sinusoid_frames(const SinusoidTrace& cfg, std::size_t first,
                                                          std::size_t count)
{
    const auto layout = sinusoid_layout(cfg.can_id);
    std::mt19937_64 gen(cfg.seed ^ (first * 0x9E3779B97F4A7C15ull));
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);

    std::vector<canlog::CanFrame> frames;
    frames.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t n = first + i;
        canlog::CanFrame f;
        f.can_id = cfg.can_id;
        f.timestamp_us = static_cast<std::int64_t>(n) * cfg.step_us;
        f.dlc = layout.dlc;
        const auto v = sinusoid_values(static_cast<double>(n), cfg.period);
        for (std::size_t s = 0; s < 3; ++s) {
            const double unit = std::clamp(v[s] + noise(gen), 0.0, 1.0);
            sigmap::encode_signal(f.payload(), layout.specs[s], static_cast<std::uint64_t>(std::lround(unit * 65535.0)));
        }
        frames.push_back(f);
    }
    return frames;
}

} // namespace cantcn::testing
