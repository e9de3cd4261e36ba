#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cantcn/canlog.hpp"
#include "cantcn/series.hpp"

namespace cantcn::sigmap {

inline constexpr std::size_t kPayloadBits = 64;

class InsufficientData : public std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Bit positions are numbered MSB-first across the payload: bit 0 is the MSB
/// of byte 0, bit 63 the LSB of byte 7.
struct BitStats
{
    std::uint32_t msg_id = 0;
    std::uint8_t dlc = 0;
    std::size_t frame_count = 0;
    std::array<double, kPayloadBits> flip_rate{};
    std::array<bool, kPayloadBits> constant_mask{};
};

/// Requires at least two frames sharing one ID and one DLC.
BitStats compute_bit_stats(std::span<const canlog::CanFrame> frames);

struct SignalSpec
{
    std::size_t signal_index = 0;
    std::size_t start_bit = 0;
    std::size_t bit_length = 1;

    std::size_t end_bit() const { return start_bit + bit_length; }
    bool operator==(const SignalSpec&) const = default;
};

struct BitField
{
    std::size_t start_bit = 0;
    std::size_t bit_length = 0;
    bool operator==(const BitField&) const = default;
};

struct SignalLayout
{
    std::uint32_t msg_id = 0;
    bool extended = false;
    std::uint8_t dlc = 0;
    std::vector<SignalSpec> specs;
    std::vector<BitField> static_fields;

    std::size_t n_signals() const { return specs.size(); }
    const SignalSpec& spec(std::size_t signal_index) const;
    bool operator==(const SignalLayout&) const = default;
};

/// Splits the observed payload into constant regions and signals. Inside a
/// non-constant run a new signal begins wherever the flip rate drops relative
/// to the previous bit.
SignalLayout infer_signal_layout(const BitStats& stats);

/// Throws std::invalid_argument unless specs and static fields tile
/// [0, dlc*8) in order without overlap.
void validate_layout(const SignalLayout& layout);

std::uint64_t decode_raw(std::span<const std::uint8_t> payload, const SignalSpec& spec);
std::vector<double> decode_signals(const canlog::CanFrame& frame, const SignalLayout& layout);

/// Replace the spec's bits with the big-endian bits of value. Values that do
/// not fit in bit_length bits are rejected.
void encode_signal(std::span<std::uint8_t> payload, const SignalSpec& spec, std::uint64_t value);

std::uint64_t max_raw_value(const SignalSpec& spec);

/// Decode every frame of one ID into a series of raw signal values.
SignalSeries decode_series(std::span<const canlog::CanFrame> frames, const SignalLayout& layout);

std::string layout_to_json(const SignalLayout& layout);
SignalLayout layout_from_json(const std::string& text);
std::string bit_stats_to_csv(const BitStats& stats);

/// Per-signal min/max scaling to the unit interval, fitted on training data.
/// apply() extrapolates linearly outside the fitted range; it never clamps.
class Normalizer
{
public:
    Normalizer() = default;
    Normalizer(std::vector<double> mins, std::vector<double> maxs);

    static Normalizer fit(const SignalSeries& series);

    std::size_t n_signals() const { return mins_.size(); }
    const std::vector<double>& mins() const { return mins_; }
    const std::vector<double>& maxs() const { return maxs_; }

    double apply(std::size_t signal, double value) const;
    double invert(std::size_t signal, double value) const;

    SignalSeries apply(const SignalSeries& series) const;
    SignalSeries invert(const SignalSeries& series) const;

    bool operator==(const Normalizer&) const = default;

private:
    void check_width(const SignalSeries& series) const;

    std::vector<double> mins_;
    std::vector<double> maxs_;
};

} // namespace cantcn::sigmap
