#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cantcn/series.hpp"

namespace cantcn::canlog {

inline constexpr std::size_t kMaxPayload = 8;
inline constexpr std::uint32_t kMaxCanId = (1u << 29) - 1;

/// One raw CAN message. Timestamps are kept as integer microseconds so that
/// candump text round-trips exactly.
struct CanFrame
{
    std::int64_t timestamp_us = 0;
    std::string channel = "can0";
    std::uint32_t can_id = 0;
    bool extended = false; ///< written with 8 hex digits instead of 3
    std::uint8_t dlc = 0;
    std::array<std::uint8_t, kMaxPayload> data{};

    double seconds() const { return static_cast<double>(timestamp_us) * 1e-6; }
    std::span<const std::uint8_t> payload() const { return {data.data(), dlc}; }
    std::span<std::uint8_t> payload() { return {data.data(), dlc}; }

    void set_payload(std::span<const std::uint8_t> bytes);

    bool operator==(const CanFrame&) const = default;
};

/// One row of a labeled signal CSV (SynCAN layout).
struct SignalRecord
{
    double timestamp = 0.0;
    std::string msg_id;
    std::uint8_t label = 0;
    std::vector<double> signals;

    bool operator==(const SignalRecord&) const = default;
};

enum class SourceFormat
{
    candump,
    syncan_csv,
};

struct CanLog
{
    SourceFormat source_format = SourceFormat::candump;
    std::variant<std::vector<CanFrame>, std::vector<SignalRecord>> records;
    std::size_t skipped_blank_lines = 0;
    std::vector<std::string> warnings;

    bool is_candump() const { return std::holds_alternative<std::vector<CanFrame>>(records); }
    const std::vector<CanFrame>& frames() const;
    std::vector<CanFrame>& frames();
    const std::vector<SignalRecord>& signal_records() const;
    std::size_t size() const;
};

/// Malformed input. Line numbers are 1-based and count every physical line,
/// including the CSV header.
class ParseError : public std::runtime_error
{
public:
    ParseError(std::size_t line, std::string text, const std::string& reason);

    std::size_t line() const { return line_; }
    const std::string& text() const { return text_; }

private:
    std::size_t line_;
    std::string text_;
};

class UnsupportedFormat : public std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct ParseOptions
{
    /// Decreasing timestamps are rejected unless this is set, in which case
    /// they are recorded in CanLog::warnings and kept in file order.
    bool allow_decreasing_timestamps = false;
};

CanLog parse_candump(std::istream& in, const ParseOptions& options = {});
CanLog parse_candump(std::string_view text, const ParseOptions& options = {});

CanLog parse_syncan_csv(std::istream& in, const ParseOptions& options = {});
CanLog parse_syncan_csv(std::string_view text, const ParseOptions& options = {});

/// Guess the format from the first non-blank line: candump lines start with '('.
SourceFormat detect_format(std::string_view first_line);
CanLog read_log_file(const std::string& path, const ParseOptions& options = {});

std::string format_candump_line(const CanFrame& frame);
std::string write_candump(const CanLog& log);
void write_candump(std::ostream& out, std::span<const CanFrame> frames);

/// Hex identifier as written by candump: three digits for standard frames,
/// eight for extended ones.
std::string format_can_id(std::uint32_t can_id, bool extended);

std::map<std::uint32_t, std::vector<CanFrame>> split_by_id(std::span<const CanFrame> frames);
std::map<std::string, std::vector<SignalRecord>> split_by_id(std::span<const SignalRecord> records);

/// Signal values plus per-message labels for one message ID.
struct LabeledSeries
{
    SignalSeries series;
    std::vector<std::uint8_t> labels;
};

/// Convert the records of one ID into a series. The width is the signal count
/// of the first record; every record must agree.
LabeledSeries to_series(std::span<const SignalRecord> records);

} // namespace cantcn::canlog
