#include "cantcn/sigmap.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

namespace cantcn::sigmap {

namespace {

bool bit_at(std::span<const std::uint8_t> payload, std::size_t bit)
{
    return (payload[bit / 8] >> (7 - bit % 8)) & 1u;
}

void check_spec(const SignalSpec& spec)
{
    if (spec.bit_length == 0 || spec.bit_length > kPayloadBits || spec.end_bit() > kPayloadBits)
        throw std::invalid_argument(fmt::format("signal {} has invalid bit range ({}, {})", spec.signal_index,
                                                spec.start_bit, spec.bit_length));
}

} // namespace

BitStats compute_bit_stats(std::span<const canlog::CanFrame> frames)
{
    if (frames.size() < 2)
        throw InsufficientData("bit statistics need at least two frames");

    BitStats stats;
    stats.msg_id = frames.front().can_id;
    stats.dlc = frames.front().dlc;
    stats.frame_count = frames.size();

    std::array<std::size_t, kPayloadBits> flips{};
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].can_id != stats.msg_id)
            throw std::invalid_argument("bit statistics over mixed message IDs");
        if (frames[i].dlc != stats.dlc)
            throw std::invalid_argument(fmt::format("mixed DLC for ID {:X}: {} and {}", stats.msg_id, stats.dlc,
                                                    frames[i].dlc));
        if (i == 0)
            continue;
        auto prev = frames[i - 1].payload();
        auto cur = frames[i].payload();
        for (std::size_t byte = 0; byte < stats.dlc; ++byte) {
            std::uint8_t diff = prev[byte] ^ cur[byte];
            for (std::size_t b = 0; b < 8; ++b)
                flips[byte * 8 + b] += (diff >> (7 - b)) & 1u;
        }
    }

    const double pairs = static_cast<double>(frames.size() - 1);
    for (std::size_t i = 0; i < kPayloadBits; ++i) {
        stats.flip_rate[i] = static_cast<double>(flips[i]) / pairs;
        stats.constant_mask[i] = flips[i] == 0;
    }
    return stats;
}

SignalLayout infer_signal_layout(const BitStats& stats)
{
    SignalLayout layout;
    layout.msg_id = stats.msg_id;
    layout.dlc = stats.dlc;

    const std::size_t n_bits = std::size_t{stats.dlc} * 8;
    std::size_t i = 0;
    while (i < n_bits) {
        std::size_t run_end = i;
        const bool constant = stats.constant_mask[i];
        while (run_end < n_bits && stats.constant_mask[run_end] == constant)
            ++run_end;

        if (constant) {
            layout.static_fields.push_back({i, run_end - i});
        } else {
            std::size_t start = i;
            for (std::size_t b = i + 1; b < run_end; ++b) {
                if (stats.flip_rate[b] < stats.flip_rate[b - 1]) {
                    layout.specs.push_back({layout.specs.size(), start, b - start});
                    start = b;
                }
            }
            layout.specs.push_back({layout.specs.size(), start, run_end - start});
        }
        i = run_end;
    }
    return layout;
}

void validate_layout(const SignalLayout& layout)
{
    struct Piece
    {
        std::size_t start, length;
    };
    std::vector<Piece> pieces;
    for (std::size_t i = 0; i < layout.specs.size(); ++i) {
        const auto& s = layout.specs[i];
        check_spec(s);
        if (s.signal_index != i)
            throw std::invalid_argument(fmt::format("signal at position {} has index {}", i, s.signal_index));
        if (i > 0 && s.start_bit < layout.specs[i - 1].start_bit)
            throw std::invalid_argument("signals not sorted by start bit");
        pieces.push_back({s.start_bit, s.bit_length});
    }
    for (const auto& f : layout.static_fields)
        pieces.push_back({f.start_bit, f.bit_length});
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) { return a.start < b.start; });

    std::size_t cursor = 0;
    for (const auto& p : pieces) {
        if (p.start != cursor || p.length == 0)
            throw std::invalid_argument(fmt::format("layout gap or overlap at bit {}", cursor));
        cursor += p.length;
    }
    if (cursor != std::size_t{layout.dlc} * 8)
        throw std::invalid_argument(fmt::format("layout covers {} bits, payload has {}", cursor, layout.dlc * 8));
}

const SignalSpec& SignalLayout::spec(std::size_t signal_index) const
{
    if (signal_index >= specs.size())
        throw std::out_of_range(fmt::format("ID {:X} has no signal {}", msg_id, signal_index));
    return specs[signal_index];
}

std::uint64_t max_raw_value(const SignalSpec& spec)
{
    check_spec(spec);
    return spec.bit_length == 64 ? std::numeric_limits<std::uint64_t>::max()
                                 : (std::uint64_t{1} << spec.bit_length) - 1;
}

std::uint64_t decode_raw(std::span<const std::uint8_t> payload, const SignalSpec& spec)
{
    check_spec(spec);
    if (spec.end_bit() > payload.size() * 8)
        throw std::out_of_range(fmt::format("signal {} (bits {}..{}) exceeds {}-byte payload", spec.signal_index,
                                            spec.start_bit, spec.end_bit() - 1, payload.size()));
    std::uint64_t value = 0;
    for (std::size_t b = spec.start_bit; b < spec.end_bit(); ++b)
        value = (value << 1) | static_cast<std::uint64_t>(bit_at(payload, b));
    return value;
}

std::vector<double> decode_signals(const canlog::CanFrame& frame, const SignalLayout& layout)
{
    std::vector<double> values;
    values.reserve(layout.specs.size());
    for (const auto& spec : layout.specs)
        values.push_back(static_cast<double>(decode_raw(frame.payload(), spec)));
    return values;
}

void encode_signal(std::span<std::uint8_t> payload, const SignalSpec& spec, std::uint64_t value)
{
    if (value > max_raw_value(spec))
        throw std::out_of_range(fmt::format("value {} does not fit signal {} ({} bits)", value, spec.signal_index,
                                            spec.bit_length));
    if (spec.end_bit() > payload.size() * 8)
        throw std::out_of_range(fmt::format("signal {} exceeds {}-byte payload", spec.signal_index, payload.size()));

    for (std::size_t k = 0; k < spec.bit_length; ++k) {
        const std::size_t bit = spec.end_bit() - 1 - k;
        const auto mask = static_cast<std::uint8_t>(1u << (7 - bit % 8));
        if ((value >> k) & 1u)
            payload[bit / 8] |= mask;
        else
            payload[bit / 8] &= static_cast<std::uint8_t>(~mask);
    }
}

SignalSeries decode_series(std::span<const canlog::CanFrame> frames, const SignalLayout& layout)
{
    SignalSeries series(canlog::format_can_id(layout.msg_id, layout.extended), layout.n_signals());
    series.timestamps.reserve(frames.size());
    series.values.reserve(frames.size() * layout.n_signals());
    for (const auto& frame : frames) {
        if (frame.can_id != layout.msg_id)
            throw std::invalid_argument(fmt::format("frame ID {:X} decoded with layout of {:X}", frame.can_id,
                                                    layout.msg_id));
        series.push_back(frame.seconds(), decode_signals(frame, layout));
    }
    return series;
}

std::string layout_to_json(const SignalLayout& layout)
{
    nlohmann::ordered_json doc;
    doc["msg_id"] = canlog::format_can_id(layout.msg_id, layout.extended);
    doc["dlc"] = layout.dlc;
    doc["signals"] = nlohmann::ordered_json::array();
    for (const auto& s : layout.specs)
        doc["signals"].push_back({{"start_bit", s.start_bit}, {"bit_length", s.bit_length}});
    doc["static_fields"] = nlohmann::ordered_json::array();
    for (const auto& f : layout.static_fields)
        doc["static_fields"].push_back({{"start_bit", f.start_bit}, {"bit_length", f.bit_length}});
    return doc.dump(2) + "\n";
}

SignalLayout layout_from_json(const std::string& text)
{
    const auto doc = nlohmann::json::parse(text);
    SignalLayout layout;

    const auto id_text = doc.at("msg_id").get<std::string>();
    std::size_t pos = 0;
    layout.msg_id = static_cast<std::uint32_t>(std::stoul(id_text, &pos, 16));
    if (pos != id_text.size() || layout.msg_id > canlog::kMaxCanId)
        throw std::invalid_argument("invalid msg_id in layout: " + id_text);
    layout.extended = id_text.size() > 3;

    for (const auto& s : doc.at("signals"))
        layout.specs.push_back(
            {layout.specs.size(), s.at("start_bit").get<std::size_t>(), s.at("bit_length").get<std::size_t>()});
    if (doc.contains("static_fields")) {
        for (const auto& f : doc.at("static_fields"))
            layout.static_fields.push_back({f.at("start_bit").get<std::size_t>(), f.at("bit_length").get<std::size_t>()});
    }

    if (doc.contains("dlc")) {
        layout.dlc = doc.at("dlc").get<std::uint8_t>();
    } else {
        std::size_t end = 0;
        for (const auto& s : layout.specs)
            end = std::max(end, s.end_bit());
        for (const auto& f : layout.static_fields)
            end = std::max(end, f.start_bit + f.bit_length);
        layout.dlc = static_cast<std::uint8_t>((end + 7) / 8);
    }
    validate_layout(layout);
    return layout;
}

std::string bit_stats_to_csv(const BitStats& stats)
{
    std::string out = "bit,byte,flip_rate,constant\n";
    for (std::size_t i = 0; i < std::size_t{stats.dlc} * 8; ++i)
        out += fmt::format("{},{},{:.6f},{}\n", i, i / 8, stats.flip_rate[i], stats.constant_mask[i] ? 1 : 0);
    return out;
}

Normalizer::Normalizer(std::vector<double> mins, std::vector<double> maxs) : mins_(std::move(mins)), maxs_(std::move(maxs))
{
    if (mins_.size() != maxs_.size())
        throw std::invalid_argument("normalizer min/max size mismatch");
    for (std::size_t s = 0; s < mins_.size(); ++s)
        if (!(mins_[s] <= maxs_[s]))
            throw std::invalid_argument(fmt::format("normalizer signal {} has min > max", s));
}

Normalizer Normalizer::fit(const SignalSeries& series)
{
    if (series.empty() || series.n_signals == 0)
        throw InsufficientData("cannot fit a normalizer on an empty series");
    std::vector<double> mins(series.n_signals, std::numeric_limits<double>::infinity());
    std::vector<double> maxs(series.n_signals, -std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < series.size(); ++t) {
        for (std::size_t s = 0; s < series.n_signals; ++s) {
            mins[s] = std::min(mins[s], series.at(t, s));
            maxs[s] = std::max(maxs[s], series.at(t, s));
        }
    }
    return Normalizer(std::move(mins), std::move(maxs));
}

double Normalizer::apply(std::size_t signal, double value) const
{
    const double span = maxs_.at(signal) - mins_[signal];
    if (span <= 0.0)
        return 0.0;
    return (value - mins_[signal]) / span;
}

double Normalizer::invert(std::size_t signal, double value) const
{
    const double span = maxs_.at(signal) - mins_[signal];
    if (span <= 0.0)
        return mins_[signal];
    return value * span + mins_[signal];
}

void Normalizer::check_width(const SignalSeries& series) const
{
    if (series.n_signals != n_signals())
        throw std::invalid_argument(fmt::format("normalizer fitted on {} signals, series has {}", n_signals(),
                                                series.n_signals));
}

SignalSeries Normalizer::apply(const SignalSeries& series) const
{
    check_width(series);
    SignalSeries out = series;
    for (std::size_t t = 0; t < out.size(); ++t)
        for (std::size_t s = 0; s < out.n_signals; ++s)
            out.at(t, s) = apply(s, series.at(t, s));
    return out;
}

SignalSeries Normalizer::invert(const SignalSeries& series) const
{
    check_width(series);
    SignalSeries out = series;
    for (std::size_t t = 0; t < out.size(); ++t)
        for (std::size_t s = 0; s < out.n_signals; ++s)
            out.at(t, s) = invert(s, series.at(t, s));
    return out;
}

} // namespace cantcn::sigmap
