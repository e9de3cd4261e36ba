#include "cantcn/canlog.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>

namespace cantcn::canlog {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

bool is_hex(char c)
{
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

std::uint8_t hex_value(char c)
{
    if (c >= '0' && c <= '9')
        return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f')
        return static_cast<std::uint8_t>(c - 'a' + 10);
    return static_cast<std::uint8_t>(c - 'A' + 10);
}

bool all_digits(std::string_view s)
{
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// "<int>[.<1-6 digits>]" -> microseconds
bool parse_timestamp_us(std::string_view s, std::int64_t& out)
{
    auto dot = s.find('.');
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    if (whole.empty() || whole.size() > 12 || !all_digits(whole))
        return false;
    if (dot != std::string_view::npos && (frac.empty() || frac.size() > 6 || !all_digits(frac)))
        return false;

    std::int64_t seconds = 0;
    std::from_chars(whole.data(), whole.data() + whole.size(), seconds);
    std::int64_t micros = 0;
    for (std::size_t i = 0; i < 6; ++i)
        micros = micros * 10 + (i < frac.size() ? frac[i] - '0' : 0);
    out = seconds * 1'000'000 + micros;
    return true;
}

CanFrame parse_candump_line(std::string_view line, std::size_t line_no)
{
    auto fail = [&](const std::string& reason) -> ParseError {
        return ParseError(line_no, std::string(line), reason);
    };

    std::string_view rest = trim(line);
    if (rest.empty() || rest.front() != '(')
        throw fail("expected '(' timestamp");
    auto close = rest.find(')');
    if (close == std::string_view::npos)
        throw fail("unterminated timestamp");

    CanFrame frame;
    if (!parse_timestamp_us(rest.substr(1, close - 1), frame.timestamp_us))
        throw fail("invalid timestamp");
    rest = rest.substr(close + 1);

    if (rest.empty() || (rest.front() != ' ' && rest.front() != '\t'))
        throw fail("expected whitespace after timestamp");
    rest = trim(rest);

    auto space = rest.find_first_of(" \t");
    if (space == std::string_view::npos)
        throw fail("missing frame field");
    frame.channel = std::string(rest.substr(0, space));
    rest = trim(rest.substr(space));

    if (rest.find_first_of(" \t") != std::string_view::npos)
        throw fail("unexpected trailing fields");

    auto hash = rest.find('#');
    if (hash == std::string_view::npos)
        throw fail("missing '#' separator");
    std::string_view id_text = rest.substr(0, hash);
    std::string_view data_text = rest.substr(hash + 1);

    if (id_text.empty() || id_text.size() > 8 || !std::all_of(id_text.begin(), id_text.end(), is_hex))
        throw fail("invalid CAN identifier");
    std::uint32_t id = 0;
    for (char c : id_text)
        id = (id << 4) | hex_value(c);
    if (id > kMaxCanId)
        throw fail("CAN identifier exceeds 29 bits");
    frame.can_id = id;
    frame.extended = id_text.size() > 3;
    if (!frame.extended && id > 0x7FF)
        throw fail("standard identifier exceeds 11 bits");

    if (!std::all_of(data_text.begin(), data_text.end(), is_hex))
        throw fail("invalid payload hex");
    if (data_text.size() % 2 != 0)
        throw fail("odd number of payload hex digits");
    if (data_text.size() > 2 * kMaxPayload)
        throw fail("payload longer than 8 bytes");
    frame.dlc = static_cast<std::uint8_t>(data_text.size() / 2);
    for (std::size_t i = 0; i < frame.dlc; ++i)
        frame.data[i] = static_cast<std::uint8_t>(hex_value(data_text[2 * i]) << 4 | hex_value(data_text[2 * i + 1]));
    return frame;
}

std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

bool parse_double(std::string_view s, double& out)
{
    if (s.empty())
        return false;
    if (s.front() == '+')
        s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

} // namespace

void CanFrame::set_payload(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() > kMaxPayload)
        throw std::invalid_argument("payload longer than 8 bytes");
    data.fill(0);
    std::copy(bytes.begin(), bytes.end(), data.begin());
    dlc = static_cast<std::uint8_t>(bytes.size());
}

const std::vector<CanFrame>& CanLog::frames() const
{
    if (auto* f = std::get_if<std::vector<CanFrame>>(&records))
        return *f;
    throw UnsupportedFormat("log holds signal records, not CAN frames");
}

std::vector<CanFrame>& CanLog::frames()
{
    if (auto* f = std::get_if<std::vector<CanFrame>>(&records))
        return *f;
    throw UnsupportedFormat("log holds signal records, not CAN frames");
}

const std::vector<SignalRecord>& CanLog::signal_records() const
{
    if (auto* r = std::get_if<std::vector<SignalRecord>>(&records))
        return *r;
    throw UnsupportedFormat("log holds CAN frames, not signal records");
}

std::size_t CanLog::size() const
{
    return std::visit([](const auto& v) { return v.size(); }, records);
}

ParseError::ParseError(std::size_t line, std::string text, const std::string& reason)
    : std::runtime_error(fmt::format("line {}: {}: '{}'", line, reason, text))
    , line_(line)
    , text_(std::move(text))
{
}

CanLog parse_candump(std::istream& in, const ParseOptions& options)
{
    CanLog log;
    log.source_format = SourceFormat::candump;
    auto& frames = log.records.emplace<std::vector<CanFrame>>();

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            ++log.skipped_blank_lines;
            continue;
        }
        CanFrame frame = parse_candump_line(line, line_no);
        if (!frames.empty() && frame.timestamp_us < frames.back().timestamp_us) {
            if (!options.allow_decreasing_timestamps)
                throw ParseError(line_no, line, "timestamp decreases");
            log.warnings.push_back(fmt::format("line {}: timestamp decreases", line_no));
        }
        frames.push_back(std::move(frame));
    }
    return log;
}

CanLog parse_candump(std::string_view text, const ParseOptions& options)
{
    std::istringstream in{std::string(text)};
    return parse_candump(in, options);
}

CanLog parse_syncan_csv(std::istream& in, const ParseOptions& options)
{
    CanLog log;
    log.source_format = SourceFormat::syncan_csv;
    auto& records = log.records.emplace<std::vector<SignalRecord>>();

    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    bool has_label = true;
    std::map<std::string, std::size_t, std::less<>> widths;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            ++log.skipped_blank_lines;
            continue;
        }
        auto fields = split_csv(line);
        if (!have_header) {
            have_header = true;
            has_label = lower(fields.front()).starts_with("label");
            continue;
        }

        std::size_t col = 0;
        SignalRecord rec;
        if (has_label) {
            double label = 0;
            if (!parse_double(fields[col], label) || (label != 0.0 && label != 1.0))
                throw ParseError(line_no, line, "invalid label");
            rec.label = static_cast<std::uint8_t>(label);
            ++col;
        }
        if (fields.size() < col + 3)
            throw ParseError(line_no, line, "too few columns");
        if (!parse_double(fields[col], rec.timestamp) || rec.timestamp < 0)
            throw ParseError(line_no, line, "invalid time");
        rec.msg_id = std::string(fields[col + 1]);
        if (rec.msg_id.empty())
            throw ParseError(line_no, line, "empty message id");

        for (std::size_t i = col + 2; i < fields.size(); ++i) {
            if (fields[i].empty())
                continue;
            double v = 0;
            if (!parse_double(fields[i], v))
                throw ParseError(line_no, line, fmt::format("non-numeric signal in column {}", i + 1));
            rec.signals.push_back(v);
        }
        if (rec.signals.empty())
            throw ParseError(line_no, line, "no signal values");
        if (rec.signals.size() > kMaxPayload)
            throw ParseError(line_no, line, "more than 8 signals");

        auto [it, inserted] = widths.try_emplace(rec.msg_id, rec.signals.size());
        if (!inserted && it->second != rec.signals.size())
            throw ParseError(line_no, line,
                             fmt::format("signal count {} differs from earlier rows of {} ({})", rec.signals.size(),
                                         rec.msg_id, it->second));

        if (!records.empty() && rec.timestamp < records.back().timestamp) {
            if (!options.allow_decreasing_timestamps)
                throw ParseError(line_no, line, "timestamp decreases");
            log.warnings.push_back(fmt::format("line {}: timestamp decreases", line_no));
        }
        records.push_back(std::move(rec));
    }
    return log;
}

CanLog parse_syncan_csv(std::string_view text, const ParseOptions& options)
{
    std::istringstream in{std::string(text)};
    return parse_syncan_csv(in, options);
}

SourceFormat detect_format(std::string_view first_line)
{
    return trim(first_line).starts_with('(') ? SourceFormat::candump : SourceFormat::syncan_csv;
}

CanLog read_log_file(const std::string& path, const ParseOptions& options)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open log file: " + path);

    std::string first;
    std::streampos start = in.tellg();
    while (std::getline(in, first) && trim(first).empty()) {
    }
    in.clear();
    in.seekg(start);

    if (detect_format(first) == SourceFormat::candump)
        return parse_candump(in, options);
    return parse_syncan_csv(in, options);
}

std::string format_can_id(std::uint32_t can_id, bool extended)
{
    return extended ? fmt::format("{:08X}", can_id) : fmt::format("{:03X}", can_id);
}

std::string format_candump_line(const CanFrame& frame)
{
    std::string out = fmt::format("({}.{:06}) {} {}#", frame.timestamp_us / 1'000'000, frame.timestamp_us % 1'000'000,
                                  frame.channel, format_can_id(frame.can_id, frame.extended));
    for (std::uint8_t byte : frame.payload())
        out += fmt::format("{:02X}", byte);
    return out;
}

void write_candump(std::ostream& out, std::span<const CanFrame> frames)
{
    for (const auto& frame : frames)
        out << format_candump_line(frame) << '\n';
}

std::string write_candump(const CanLog& log)
{
    if (!log.is_candump())
        throw UnsupportedFormat("candump output requires a log of CAN frames");
    std::ostringstream out;
    write_candump(out, log.frames());
    return out.str();
}

std::map<std::uint32_t, std::vector<CanFrame>> split_by_id(std::span<const CanFrame> frames)
{
    std::map<std::uint32_t, std::vector<CanFrame>> parts;
    for (const auto& frame : frames)
        parts[frame.can_id].push_back(frame);
    return parts;
}

std::map<std::string, std::vector<SignalRecord>> split_by_id(std::span<const SignalRecord> records)
{
    std::map<std::string, std::vector<SignalRecord>> parts;
    for (const auto& rec : records)
        parts[rec.msg_id].push_back(rec);
    return parts;
}

LabeledSeries to_series(std::span<const SignalRecord> records)
{
    LabeledSeries out;
    if (records.empty())
        return out;
    out.series = SignalSeries(records.front().msg_id, records.front().signals.size());
    out.series.timestamps.reserve(records.size());
    out.series.values.reserve(records.size() * out.series.n_signals);
    out.labels.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.msg_id != out.series.msg_id)
            throw std::invalid_argument("records of " + rec.msg_id + " mixed into series of " + out.series.msg_id);
        out.series.push_back(rec.timestamp, rec.signals);
        out.labels.push_back(rec.label);
    }
    return out;
}

} // namespace cantcn::canlog
