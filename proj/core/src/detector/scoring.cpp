#include "cantcn/detector/scoring.hpp"

#include <sstream>

#include <fmt/format.h>

namespace cantcn::detector {

ScoreMatrix score_normalized(const nn::TcnModel& model, const SignalSeries& normalized, std::size_t window)
{
    if (window == 0)
        throw std::invalid_argument("window must be positive");
    ScoreMatrix out;
    out.msg_id = normalized.msg_id;
    out.n_signals = normalized.n_signals;
    out.timestamps = normalized.timestamps;
    out.scores.assign(normalized.size() * normalized.n_signals, 0.0);
    out.warmup = std::min(window - 1, normalized.size());

    if (normalized.size() < window) {
        out.warnings.push_back(fmt::format("{}: {} messages is shorter than the window of {}; all messages are warm-up",
                                           normalized.msg_id, normalized.size(), window));
        out.warmup = normalized.size();
        return out;
    }
    const auto errors = last_position_errors(model, normalized, window);
    std::copy(errors.begin(), errors.end(), out.scores.begin() + static_cast<std::ptrdiff_t>(out.warmup * out.n_signals));
    return out;
}

ScoreMatrix score_messages(const nn::TcnModel& model, const sigmap::Normalizer& normalizer, const SignalSeries& raw,
                           std::size_t window)
{
    return score_normalized(model, normalizer.apply(raw), window);
}

std::vector<MessageVerdict> classify(const ScoreMatrix& scores, const ThresholdSet& thresholds)
{
    if (scores.n_signals != thresholds.n_signals())
        throw std::invalid_argument(fmt::format("{} score columns but {} thresholds", scores.n_signals,
                                                thresholds.n_signals()));
    std::vector<MessageVerdict> verdicts;
    verdicts.reserve(scores.size());
    for (std::size_t t = 0; t < scores.size(); ++t) {
        MessageVerdict v;
        v.index = t;
        v.timestamp = scores.timestamps[t];
        auto row = scores.row(t);
        v.scores.assign(row.begin(), row.end());
        for (std::size_t s = 0; s < scores.n_signals; ++s)
            if (row[s] > thresholds.thresholds[s])
                v.label = 1;
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

std::vector<std::uint8_t> labels_of(std::span<const MessageVerdict> verdicts)
{
    std::vector<std::uint8_t> labels;
    labels.reserve(verdicts.size());
    for (const auto& v : verdicts)
        labels.push_back(v.label);
    return labels;
}

std::string verdicts_to_csv(std::span<const MessageVerdict> verdicts, std::size_t n_signals)
{
    std::string out = "index,timestamp";
    for (std::size_t s = 0; s < n_signals; ++s)
        out += fmt::format(",score_{}", s);
    out += ",label\n";
    for (const auto& v : verdicts) {
        out += fmt::format("{},{:.6f}", v.index, v.timestamp);
        for (double s : v.scores)
            out += fmt::format(",{:.17g}", s);
        out += fmt::format(",{}\n", v.label);
    }
    return out;
}

std::vector<MessageVerdict> verdicts_from_csv(const std::string& text)
{
    std::vector<MessageVerdict> verdicts;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty())
            continue;
        std::vector<std::string> fields;
        std::istringstream row(line);
        std::string f;
        while (std::getline(row, f, ','))
            fields.push_back(f);
        if (fields.size() < 3)
            throw std::runtime_error(fmt::format("verdict line {}: too few fields", line_no));
        MessageVerdict v;
        v.index = std::stoull(fields.front());
        v.timestamp = std::stod(fields[1]);
        for (std::size_t i = 2; i + 1 < fields.size(); ++i)
            v.scores.push_back(std::stod(fields[i]));
        const auto& label = fields.back();
        if (label != "0" && label != "1")
            throw std::runtime_error(fmt::format("verdict line {}: invalid label '{}'", line_no, label));
        v.label = static_cast<std::uint8_t>(label[0] - '0');
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

} // namespace cantcn::detector
