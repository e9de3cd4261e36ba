#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cantcn/nn/tcn.hpp"
#include "cantcn/series.hpp"
#include "cantcn/sigmap.hpp"

namespace cantcn::detector {

inline constexpr double kThresholdPercentile = 99.9;

/// Percentile with linear interpolation between closest ranks: rank
/// p/100 * (n-1) over the sorted values.
double percentile_linear(std::vector<double> values, double percentile);

struct ThresholdSet
{
    std::vector<double> thresholds; ///< one per signal
    double percentile = kThresholdPercentile;
    std::size_t validation_windows = 0;

    std::size_t n_signals() const { return thresholds.size(); }
};

/// Squared error between each message and the reconstruction at the last
/// position of the window ending on it, for messages window-1 .. N-1.
/// Row-major ((N - window + 1), n_signals).
std::vector<double> last_position_errors(const nn::TcnModel& model, const SignalSeries& normalized,
                                         std::size_t window, std::size_t chunk = 256);

ThresholdSet calibrate_thresholds(const nn::TcnModel& model, const SignalSeries& validation_normalized,
                                  std::size_t window, double percentile = kThresholdPercentile);

/// Per-message, per-signal intrusion scores. The first window-1 messages have
/// no complete window and score zero.
struct ScoreMatrix
{
    std::string msg_id;
    std::size_t n_signals = 0;
    std::size_t warmup = 0;
    std::vector<double> timestamps;
    std::vector<double> scores;
    std::vector<std::string> warnings;

    std::size_t size() const { return timestamps.size(); }
    double at(std::size_t t, std::size_t s) const { return scores[t * n_signals + s]; }
    std::span<const double> row(std::size_t t) const { return {scores.data() + t * n_signals, n_signals}; }
};

ScoreMatrix score_normalized(const nn::TcnModel& model, const SignalSeries& normalized, std::size_t window);
ScoreMatrix score_messages(const nn::TcnModel& model, const sigmap::Normalizer& normalizer, const SignalSeries& raw,
                           std::size_t window);

struct MessageVerdict
{
    std::size_t index = 0;
    double timestamp = 0.0;
    std::vector<double> scores;
    std::uint8_t label = 0;
};

/// A message is malicious when any signal's score strictly exceeds its threshold.
std::vector<MessageVerdict> classify(const ScoreMatrix& scores, const ThresholdSet& thresholds);

std::vector<std::uint8_t> labels_of(std::span<const MessageVerdict> verdicts);

/// CSV: index,timestamp,score_0..score_{S-1},label
std::string verdicts_to_csv(std::span<const MessageVerdict> verdicts, std::size_t n_signals);
std::vector<MessageVerdict> verdicts_from_csv(const std::string& text);

} // namespace cantcn::detector
