#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cantcn/detector/scoring.hpp"

namespace cantcn::evalkit {

struct ConfusionCounts
{
    std::uint64_t tp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + tn + fp + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o);
    bool operator==(const ConfusionCounts&) const = default;
};

/// accuracy = (TP+TN)/total, fpr = FP/(TN+FP), precision = TP/(TP+FP).
/// A zero denominator yields 0 with the matching *_defined flag cleared.
struct Metrics
{
    double accuracy = 0.0;
    double fpr = 0.0;
    double precision = 0.0;
    bool accuracy_defined = false;
    bool fpr_defined = false;
    bool precision_defined = false;
};

ConfusionCounts count_confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);
Metrics compute_metrics(const ConfusionCounts& counts);

struct ReportRow
{
    std::string msg_id;
    std::string attack_class;
    ConfusionCounts counts;
    Metrics metrics;
};

ReportRow evaluate(std::string msg_id, std::string attack_class, std::span<const std::uint8_t> predicted,
                   std::span<const std::uint8_t> truth);
ReportRow evaluate(std::string msg_id, std::string attack_class, std::span<const detector::MessageVerdict> verdicts,
                   std::span<const std::uint8_t> truth);

enum class ReportFormat
{
    csv,
    json,
};

ReportFormat report_format_from_string(std::string_view name);

/// Orders IDs so that embedded numbers compare numerically ("id2" < "id10").
bool natural_less(std::string_view a, std::string_view b);

/// One row per (msg_id, attack_class), sorted by ID then class, metrics
/// rounded to 4 decimals. Rejects an empty row set.
std::string emit_report(std::vector<ReportRow> rows, ReportFormat format);

/// Parse an emitted report back; metric fields come back at their rounded values.
std::vector<ReportRow> parse_report(const std::string& text, ReportFormat format);

/// Long-format per-message traces: msg_id,index,timestamp,signal,score,threshold,label
std::string score_trace_csv(const detector::ScoreMatrix& scores, const detector::ThresholdSet& thresholds,
                            std::span<const std::uint8_t> truth);

} // namespace cantcn::evalkit
