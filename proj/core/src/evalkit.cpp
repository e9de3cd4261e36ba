#include "cantcn/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace cantcn::evalkit {

namespace {

std::string fixed4(double v)
{
    return fmt::format("{:.4f}", v);
}

double rounded4(double v)
{
    return std::stod(fixed4(v));
}

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string f;
    while (std::getline(in, f, ','))
        out.push_back(f);
    return out;
}

const char* const kCsvHeader =
    "msg_id,attack_class,accuracy,fpr,precision,tp,tn,fp,fn,fpr_defined,precision_defined";

} // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o)
{
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
}

ConfusionCounts count_confusion(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth)
{
    if (predicted.size() != truth.size())
        throw std::invalid_argument(fmt::format("{} predictions but {} ground-truth labels", predicted.size(),
                                                truth.size()));
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] != 0;
        const bool t = truth[i] != 0;
        if (p && t)
            ++c.tp;
        else if (!p && !t)
            ++c.tn;
        else if (p)
            ++c.fp;
        else
            ++c.fn;
    }
    return c;
}

Metrics compute_metrics(const ConfusionCounts& c)
{
    Metrics m;
    if (c.total() > 0) {
        m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
        m.accuracy_defined = true;
    }
    if (c.tn + c.fp > 0) {
        m.fpr = static_cast<double>(c.fp) / static_cast<double>(c.tn + c.fp);
        m.fpr_defined = true;
    }
    if (c.tp + c.fp > 0) {
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
        m.precision_defined = true;
    }
    return m;
}

ReportRow evaluate(std::string msg_id, std::string attack_class, std::span<const std::uint8_t> predicted,
                   std::span<const std::uint8_t> truth)
{
    ReportRow row;
    row.msg_id = std::move(msg_id);
    row.attack_class = std::move(attack_class);
    row.counts = count_confusion(predicted, truth);
    row.metrics = compute_metrics(row.counts);
    return row;
}

ReportRow evaluate(std::string msg_id, std::string attack_class, std::span<const detector::MessageVerdict> verdicts,
                   std::span<const std::uint8_t> truth)
{
    const auto predicted = detector::labels_of(verdicts);
    return evaluate(std::move(msg_id), std::move(attack_class), predicted, truth);
}

ReportFormat report_format_from_string(std::string_view name)
{
    if (name == "csv")
        return ReportFormat::csv;
    if (name == "json")
        return ReportFormat::json;
    throw std::invalid_argument(fmt::format("unknown report format '{}' (expected csv or json)", name));
}

bool natural_less(std::string_view a, std::string_view b)
{
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
        const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
        if (da && db) {
            std::size_t ei = i, ej = j;
            while (ei < a.size() && std::isdigit(static_cast<unsigned char>(a[ei])))
                ++ei;
            while (ej < b.size() && std::isdigit(static_cast<unsigned char>(b[ej])))
                ++ej;
            auto na = a.substr(i, ei - i);
            auto nb = b.substr(j, ej - j);
            while (na.size() > 1 && na.front() == '0')
                na.remove_prefix(1);
            while (nb.size() > 1 && nb.front() == '0')
                nb.remove_prefix(1);
            if (na.size() != nb.size())
                return na.size() < nb.size();
            if (na != nb)
                return na < nb;
            i = ei;
            j = ej;
        } else {
            if (a[i] != b[j])
                return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    if (a.size() - i != b.size() - j)
        return a.size() - i < b.size() - j;
    return a < b;
}

std::string emit_report(std::vector<ReportRow> rows, ReportFormat format)
{
    if (rows.empty())
        throw std::invalid_argument("report has no rows");
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& x, const ReportRow& y) {
        if (x.msg_id != y.msg_id)
            return natural_less(x.msg_id, y.msg_id);
        return x.attack_class < y.attack_class;
    });

    if (format == ReportFormat::csv) {
        std::string out = std::string(kCsvHeader) + "\n";
        for (const auto& r : rows) {
            const auto& m = r.metrics;
            out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.msg_id, r.attack_class, fixed4(m.accuracy),
                               fixed4(m.fpr), fixed4(m.precision), r.counts.tp, r.counts.tn, r.counts.fp, r.counts.fn,
                               m.fpr_defined ? 1 : 0, m.precision_defined ? 1 : 0);
        }
        return out;
    }

    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        doc.push_back({{"msg_id", r.msg_id},
                       {"attack_class", r.attack_class},
                       {"accuracy", rounded4(m.accuracy)},
                       {"fpr", rounded4(m.fpr)},
                       {"precision", rounded4(m.precision)},
                       {"tp", r.counts.tp},
                       {"tn", r.counts.tn},
                       {"fp", r.counts.fp},
                       {"fn", r.counts.fn},
                       {"fpr_defined", m.fpr_defined},
                       {"precision_defined", m.precision_defined}});
    }
    return doc.dump(2) + "\n";
}

std::vector<ReportRow> parse_report(const std::string& text, ReportFormat format)
{
    std::vector<ReportRow> rows;
    if (format == ReportFormat::json) {
        for (const auto& r : nlohmann::json::parse(text)) {
            ReportRow row;
            row.msg_id = r.at("msg_id").get<std::string>();
            row.attack_class = r.at("attack_class").get<std::string>();
            row.metrics.accuracy = r.at("accuracy").get<double>();
            row.metrics.fpr = r.at("fpr").get<double>();
            row.metrics.precision = r.at("precision").get<double>();
            row.counts = {r.at("tp").get<std::uint64_t>(), r.at("tn").get<std::uint64_t>(),
                          r.at("fp").get<std::uint64_t>(), r.at("fn").get<std::uint64_t>()};
            row.metrics.fpr_defined = r.at("fpr_defined").get<bool>();
            row.metrics.precision_defined = r.at("precision_defined").get<bool>();
            row.metrics.accuracy_defined = row.counts.total() > 0;
            rows.push_back(std::move(row));
        }
        return rows;
    }

    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != kCsvHeader)
        throw std::runtime_error("unexpected report header: " + line);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto f = split_line(line);
        if (f.size() != 11)
            throw std::runtime_error("malformed report row: " + line);
        ReportRow row;
        row.msg_id = f[0];
        row.attack_class = f[1];
        row.metrics.accuracy = std::stod(f[2]);
        row.metrics.fpr = std::stod(f[3]);
        row.metrics.precision = std::stod(f[4]);
        row.counts = {std::stoull(f[5]), std::stoull(f[6]), std::stoull(f[7]), std::stoull(f[8])};
        row.metrics.fpr_defined = f[9] == "1";
        row.metrics.precision_defined = f[10] == "1";
        row.metrics.accuracy_defined = row.counts.total() > 0;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string score_trace_csv(const detector::ScoreMatrix& scores, const detector::ThresholdSet& thresholds,
                            std::span<const std::uint8_t> truth)
{
    if (!truth.empty() && truth.size() != scores.size())
        throw std::invalid_argument("trace labels do not align with scores");
    if (thresholds.n_signals() != scores.n_signals)
        throw std::invalid_argument("trace thresholds do not match score width");
    std::string out = "msg_id,index,timestamp,signal,score,threshold,label\n";
    for (std::size_t t = 0; t < scores.size(); ++t) {
        for (std::size_t s = 0; s < scores.n_signals; ++s) {
            out += fmt::format("{},{},{:.6f},{},{:.9g},{:.9g},", scores.msg_id, t, scores.timestamps[t], s,
                               scores.at(t, s), thresholds.thresholds[s]);
            out += truth.empty() ? std::string() : std::to_string(truth[t]);
            out += '\n';
        }
    }
    return out;
}

} // namespace cantcn::evalkit
