#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <map>
#include <optional>

#include <fmt/format.h>
#include <json.hpp>

#include "cantcn/attackgen.hpp"
#include "cantcn/canlog.hpp"
#include "cantcn/detector/bundle.hpp"
#include "cantcn/detector/scoring.hpp"
#include "cantcn/detector/train.hpp"
#include "cantcn/evalkit.hpp"
#include "cantcn/nn/model_io.hpp"
#include "cantcn/sigmap.hpp"

namespace cantcn::cli {

namespace fs = std::filesystem;

namespace {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Error plumbing

template <typename F>
auto in_stage(const std::string& stage, F&& body) -> decltype(body())
{
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const canlog::ParseError& e) {
        throw StageError(stage, kInput, e.what());
    } catch (const canlog::UnsupportedFormat& e) {
        throw StageError(stage, kInput, e.what());
    } catch (const nn::ModelFormatError& e) {
        throw StageError(stage, kInput, e.what());
    } catch (const detector::TrainingDiverged& e) {
        throw StageError(stage, kTraining, e.what());
    } catch (const sigmap::InsufficientData& e) {
        throw StageError(stage, kData, e.what());
    } catch (const std::logic_error& e) {
        // invalid_argument, out_of_range, length_error, ShapeError
        throw StageError(stage, kData, e.what());
    } catch (const nlohmann::json::exception& e) {
        throw StageError(stage, kInput, e.what());
    } catch (const std::exception& e) {
        throw StageError(stage, kInternal, e.what());
    }
}

void require(const std::string& stage, const std::string& value, const char* flag)
{
    if (value.empty())
        throw StageError(stage, kUsage, fmt::format("{} is required", flag));
}

void require_path(const std::string& stage, const std::string& path, const char* flag)
{
    require(stage, path, flag);
    if (!fs::exists(path))
        throw StageError(stage, kInput, fmt::format("{} {} does not exist", flag, path));
}

class Log
{
public:
    explicit Log(bool quiet) : quiet_(quiet) {}

    template <typename... Args>
    void info(fmt::format_string<Args...> f, Args&&... args) const
    {
        if (!quiet_)
            fmt::print(stderr, "{}\n", fmt::format(f, std::forward<Args>(args)...));
    }

    template <typename... Args>
    void warn(fmt::format_string<Args...> f, Args&&... args) const
    {
        fmt::print(stderr, "warning: {}\n", fmt::format(f, std::forward<Args>(args)...));
    }

private:
    bool quiet_;
};

// ---------------------------------------------------------------------------
// Loading

canlog::CanLog load_log(const std::string& stage, const std::string& path, ArtifactWriter& out)
{
    return in_stage(stage, [&] {
        auto log = canlog::read_log_file(path);
        out.record_input(path);
        return log;
    });
}

std::string id_name(const canlog::CanFrame& frame)
{
    return canlog::format_can_id(frame.can_id, frame.extended);
}

/// Layout lookup: a single layout file, or a directory holding <ID>.json.
class LayoutSource
{
public:
    LayoutSource(std::string path, ArtifactWriter* out) : path_(std::move(path)), out_(out) {}

    std::optional<sigmap::SignalLayout> find(const std::string& id) const
    {
        if (path_.empty())
            return std::nullopt;
        fs::path file = path_;
        if (fs::is_directory(file)) {
            file /= id + ".json";
            if (!fs::exists(file))
                return std::nullopt;
        }
        auto layout = sigmap::layout_from_json(read_text_file(file));
        if (normalize_id(canlog::format_can_id(layout.msg_id, layout.extended)) != normalize_id(id))
            return std::nullopt;
        if (out_)
            out_->record_input(file);
        return layout;
    }

private:
    std::string path_;
    ArtifactWriter* out_;
};

/// One message ID's data, as signal values plus what is needed to map them
/// back onto the log.
struct IdData
{
    std::string id;
    SignalSeries raw;
    std::optional<std::vector<std::uint8_t>> labels; ///< SynCAN label column
    std::optional<sigmap::SignalLayout> layout;      ///< candump only
    std::vector<std::size_t> positions;              ///< indices of this ID's messages in the log
};

std::optional<sigmap::SignalLayout> infer_layout(std::span<const canlog::CanFrame> frames, const Log& log,
                                                 const std::string& id)
{
    try {
        auto layout = sigmap::infer_signal_layout(sigmap::compute_bit_stats(frames));
        layout.extended = frames.front().extended;
        if (layout.specs.empty()) {
            log.warn("{}: every payload bit is constant; no signals to model", id);
            return std::nullopt;
        }
        if (layout.n_signals() > nn::kMaxSignals) {
            log.warn("{}: {} inferred signals exceeds the model limit of {}", id, layout.n_signals(),
                     nn::kMaxSignals);
            return std::nullopt;
        }
        return layout;
    } catch (const std::exception& e) {
        log.warn("{}: {}", id, e.what());
        return std::nullopt;
    }
}

/// Splits a log into per-ID series. For candump logs the layout comes from
/// `layout_for` or, when that returns nothing and `infer` is set, from the
/// frames themselves; IDs without a usable layout are skipped.
std::vector<IdData> per_id_data(const canlog::CanLog& log, const RunConfig& config, const Log& logger,
                                const std::function<std::optional<sigmap::SignalLayout>(const std::string&)>& layout_for,
                                bool infer)
{
    std::vector<IdData> out;
    if (!log.is_candump()) {
        const auto by_id = canlog::split_by_id(std::span(log.signal_records()));
        std::map<std::string, std::vector<std::size_t>> positions;
        for (std::size_t i = 0; i < log.signal_records().size(); ++i)
            positions[log.signal_records()[i].msg_id].push_back(i);
        for (const auto& [id, records] : by_id) {
            if (!id_selected(config, id))
                continue;
            auto series = canlog::to_series(records);
            IdData d;
            d.id = id;
            d.raw = std::move(series.series);
            d.labels = std::move(series.labels);
            d.positions = std::move(positions[id]);
            out.push_back(std::move(d));
        }
    } else {
        const auto& frames = log.frames();
        std::map<std::uint32_t, std::vector<std::size_t>> positions;
        for (std::size_t i = 0; i < frames.size(); ++i)
            positions[frames[i].can_id].push_back(i);
        const auto by_id = canlog::split_by_id(std::span(frames));
        for (const auto& [can_id, id_frames] : by_id) {
            const auto id = id_name(id_frames.front());
            if (!id_selected(config, id))
                continue;
            auto layout = layout_for(id);
            if (!layout && infer)
                layout = infer_layout(id_frames, logger, id);
            if (!layout) {
                if (!config.ids.empty())
                    throw StageError("load", kData, fmt::format("no signal layout for requested ID {}", id));
                continue;
            }
            IdData d;
            d.id = id;
            d.raw = sigmap::decode_series(id_frames, *layout);
            d.layout = std::move(layout);
            d.positions = std::move(positions[can_id]);
            out.push_back(std::move(d));
        }
    }
    if (out.empty())
        throw StageError("load", kData, "no message IDs selected or usable in the input");
    return out;
}

std::string report_ext(evalkit::ReportFormat f)
{
    return f == evalkit::ReportFormat::json ? "json" : "csv";
}

std::string derive_attack_class(const RunConfig& config, const std::string& test_path)
{
    if (!config.attack_class.empty())
        return config.attack_class;
    std::string stem = fs::path(test_path).stem().string();
    if (stem.rfind("test_", 0) == 0)
        stem = stem.substr(5);
    return stem.empty() ? "unknown" : stem;
}

// ---------------------------------------------------------------------------
// Stages operating on in-memory data

Json parse_summary(const canlog::CanLog& log)
{
    Json doc;
    doc["format"] = log.is_candump() ? "candump" : "syncan_csv";
    doc["messages"] = log.size();
    doc["skipped_blank_lines"] = log.skipped_blank_lines;
    doc["warnings"] = log.warnings;
    doc["ids"] = Json::array();
    if (log.is_candump()) {
        const auto by_id = canlog::split_by_id(std::span(log.frames()));
        for (const auto& [can_id, frames] : by_id) {
            std::set<int> dlcs;
            for (const auto& f : frames)
                dlcs.insert(f.dlc);
            doc["ids"].push_back({{"id", id_name(frames.front())},
                                  {"messages", frames.size()},
                                  {"dlc", dlcs},
                                  {"first_timestamp", frames.front().seconds()},
                                  {"last_timestamp", frames.back().seconds()}});
        }
    } else {
        const auto by_id = canlog::split_by_id(std::span(log.signal_records()));
        for (const auto& [id, records] : by_id) {
            std::size_t attacked = 0;
            for (const auto& r : records)
                attacked += r.label;
            doc["ids"].push_back({{"id", id},
                                  {"messages", records.size()},
                                  {"signals", records.front().signals.size()},
                                  {"attacked", attacked},
                                  {"first_timestamp", records.front().timestamp},
                                  {"last_timestamp", records.back().timestamp}});
        }
    }
    return doc;
}

std::string summary_csv(const Json& summary)
{
    const bool candump = summary["format"] == "candump";
    std::string out = candump ? "id,messages,dlc,first_timestamp,last_timestamp\n"
                              : "id,messages,signals,attacked,first_timestamp,last_timestamp\n";
    for (const auto& row : summary["ids"]) {
        if (candump) {
            std::string dlcs;
            for (const auto& d : row["dlc"])
                dlcs += (dlcs.empty() ? "" : ";") + std::to_string(d.get<int>());
            out += fmt::format("{},{},{},{:.6f},{:.6f}\n", row["id"].get<std::string>(), row["messages"].get<std::size_t>(),
                               dlcs, row["first_timestamp"].get<double>(), row["last_timestamp"].get<double>());
        } else {
            out += fmt::format("{},{},{},{},{:.6f},{:.6f}\n", row["id"].get<std::string>(),
                               row["messages"].get<std::size_t>(), row["signals"].get<std::size_t>(),
                               row["attacked"].get<std::size_t>(), row["first_timestamp"].get<double>(),
                               row["last_timestamp"].get<double>());
        }
    }
    return out;
}

void write_summary(const canlog::CanLog& log, const RunConfig& config, ArtifactWriter& out, const std::string& name)
{
    const auto summary = parse_summary(log);
    if (config.format == evalkit::ReportFormat::json)
        out.write(name + ".json", summary.dump(2) + "\n");
    else
        out.write(name + ".csv", summary_csv(summary));
}

/// Layouts inferred from every usable ID of a candump log.
std::map<std::string, sigmap::SignalLayout> extract_layouts(const canlog::CanLog& log, const RunConfig& config,
                                                            const Log& logger, ArtifactWriter& out,
                                                            const fs::path& dir)
{
    if (!log.is_candump())
        throw StageError("extract-signals", kInput, "signal extraction needs a candump log");
    std::map<std::string, sigmap::SignalLayout> layouts;
    const auto by_id = canlog::split_by_id(std::span(log.frames()));
    for (const auto& [can_id, frames] : by_id) {
        const auto id = id_name(frames.front());
        if (!id_selected(config, id))
            continue;
        sigmap::BitStats stats;
        try {
            stats = sigmap::compute_bit_stats(frames);
        } catch (const std::exception& e) {
            logger.warn("{}: {}", id, e.what());
            continue;
        }
        auto layout = sigmap::infer_signal_layout(stats);
        layout.extended = frames.front().extended;
        out.write(dir / "bitstats" / (id + ".csv"), sigmap::bit_stats_to_csv(stats));
        out.write(dir / "layouts" / (id + ".json"), sigmap::layout_to_json(layout));
        logger.info("{}: {} frames, {} signal(s), {} static field(s)", id, frames.size(), layout.n_signals(),
                    layout.static_fields.size());
        layouts.emplace(id, std::move(layout));
    }
    if (layouts.empty())
        throw StageError("extract-signals", kData, "no ID had enough frames to extract signals");
    return layouts;
}

attackgen::AttackResult apply_attack(const canlog::CanLog& log, const std::string& spec_path,
                                     const LayoutSource& layouts, ArtifactWriter& out, const Log& logger)
{
    if (!log.is_candump())
        throw StageError("inject", kInput, "attacks are injected into candump logs");
    const auto request = in_stage("inject", [&] { return attackgen::attack_request_from_json(read_text_file(spec_path)); });
    out.record_input(spec_path);

    const auto& frames = log.frames();
    const auto target = std::find_if(frames.begin(), frames.end(),
                                     [&](const canlog::CanFrame& f) { return f.can_id == request.spec.msg_id; });
    if (target == frames.end())
        throw StageError("inject", kData, fmt::format("ID {:X} does not occur in the log", request.spec.msg_id));
    const auto id = id_name(*target);

    auto layout = in_stage("inject", [&] { return layouts.find(id); });
    if (!layout) {
        std::vector<canlog::CanFrame> id_frames;
        for (const auto& f : frames)
            if (f.can_id == request.spec.msg_id)
                id_frames.push_back(f);
        layout = infer_layout(id_frames, logger, id);
        if (!layout)
            throw StageError("inject", kData, fmt::format("no signal layout for {}", id));
        logger.info("{}: no layout given, inferred {} signal(s) from the log", id, layout->n_signals());
    }
    return in_stage("inject", [&] {
        auto result = request.plateau ? attackgen::plateau_preset(frames, *layout, request.spec.signal_index)
                                      : attackgen::inject_attack(frames, *layout, request.spec);
        logger.info("{}: {} message(s) attacked on signal {}", id, result.truth.attacked_count(),
                    request.spec.signal_index);
        return result;
    });
}

void write_attack(const attackgen::AttackResult& result, ArtifactWriter& out, const fs::path& dir)
{
    std::ostringstream log_text;
    canlog::write_candump(log_text, result.frames);
    out.write(dir / "attacked.log", log_text.str());
    out.write(dir / "ground_truth.csv", attackgen::ground_truth_to_csv(result.frames, result.truth));
}

std::vector<detector::DetectorBundle> train_all(const std::vector<IdData>& data, const RunConfig& config,
                                                const Log& logger, ArtifactWriter& out, const fs::path& dir)
{
    std::vector<detector::DetectorBundle> bundles;
    for (const auto& d : data) {
        auto bundle = in_stage("train", [&] {
            const auto normalizer = sigmap::Normalizer::fit(d.raw);
            detector::TrainOptions options;
            options.on_epoch = [&](const detector::EpochRecord& r) {
                logger.info("{} epoch {}/{} train {:.6e} val {:.6e}{}", d.id, r.epoch, config.train.epochs,
                            r.train_loss, r.val_loss, r.improved ? " *" : "");
            };
            logger.info("{}: training on {} messages, {} signal(s)", d.id, d.raw.size(), d.raw.n_signals);
            auto result = detector::train(normalizer.apply(d.raw), config.train, options);
            detector::DetectorBundle b;
            b.msg_id = d.id;
            b.model = std::move(result.model);
            b.normalizer = normalizer;
            b.layout = d.layout;
            b.config = config.train;
            b.history = std::move(result.history);
            b.training_digest = detector::series_digest(d.raw);
            logger.info("{}: best epoch {} (val {:.6e}){}", d.id, b.history.best_epoch, b.history.best_val_loss,
                        b.history.stopped_early ? ", stopped early" : "");
            return b;
        });
        const auto bundle_dir = out.root() / dir / d.id;
        detector::save_bundle(bundle, bundle_dir);
        out.record(bundle_dir / detector::kModelFile);
        out.record(bundle_dir / detector::kSidecarFile);
        bundles.push_back(std::move(bundle));
    }
    return bundles;
}

/// Thresholds from the validation part of the training data when `data`
/// is the series the bundle was trained on, otherwise from all of `data`.
void calibrate_bundle(detector::DetectorBundle& bundle, const IdData& data, const Log& logger)
{
    in_stage("calibrate", [&] {
        const auto normalized = bundle.normalizer.apply(data.raw);
        SignalSeries validation;
        if (detector::series_digest(data.raw) == bundle.training_digest) {
            validation = detector::chronological_split(normalized, bundle.config.split).validation;
            logger.info("{}: calibrating on the {} held-out validation messages", bundle.msg_id, validation.size());
        } else {
            validation = normalized;
            logger.info("{}: input is not the training data; calibrating on all {} messages", bundle.msg_id,
                        validation.size());
        }
        bundle.thresholds = detector::calibrate_thresholds(bundle.model, validation, bundle.config.window);
        std::string values;
        for (double t : bundle.thresholds->thresholds)
            values += fmt::format(" {:.6e}", t);
        logger.info("{}: thresholds{}", bundle.msg_id, values);
        return 0;
    });
}

void save_bundle_artifacts(const detector::DetectorBundle& bundle, ArtifactWriter& out, const fs::path& dir)
{
    const auto bundle_dir = out.root() / dir / bundle.msg_id;
    detector::save_bundle(bundle, bundle_dir);
    out.record(bundle_dir / detector::kModelFile);
    out.record(bundle_dir / detector::kSidecarFile);
}

struct Detection
{
    std::string id;
    detector::ScoreMatrix scores;
    std::vector<detector::MessageVerdict> verdicts;
};

Detection detect_one(const detector::DetectorBundle& bundle, const IdData& data, const Log& logger)
{
    if (!bundle.thresholds)
        throw StageError("detect", kUsage, fmt::format("model {} has no thresholds; run calibrate first", bundle.msg_id));
    return in_stage("detect", [&] {
        Detection d;
        d.id = bundle.msg_id;
        d.scores = detector::score_messages(bundle.model, bundle.normalizer, data.raw, bundle.config.window);
        for (const auto& w : d.scores.warnings)
            logger.warn("{}", w);
        d.verdicts = detector::classify(d.scores, *bundle.thresholds);
        std::size_t flagged = 0;
        for (const auto& v : d.verdicts)
            flagged += v.label;
        logger.info("{}: {} of {} messages flagged", d.id, flagged, d.verdicts.size());
        return d;
    });
}

/// Per-ID truth labels: the SynCAN label column, or the ground-truth CSV
/// mapped onto this ID's positions in the log, or all benign.
std::vector<std::uint8_t> truth_for(const IdData& data, const std::optional<attackgen::GroundTruth>& truth)
{
    if (data.labels)
        return *data.labels;
    std::vector<std::uint8_t> labels(data.positions.size(), 0);
    if (truth) {
        for (std::size_t i = 0; i < data.positions.size(); ++i) {
            const auto p = data.positions[i];
            if (p >= truth->labels.size())
                throw StageError("evaluate", kData, "ground truth is shorter than the log");
            labels[i] = truth->labels[p];
        }
    }
    return labels;
}

std::vector<detector::DetectorBundle> load_bundles(const RunConfig& config, ArtifactWriter& out)
{
    require_path("load-model", config.model, "--model");
    std::vector<fs::path> dirs;
    const fs::path root = config.model;
    if (fs::exists(root / detector::kSidecarFile)) {
        dirs.push_back(root);
    } else {
        for (const auto& entry : fs::directory_iterator(root))
            if (entry.is_directory() && fs::exists(entry.path() / detector::kSidecarFile))
                dirs.push_back(entry.path());
        std::sort(dirs.begin(), dirs.end());
    }
    std::vector<detector::DetectorBundle> bundles;
    for (const auto& dir : dirs) {
        auto bundle = in_stage("load-model", [&] { return detector::load_bundle(dir); });
        if (!id_selected(config, bundle.msg_id))
            continue;
        out.record_input(dir / detector::kModelFile);
        out.record_input(dir / detector::kSidecarFile);
        bundles.push_back(std::move(bundle));
    }
    if (bundles.empty())
        throw StageError("load-model", kInput, fmt::format("no model bundles under {}", config.model));
    return bundles;
}

const IdData* find_data(const std::vector<IdData>& data, const std::string& id)
{
    for (const auto& d : data)
        if (normalize_id(d.id) == normalize_id(id))
            return &d;
    return nullptr;
}

std::vector<IdData> data_for_bundles(const canlog::CanLog& log, const std::vector<detector::DetectorBundle>& bundles,
                                     const RunConfig& config, const Log& logger)
{
    RunConfig selection = config;
    selection.ids.clear();
    for (const auto& b : bundles)
        selection.ids.push_back(b.msg_id);
    return per_id_data(
        log, selection, logger,
        [&](const std::string& id) -> std::optional<sigmap::SignalLayout> {
            for (const auto& b : bundles)
                if (normalize_id(b.msg_id) == normalize_id(id))
                    return b.layout;
            return std::nullopt;
        },
        false);
}

} // namespace

// ---------------------------------------------------------------------------
// Subcommands

void run_parse(const RunConfig& config, ArtifactWriter& out)
{
    require_path("parse", config.input, "--input");
    const auto log = load_log("parse", config.input, out);
    write_summary(log, config, out, "summary");
    Log(config.quiet).info("{}: {} messages", config.input, log.size());
}

void run_extract_signals(const RunConfig& config, ArtifactWriter& out)
{
    require_path("extract-signals", config.input, "--input");
    const auto log = load_log("extract-signals", config.input, out);
    extract_layouts(log, config, Log(config.quiet), out, "");
}

void run_inject(const RunConfig& config, ArtifactWriter& out)
{
    require_path("inject", config.input, "--input");
    require_path("inject", config.attack_spec, "--attack-spec");
    const Log logger(config.quiet);
    const auto log = load_log("inject", config.input, out);
    const auto result = apply_attack(log, config.attack_spec, LayoutSource(config.layout, &out), out, logger);
    write_attack(result, out, "");
}

void run_train(const RunConfig& config, ArtifactWriter& out)
{
    require_path("train", config.input, "--input");
    in_stage("train", [&] {
        config.train.validate();
        return 0;
    });
    const Log logger(config.quiet);
    const auto log = load_log("train", config.input, out);
    const LayoutSource layouts(config.layout, &out);
    const auto data = per_id_data(log, config, logger, [&](const std::string& id) { return layouts.find(id); }, true);
    train_all(data, config, logger, out, "models");
}

void run_calibrate(const RunConfig& config, ArtifactWriter& out)
{
    require_path("calibrate", config.input, "--input");
    const Log logger(config.quiet);
    auto bundles = load_bundles(config, out);
    const auto log = load_log("calibrate", config.input, out);
    const auto data = data_for_bundles(log, bundles, config, logger);
    for (auto& bundle : bundles) {
        const auto* d = find_data(data, bundle.msg_id);
        if (!d)
            throw StageError("calibrate", kData, fmt::format("{} does not occur in {}", bundle.msg_id, config.input));
        calibrate_bundle(bundle, *d, logger);
        save_bundle_artifacts(bundle, out, "models");
    }
}

void run_detect(const RunConfig& config, ArtifactWriter& out)
{
    require_path("detect", config.input, "--input");
    const Log logger(config.quiet);
    const auto bundles = load_bundles(config, out);
    const auto log = load_log("detect", config.input, out);
    const auto data = data_for_bundles(log, bundles, config, logger);
    for (const auto& bundle : bundles) {
        const auto* d = find_data(data, bundle.msg_id);
        if (!d) {
            logger.warn("{} does not occur in {}", bundle.msg_id, config.input);
            continue;
        }
        const auto det = detect_one(bundle, *d, logger);
        out.write(fs::path("verdicts") / (det.id + ".csv"), detector::verdicts_to_csv(det.verdicts, det.scores.n_signals));
    }
}

void run_evaluate(const RunConfig& config, ArtifactWriter& out)
{
    require_path("evaluate", config.verdicts, "--verdicts");
    require_path("evaluate", config.input, "--input");
    const Log logger(config.quiet);
    const auto log = load_log("evaluate", config.input, out);

    std::optional<attackgen::GroundTruth> truth;
    if (!config.truth.empty()) {
        require_path("evaluate", config.truth, "--truth");
        truth = in_stage("evaluate", [&] { return attackgen::ground_truth_from_csv(read_text_file(config.truth)); });
        out.record_input(config.truth);
        if (truth->labels.size() != log.size())
            throw StageError("evaluate", kData, fmt::format("ground truth has {} rows but the log has {} messages",
                                                            truth->labels.size(), log.size()));
    } else if (log.is_candump()) {
        logger.warn("no --truth given for a candump log; treating every message as benign");
    }

    std::map<std::string, std::vector<detector::MessageVerdict>> verdicts;
    for (const auto& entry : fs::directory_iterator(config.verdicts)) {
        if (entry.path().extension() != ".csv")
            continue;
        const auto id = entry.path().stem().string();
        if (!id_selected(config, id))
            continue;
        verdicts[id] = in_stage("evaluate", [&] { return detector::verdicts_from_csv(read_text_file(entry.path())); });
        out.record_input(entry.path());
    }
    if (verdicts.empty())
        throw StageError("evaluate", kInput, fmt::format("no verdict files in {}", config.verdicts));

    // Only message positions and label columns are needed here, not signal values.
    std::map<std::string, IdData> data;
    if (log.is_candump()) {
        const auto& frames = log.frames();
        for (std::size_t i = 0; i < frames.size(); ++i) {
            auto& d = data[normalize_id(id_name(frames[i]))];
            d.positions.push_back(i);
        }
    } else {
        const auto& records = log.signal_records();
        for (std::size_t i = 0; i < records.size(); ++i) {
            auto& d = data[normalize_id(records[i].msg_id)];
            d.positions.push_back(i);
            if (!d.labels)
                d.labels.emplace();
            d.labels->push_back(records[i].label);
        }
    }

    const auto attack_class = derive_attack_class(config, config.input);
    std::vector<evalkit::ReportRow> rows;
    for (const auto& [id, v] : verdicts) {
        const auto it = data.find(normalize_id(id));
        if (it == data.end())
            throw StageError("evaluate", kData, fmt::format("{} does not occur in {}", id, config.input));
        const auto labels = truth_for(it->second, truth);
        rows.push_back(in_stage("evaluate", [&] { return evalkit::evaluate(id, attack_class, v, labels); }));
    }
    const auto report = in_stage("evaluate", [&] { return evalkit::emit_report(rows, config.format); });
    out.write("metrics." + report_ext(config.format), report);
    if (!config.quiet)
        fmt::print("{}", report);
}

void run_pipeline(const RunConfig& config, ArtifactWriter& out)
{
    require_path("pipeline", config.input, "--input");
    require_path("pipeline", config.test, "--test");
    in_stage("pipeline", [&] {
        config.train.validate();
        return 0;
    });
    const Log logger(config.quiet);

    // parse
    const auto train_log = load_log("parse", config.input, out);
    auto test_log = load_log("parse", config.test, out);
    write_summary(train_log, config, out, "parse/train_summary");
    write_summary(test_log, config, out, "parse/test_summary");

    // extract-signals
    std::map<std::string, sigmap::SignalLayout> extracted;
    const LayoutSource given(config.layout, &out);
    if (train_log.is_candump() && config.layout.empty())
        extracted = extract_layouts(train_log, config, logger, out, "signals");
    auto layout_for = [&](const std::string& id) -> std::optional<sigmap::SignalLayout> {
        if (auto l = given.find(id))
            return l;
        for (const auto& [eid, layout] : extracted)
            if (normalize_id(eid) == normalize_id(id))
                return layout;
        return std::nullopt;
    };

    // inject
    std::optional<attackgen::GroundTruth> truth;
    if (!config.attack_spec.empty()) {
        require_path("inject", config.attack_spec, "--attack-spec");
        const LayoutSource inject_layouts(config.layout.empty() ? (out.root() / "signals" / "layouts").string()
                                                                : config.layout,
                                          nullptr);
        auto result = apply_attack(test_log, config.attack_spec, inject_layouts, out, logger);
        write_attack(result, out, "inject");
        truth = std::move(result.truth);
        test_log.records = std::move(result.frames);
    }

    // train
    const auto train_data = per_id_data(train_log, config, logger, layout_for, false);
    auto bundles = train_all(train_data, config, logger, out, "models");

    // calibrate
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        calibrate_bundle(bundles[i], train_data[i], logger);
        save_bundle_artifacts(bundles[i], out, "models");
    }

    // detect
    const auto test_data = data_for_bundles(test_log, bundles, config, logger);
    const auto attack_class = config.attack_spec.empty() ? derive_attack_class(config, config.test)
                                                         : (config.attack_class.empty() ? "attack" : config.attack_class);
    std::vector<evalkit::ReportRow> rows;
    std::string traces;
    for (const auto& bundle : bundles) {
        const auto* d = find_data(test_data, bundle.msg_id);
        if (!d) {
            logger.warn("{} does not occur in the test log", bundle.msg_id);
            continue;
        }
        const auto det = detect_one(bundle, *d, logger);
        out.write(fs::path("verdicts") / (det.id + ".csv"), detector::verdicts_to_csv(det.verdicts, det.scores.n_signals));

        // evaluate
        const auto labels = truth_for(*d, truth);
        rows.push_back(in_stage("evaluate", [&] { return evalkit::evaluate(det.id, attack_class, det.verdicts, labels); }));
        out.write(fs::path("traces") / (det.id + ".csv"),
                  in_stage("evaluate", [&] { return evalkit::score_trace_csv(det.scores, *bundle.thresholds, labels); }));
    }
    if (rows.empty())
        throw StageError("evaluate", kData, "no trained ID occurs in the test log");
    const auto report = in_stage("evaluate", [&] { return evalkit::emit_report(rows, config.format); });
    out.write("metrics." + report_ext(config.format), report);
    if (!config.quiet)
        fmt::print("{}", report);
}

} // namespace cantcn::cli
