#include "cantcn/detector/bundle.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "cantcn/digest.hpp"
#include "cantcn/nn/model_io.hpp"

namespace cantcn::detector {

namespace {

using Json = nlohmann::ordered_json;

Json history_json(const TrainHistory& h)
{
    Json doc;
    doc["best_epoch"] = h.best_epoch;
    doc["best_val_loss"] = h.best_val_loss;
    doc["stopped_early"] = h.stopped_early;
    doc["optimizer_steps"] = h.optimizer_steps;
    doc["epochs"] = Json::array();
    for (const auto& e : h.epochs)
        doc["epochs"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss},
                                 {"improved", e.improved}});
    return doc;
}

TrainHistory history_from_json(const nlohmann::json& doc)
{
    TrainHistory h;
    h.best_epoch = doc.at("best_epoch").get<std::size_t>();
    h.best_val_loss = doc.at("best_val_loss").get<double>();
    h.stopped_early = doc.at("stopped_early").get<bool>();
    h.optimizer_steps = doc.at("optimizer_steps").get<std::size_t>();
    for (const auto& e : doc.at("epochs"))
        h.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                            e.at("val_loss").get<double>(), e.at("improved").get<bool>()});
    return h;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

std::string series_digest(const SignalSeries& series)
{
    std::string bytes = fmt::format("{}:{}:{}:", series.msg_id, series.n_signals, series.size());
    bytes.append(reinterpret_cast<const char*>(series.timestamps.data()), series.timestamps.size() * sizeof(double));
    bytes.append(reinterpret_cast<const char*>(series.values.data()), series.values.size() * sizeof(double));
    return sha256_hex(bytes);
}

std::string history_to_json(const TrainHistory& history)
{
    return history_json(history).dump(2) + "\n";
}

void save_bundle(const DetectorBundle& bundle, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const std::string model_bytes = nn::serialize_model(bundle.model);
    write_file(dir / kModelFile, model_bytes);

    const auto& arch = bundle.model.config;
    Json doc;
    doc["format"] = "cantcn-detector";
    doc["format_version"] = 1;
    doc["toolkit_version"] = CANTCN_VERSION;
    doc["msg_id"] = bundle.msg_id;
    doc["architecture"] = {{"n_signals", arch.n_signals},
                           {"filters", arch.filters},
                           {"kernel_size", arch.kernel_size},
                           {"dilations", arch.dilations},
                           {"relu_after_add", arch.relu_after_add},
                           {"receptive_field", bundle.model.receptive_field()}};
    doc["normalizer"] = {{"min", bundle.normalizer.mins()}, {"max", bundle.normalizer.maxs()}};
    if (bundle.thresholds) {
        doc["thresholds"] = {{"percentile", bundle.thresholds->percentile},
                             {"validation_windows", bundle.thresholds->validation_windows},
                             {"values", bundle.thresholds->thresholds}};
    } else {
        doc["thresholds"] = nullptr;
    }
    if (bundle.layout)
        doc["layout"] = Json::parse(sigmap::layout_to_json(*bundle.layout));
    const auto& c = bundle.config;
    doc["train_config"] = {{"window", c.window},   {"batch", c.batch},       {"epochs", c.epochs},
                           {"lr", c.lr},           {"patience", c.patience}, {"split", c.split},
                           {"seed", c.seed}};
    doc["seed"] = c.seed;
    doc["training_data_sha256"] = bundle.training_digest;
    doc["model_sha256"] = sha256_hex(model_bytes);
    doc["history"] = history_json(bundle.history);
    write_file(dir / kSidecarFile, doc.dump(2) + "\n");
}

DetectorBundle load_bundle(const std::filesystem::path& dir)
{
    const std::string model_bytes = read_file(dir / kModelFile);
    const auto doc = nlohmann::json::parse(read_file(dir / kSidecarFile));

    if (doc.at("model_sha256").get<std::string>() != sha256_hex(model_bytes))
        throw std::runtime_error(fmt::format("{}: model file does not match the digest in its sidecar", dir.string()));

    DetectorBundle bundle;
    bundle.model = nn::deserialize_model(model_bytes);
    bundle.msg_id = doc.at("msg_id").get<std::string>();
    bundle.normalizer = sigmap::Normalizer(doc.at("normalizer").at("min").get<std::vector<double>>(),
                                           doc.at("normalizer").at("max").get<std::vector<double>>());
    if (bundle.normalizer.n_signals() != bundle.model.n_signals())
        throw std::runtime_error(fmt::format("{}: normalizer width {} differs from model width {}", dir.string(),
                                             bundle.normalizer.n_signals(), bundle.model.n_signals()));

    const auto& th = doc.at("thresholds");
    if (!th.is_null()) {
        ThresholdSet set;
        set.percentile = th.at("percentile").get<double>();
        set.validation_windows = th.at("validation_windows").get<std::size_t>();
        set.thresholds = th.at("values").get<std::vector<double>>();
        bundle.thresholds = std::move(set);
    }
    if (doc.contains("layout"))
        bundle.layout = sigmap::layout_from_json(doc.at("layout").dump());

    const auto& c = doc.at("train_config");
    bundle.config.window = c.at("window").get<std::size_t>();
    bundle.config.batch = c.at("batch").get<std::size_t>();
    bundle.config.epochs = c.at("epochs").get<std::size_t>();
    bundle.config.lr = c.at("lr").get<double>();
    bundle.config.patience = c.at("patience").get<std::size_t>();
    bundle.config.split = c.at("split").get<double>();
    bundle.config.seed = c.at("seed").get<std::uint64_t>();
    bundle.history = history_from_json(doc.at("history"));
    bundle.training_digest = doc.at("training_data_sha256").get<std::string>();
    return bundle;
}

} // namespace cantcn::detector
