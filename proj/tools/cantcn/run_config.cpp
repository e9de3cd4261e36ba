#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

namespace cantcn::cli {

namespace {

using Json = nlohmann::ordered_json;

std::string format_name(evalkit::ReportFormat f)
{
    return f == evalkit::ReportFormat::json ? "json" : "csv";
}

} // namespace

std::string RunConfig::to_json() const
{
    Json doc;
    doc["input"] = input;
    doc["test"] = test;
    doc["layout"] = layout;
    doc["model"] = model;
    doc["verdicts"] = verdicts;
    doc["truth"] = truth;
    doc["attack_spec"] = attack_spec;
    doc["attack_class"] = attack_class;
    doc["ids"] = ids;
    doc["format"] = format_name(format);
    doc["seed"] = train.seed;
    doc["train"] = {{"window", train.window},   {"batch", train.batch},       {"epochs", train.epochs},
                    {"lr", train.lr},           {"patience", train.patience}, {"split", train.split}};
    return doc.dump(2);
}

std::string default_out_dir()
{
    const char* env = std::getenv("CANTCN_OUT");
    return env && *env ? env : "cantcn-out";
}

void apply_config_file(RunConfig& config, const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw StageError("config", kInput, fmt::format("cannot open config file {}", path));
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw StageError("config", kUsage, fmt::format("{}: {}", path, e.what()));
    }
    if (!doc.is_object())
        throw StageError("config", kUsage, path + ": top level must be an object");

    static const std::set<std::string> known{"input", "test",   "layout", "model",  "verdicts", "truth", "attack_spec",
                                             "attack_class", "out", "ids", "format", "seed",   "train", "quiet"};
    static const std::set<std::string> known_train{"window", "batch", "epochs", "lr", "patience", "split"};
    try {
        for (const auto& [key, value] : doc.items()) {
            if (!known.count(key))
                throw StageError("config", kUsage, fmt::format("{}: unknown key '{}'", path, key));
            if (key == "ids") {
                config.ids.clear();
                if (value.is_string())
                    config.ids = split_ids(value.get<std::string>());
                else
                    for (const auto& id : value)
                        config.ids.push_back(id.get<std::string>());
            } else if (key == "format") {
                config.format = evalkit::report_format_from_string(value.get<std::string>());
            } else if (key == "seed") {
                config.train.seed = value.get<std::uint64_t>();
            } else if (key == "quiet") {
                config.quiet = value.get<bool>();
            } else if (key == "train") {
                for (const auto& [tk, tv] : value.items()) {
                    if (!known_train.count(tk))
                        throw StageError("config", kUsage, fmt::format("{}: unknown key 'train.{}'", path, tk));
                    if (tk == "window")
                        config.train.window = tv.get<std::size_t>();
                    else if (tk == "batch")
                        config.train.batch = tv.get<std::size_t>();
                    else if (tk == "epochs")
                        config.train.epochs = tv.get<std::size_t>();
                    else if (tk == "lr")
                        config.train.lr = tv.get<double>();
                    else if (tk == "patience")
                        config.train.patience = tv.get<std::size_t>();
                    else
                        config.train.split = tv.get<double>();
                }
            } else {
                const auto text = value.get<std::string>();
                if (key == "input")
                    config.input = text;
                else if (key == "test")
                    config.test = text;
                else if (key == "layout")
                    config.layout = text;
                else if (key == "model")
                    config.model = text;
                else if (key == "verdicts")
                    config.verdicts = text;
                else if (key == "truth")
                    config.truth = text;
                else if (key == "attack_spec")
                    config.attack_spec = text;
                else if (key == "attack_class")
                    config.attack_class = text;
                else
                    config.out = text;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw StageError("config", kUsage, fmt::format("{}: {}", path, e.what()));
    } catch (const std::invalid_argument& e) {
        throw StageError("config", kUsage, fmt::format("{}: {}", path, e.what()));
    }
}

std::vector<std::string> split_ids(const std::string& list)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto comma = list.find(',', start);
        const auto end = comma == std::string::npos ? list.size() : comma;
        std::string item = list.substr(start, end - start);
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                   item.end());
        if (!item.empty())
            out.push_back(item);
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

std::string normalize_id(const std::string& id)
{
    std::string s = id;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X'))
        s = s.substr(2);
    const bool hex = !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c); });
    if (!hex)
        return id;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    const auto first = s.find_first_not_of('0');
    return first == std::string::npos ? "0" : s.substr(first);
}

bool id_selected(const RunConfig& config, const std::string& id)
{
    if (config.ids.empty())
        return true;
    const auto want = normalize_id(id);
    return std::any_of(config.ids.begin(), config.ids.end(),
                       [&](const std::string& s) { return normalize_id(s) == want; });
}

} // namespace cantcn::cli
