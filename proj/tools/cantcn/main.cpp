#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"

using namespace cantcn::cli;

namespace {

struct Flags
{
    std::string config;
    std::optional<std::string> input, test, layout, model, verdicts, truth, attack_spec, attack_class, out, ids,
        format;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> window, batch, epochs, patience;
    std::optional<double> lr, split;
    bool quiet = false;
};

void add_common(CLI::App& cmd, Flags& f)
{
    cmd.add_option("--config", f.config, "JSON file with default settings; flags take precedence");
    cmd.add_option("--out", f.out, "Output directory (default $CANTCN_OUT or ./cantcn-out)");
    cmd.add_option("--ids", f.ids, "Comma-separated message IDs to process");
    cmd.add_flag("--quiet,-q", f.quiet, "Suppress progress output");
}

void add_train_flags(CLI::App& cmd, Flags& f)
{
    cmd.add_option("--seed", f.seed, "Random seed");
    cmd.add_option("--window", f.window, "Window length");
    cmd.add_option("--batch", f.batch, "Mini-batch size");
    cmd.add_option("--epochs", f.epochs, "Maximum epochs");
    cmd.add_option("--lr", f.lr, "Adam learning rate");
    cmd.add_option("--patience", f.patience, "Early-stopping patience in epochs");
    cmd.add_option("--split", f.split, "Fraction of each series used for training");
}

RunConfig resolve(const Flags& f)
{
    RunConfig c;
    if (!f.config.empty())
        apply_config_file(c, f.config);
    auto set = [](std::string& dst, const std::optional<std::string>& src) {
        if (src)
            dst = *src;
    };
    set(c.input, f.input);
    set(c.test, f.test);
    set(c.layout, f.layout);
    set(c.model, f.model);
    set(c.verdicts, f.verdicts);
    set(c.truth, f.truth);
    set(c.attack_spec, f.attack_spec);
    set(c.attack_class, f.attack_class);
    set(c.out, f.out);
    if (f.ids)
        c.ids = split_ids(*f.ids);
    if (f.format) {
        try {
            c.format = cantcn::evalkit::report_format_from_string(*f.format);
        } catch (const std::exception& e) {
            throw StageError("config", kUsage, e.what());
        }
    }
    if (f.seed)
        c.train.seed = *f.seed;
    if (f.window)
        c.train.window = *f.window;
    if (f.batch)
        c.train.batch = *f.batch;
    if (f.epochs)
        c.train.epochs = *f.epochs;
    if (f.lr)
        c.train.lr = *f.lr;
    if (f.patience)
        c.train.patience = *f.patience;
    if (f.split)
        c.train.split = *f.split;
    if (f.quiet)
        c.quiet = true;
    if (c.out.empty())
        c.out = default_out_dir();
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"CAN bus intrusion detection with temporal convolutional networks"};
    app.set_version_flag("--version", CANTCN_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    Flags f;
    using Runner = std::function<void(const RunConfig&, ArtifactWriter&)>;
    std::map<CLI::App*, std::pair<std::string, Runner>> runners;

    auto sub = [&](const char* name, const char* help, Runner run) {
        auto* cmd = app.add_subcommand(name, help);
        add_common(*cmd, f);
        runners[cmd] = {name, std::move(run)};
        return cmd;
    };

    auto* parse = sub("parse", "Summarize a candump or signal CSV log", run_parse);
    parse->add_option("--input", f.input, "Log file");
    parse->add_option("--format", f.format, "csv or json");

    auto* extract = sub("extract-signals", "Infer signal layouts from a candump log", run_extract_signals);
    extract->add_option("--input", f.input, "candump log");

    auto* inject = sub("inject", "Write an attacked copy of a candump log", run_inject);
    inject->add_option("--input", f.input, "candump log");
    inject->add_option("--attack-spec", f.attack_spec, "Attack JSON");
    inject->add_option("--layout", f.layout, "Layout JSON or directory of <ID>.json");

    auto* train = sub("train", "Train one predictor per message ID", run_train);
    train->add_option("--input", f.input, "Attack-free training log");
    train->add_option("--layout", f.layout, "Layout JSON or directory of <ID>.json");
    add_train_flags(*train, f);

    auto* calibrate = sub("calibrate", "Set per-signal thresholds on benign data", run_calibrate);
    calibrate->add_option("--model", f.model, "Bundle directory or directory of bundles");
    calibrate->add_option("--input", f.input, "Benign log");

    auto* detect = sub("detect", "Score a log and write per-message verdicts", run_detect);
    detect->add_option("--model", f.model, "Calibrated bundle directory or directory of bundles");
    detect->add_option("--input", f.input, "Log to score");

    auto* evaluate = sub("evaluate", "Compare verdicts with ground truth", run_evaluate);
    evaluate->add_option("--verdicts", f.verdicts, "Directory of <ID>.csv verdict files");
    evaluate->add_option("--input", f.input, "The log the verdicts were computed on");
    evaluate->add_option("--truth", f.truth, "Ground-truth CSV from inject (candump logs)");
    evaluate->add_option("--attack-class", f.attack_class, "Label for the report rows");
    evaluate->add_option("--format", f.format, "csv or json");

    auto* pipeline = sub("pipeline", "parse, extract, inject, train, calibrate, detect and evaluate", run_pipeline);
    pipeline->add_option("--input", f.input, "Attack-free training log");
    pipeline->add_option("--test", f.test, "Test log");
    pipeline->add_option("--layout", f.layout, "Layout JSON or directory of <ID>.json");
    pipeline->add_option("--attack-spec", f.attack_spec, "Attack JSON applied to the test log");
    pipeline->add_option("--attack-class", f.attack_class, "Label for the report rows");
    pipeline->add_option("--format", f.format, "csv or json");
    add_train_flags(*pipeline, f);

    if (argc > 1 && argv[1][0] != '-') {
        const std::string word = argv[1];
        const auto subs = app.get_subcommands([](CLI::App*) { return true; });
        if (std::none_of(subs.begin(), subs.end(), [&](CLI::App* s) { return s->get_name() == word; })) {
            fmt::print(stderr, "error [usage]: unknown subcommand '{}'\n\n{}", word, app.help());
            return kUsage;
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        fmt::print(stderr, "error [usage]: {}\n\n{}", e.what(), app.help());
        return kUsage;
    }

    for (auto& [cmd, entry] : runners) {
        if (!cmd->parsed())
            continue;
        const auto& [name, run] = entry;
        try {
            const auto config = resolve(f);
            ArtifactWriter out(config.out);
            run(config, out);
            out.write_manifest(name, config.to_json(), config.train.seed);
            return kOk;
        } catch (const StageError& e) {
            fmt::print(stderr, "error [{}]: {}\n", e.stage(), e.what());
            return e.code();
        } catch (const std::exception& e) {
            fmt::print(stderr, "error [{}]: {}\n", name, e.what());
            return kInternal;
        }
    }
    return kUsage;
}
