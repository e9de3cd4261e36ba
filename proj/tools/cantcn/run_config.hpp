#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cantcn/detector/train.hpp"
#include "cantcn/evalkit.hpp"

namespace cantcn::cli {

/// Exit codes, one per error category.
enum ExitCode : int
{
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kInput = 3,
    kData = 4,
    kTraining = 5,
};

/// Failure with a pipeline stage name attached.
class StageError : public std::runtime_error
{
public:
    StageError(std::string stage, int code, const std::string& what)
        : std::runtime_error(what)
        , stage_(std::move(stage))
        , code_(code)
    {
    }
    const std::string& stage() const { return stage_; }
    int code() const { return code_; }

private:
    std::string stage_;
    int code_;
};

struct RunConfig
{
    std::string input;        ///< log to parse / train on
    std::string test;         ///< pipeline: log to attack and score
    std::string layout;       ///< layout JSON file or a directory of <ID>.json
    std::string model;        ///< bundle directory or a directory of bundles
    std::string verdicts;     ///< directory of <ID>.csv verdict files
    std::string truth;        ///< ground-truth CSV written by inject
    std::string attack_spec;  ///< attack JSON
    std::string attack_class; ///< report label; derived from the test file name when empty
    std::string out;
    std::vector<std::string> ids;
    evalkit::ReportFormat format = evalkit::ReportFormat::csv;
    detector::TrainConfig train;
    bool quiet = false;

    /// Effective configuration as written to the manifest.
    std::string to_json() const;
};

/// Default output directory: $CANTCN_OUT, or "cantcn-out".
std::string default_out_dir();

/// Fields present in the JSON document replace the defaults. Unknown keys
/// are rejected so that typos do not silently fall back to defaults.
void apply_config_file(RunConfig& config, const std::string& path);

std::vector<std::string> split_ids(const std::string& list);

/// Canonical form of an ID for matching: hex IDs upper-case without a 0x
/// prefix or leading zeros; other names unchanged.
std::string normalize_id(const std::string& id);

bool id_selected(const RunConfig& config, const std::string& id);

} // namespace cantcn::cli
