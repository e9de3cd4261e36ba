#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "cantcn/detector/scoring.hpp"
#include "cantcn/detector/train.hpp"
#include "cantcn/nn/tcn.hpp"
#include "cantcn/sigmap.hpp"

namespace cantcn::detector {

/// Everything needed to score one message ID: weights, the training
/// normalizer, calibrated thresholds and the provenance of the run.
struct DetectorBundle
{
    std::string msg_id;
    nn::TcnModel model;
    sigmap::Normalizer normalizer;
    std::optional<ThresholdSet> thresholds;
    std::optional<sigmap::SignalLayout> layout; ///< present for candump-derived IDs
    TrainConfig config;
    TrainHistory history;
    std::string training_digest;
};

inline constexpr const char* kModelFile = "model.bin";
inline constexpr const char* kSidecarFile = "model.json";

/// Writes <dir>/model.bin and <dir>/model.json, creating dir if needed.
void save_bundle(const DetectorBundle& bundle, const std::filesystem::path& dir);
DetectorBundle load_bundle(const std::filesystem::path& dir);

/// Digest of a series' timestamps and values, used to tie a model to its data.
std::string series_digest(const SignalSeries& series);

std::string history_to_json(const TrainHistory& history);

} // namespace cantcn::detector
