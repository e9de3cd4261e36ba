#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cantcn/detector/windows.hpp"
#include "cantcn/nn/adam.hpp"
#include "cantcn/nn/tcn.hpp"
#include "cantcn/series.hpp"

namespace cantcn::detector {

struct TrainConfig
{
    std::size_t window = 20;
    std::size_t batch = 128;
    std::size_t epochs = 100;
    double lr = 1e-4;
    std::size_t patience = 10;
    double split = 0.85;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

class TrainingDiverged : public std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Tracks the best validation loss; improvement means strictly lower.
class EarlyStopping
{
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    /// Record one epoch's validation loss; returns true if it improved.
    bool update(double val_loss);
    bool should_stop() const { return epochs_ > 0 && since_best_ >= patience_; }

    std::size_t best_epoch() const { return best_epoch_; } ///< 1-based, 0 before any update
    double best_loss() const { return best_; }

private:
    std::size_t patience_;
    std::size_t epochs_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t since_best_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

struct EpochRecord
{
    std::size_t epoch = 0; ///< 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool improved = false;
};

struct TrainHistory
{
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    bool stopped_early = false;
    std::size_t optimizer_steps = 0;
};

struct TrainResult
{
    nn::TcnModel model; ///< weights from the best validation epoch
    TrainHistory history;
};

struct TrainOptions
{
    /// Architecture overrides; n_signals is always taken from the data.
    nn::ModelConfig model;
    std::function<void(const EpochRecord&)> on_epoch;
};

struct SeriesSplit
{
    SignalSeries train;
    SignalSeries validation;
};

/// First floor(split * N) messages for training, the rest for validation.
SeriesSplit chronological_split(const SignalSeries& series, double split);

/// One optimizer step on a reconstruction batch; returns the batch loss
/// before the update.
double train_step(nn::TcnModel& model, nn::AdamOptimizer& optimizer, const nn::Tensor3& batch);

/// Mean squared reconstruction error over every window, evaluated in chunks.
double dataset_loss(const nn::TcnModel& model, const WindowedDataset& data, std::size_t chunk);

/// Train on a normalized series: chronological split, per-epoch seeded
/// shuffling of training windows, early stopping on validation loss.
TrainResult train(const SignalSeries& normalized, const TrainConfig& config, const TrainOptions& options = {});

/// Same as above with the split already made.
TrainResult train(const SignalSeries& train_part, const SignalSeries& validation_part, const TrainConfig& config,
                  const TrainOptions& options = {});

/// Portable Fisher-Yates shuffle of 0..n-1 driven by mt19937_64.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

} // namespace cantcn::detector
