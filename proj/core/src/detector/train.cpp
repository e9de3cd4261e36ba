#include "cantcn/detector/train.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace cantcn::detector {

namespace {

std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound)
{
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
        const std::uint64_t r = gen();
        if (r >= threshold)
            return r % bound;
    }
}

// Per-epoch shuffle seeds derived from the run seed (splitmix64 step).
std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (epoch + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

void TrainConfig::validate() const
{
    if (window == 0)
        throw std::invalid_argument("window must be positive");
    if (batch == 0)
        throw std::invalid_argument("batch size must be positive");
    if (epochs == 0)
        throw std::invalid_argument("epochs must be positive");
    if (!(lr > 0.0) || !std::isfinite(lr))
        throw std::invalid_argument("learning rate must be positive");
    if (!(split > 0.0 && split < 1.0))
        throw std::invalid_argument(fmt::format("split must lie in (0, 1), got {}", split));
}

bool EarlyStopping::update(double val_loss)
{
    ++epochs_;
    if (val_loss < best_) {
        best_ = val_loss;
        best_epoch_ = epochs_;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

SeriesSplit chronological_split(const SignalSeries& series, double split)
{
    if (!(split > 0.0 && split < 1.0))
        throw std::invalid_argument(fmt::format("split must lie in (0, 1), got {}", split));
    const auto cut = static_cast<std::size_t>(std::floor(split * static_cast<double>(series.size())));
    return {series.slice(0, cut), series.slice(cut, series.size())};
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 gen(seed);
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[bounded(gen, i)]);
    return idx;
}

double train_step(nn::TcnModel& model, nn::AdamOptimizer& optimizer, const nn::Tensor3& batch)
{
    nn::Gradients g = nn::backward(model, batch, batch);
    if (!std::isfinite(g.loss))
        throw TrainingDiverged(fmt::format("non-finite training loss {} at optimizer step {}", g.loss,
                                           optimizer.state().t + 1));
    optimizer.step(model, g.grads);
    return g.loss;
}

double dataset_loss(const nn::TcnModel& model, const WindowedDataset& data, std::size_t chunk)
{
    double sum = 0.0;
    std::size_t elements = 0;
    for (std::size_t first = 0; first < data.count(); first += chunk) {
        const std::size_t last = std::min(first + chunk, data.count());
        const nn::Tensor3 x = data.gather_range(first, last);
        const nn::Tensor3 y = nn::tcn_forward(x, model);
        sum += nn::mse_loss(y, x) * static_cast<double>(x.size());
        elements += x.size();
    }
    return sum / static_cast<double>(elements);
}

TrainResult train(const SignalSeries& normalized, const TrainConfig& config, const TrainOptions& options)
{
    config.validate();
    const SeriesSplit parts = chronological_split(normalized, config.split);
    return train(parts.train, parts.validation, config, options);
}

TrainResult train(const SignalSeries& train_part, const SignalSeries& validation_part, const TrainConfig& config,
                  const TrainOptions& options)
{
    config.validate();
    if (train_part.n_signals != validation_part.n_signals)
        throw std::invalid_argument("training and validation series differ in width");
    if (train_part.size() < config.window || validation_part.size() < config.window)
        throw std::length_error(fmt::format("need at least {} messages in each of the training ({}) and validation ({}) "
                                            "parts",
                                            config.window, train_part.size(), validation_part.size()));

    const WindowedDataset train_set(train_part, config.window);
    const WindowedDataset val_set(validation_part, config.window);

    nn::ModelConfig model_config = options.model;
    model_config.n_signals = train_part.n_signals;
    nn::TcnModel model = nn::init_model(model_config, config.seed);
    nn::AdamOptimizer optimizer(model, nn::AdamHyper{.lr = config.lr});

    TrainResult result;
    result.model = model;
    EarlyStopping stopper(config.patience);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto order = shuffled_indices(train_set.count(), epoch_seed(config.seed, epoch));
        double weighted = 0.0;
        for (std::size_t first = 0; first < order.size(); first += config.batch) {
            const std::size_t last = std::min(first + config.batch, order.size());
            const auto batch = train_set.gather(std::span(order).subspan(first, last - first));
            const double loss = train_step(model, optimizer, batch);
            weighted += loss * static_cast<double>(last - first);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = weighted / static_cast<double>(order.size());
        record.val_loss = dataset_loss(model, val_set, config.batch);
        if (!std::isfinite(record.val_loss))
            throw TrainingDiverged(fmt::format("non-finite validation loss at epoch {}", epoch));
        record.improved = stopper.update(record.val_loss);
        if (record.improved)
            result.model = model;

        result.history.epochs.push_back(record);
        if (options.on_epoch)
            options.on_epoch(record);
        if (stopper.should_stop()) {
            result.history.stopped_early = epoch < config.epochs;
            break;
        }
    }

    result.history.best_epoch = stopper.best_epoch();
    result.history.best_val_loss = stopper.best_loss();
    result.history.optimizer_steps = static_cast<std::size_t>(optimizer.state().t);
    return result;
}

} // namespace cantcn::detector
