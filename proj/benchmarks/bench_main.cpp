#include <benchmark/benchmark.h>

#include <iomanip>
#include <random>
#include <sstream>

#include "cantcn/canlog.hpp"
#include "cantcn/detector/scoring.hpp"
#include "cantcn/nn/conv.hpp"
#include "cantcn/nn/tcn.hpp"

using namespace cantcn;

namespace {

nn::Tensor3 random_input(std::size_t batch, std::size_t time, std::size_t channels, unsigned seed = 1)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    nn::Tensor3 x(batch, time, channels);
    for (double& v : x.values())
        v = dist(gen);
    return x;
}

nn::Conv1d random_conv(std::size_t in, std::size_t out, std::size_t dilation)
{
    nn::Conv1d conv(2, in, out, dilation);
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for (double& w : conv.weights)
        w = dist(gen);
    return conv;
}

} // namespace

// 64 -> 64 filters at the default batch and window size.
static void BM_ConvForward(benchmark::State& state)
{
    const auto batch = static_cast<std::size_t>(state.range(0));
    const auto x = random_input(batch, 20, 64);
    const auto conv = random_conv(64, 64, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(nn::causal_conv1d(x, conv));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_ConvForward)->Arg(1)->Arg(32)->Arg(128);

static void BM_ConvBackward(benchmark::State& state)
{
    const auto batch = static_cast<std::size_t>(state.range(0));
    const auto x = random_input(batch, 20, 64);
    const auto conv = random_conv(64, 64, 2);
    const auto grad_out = random_input(batch, 20, 64, 3);
    auto grad = random_conv(64, 64, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(nn::causal_conv1d_backward(x, conv, grad_out, grad));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_ConvBackward)->Arg(1)->Arg(32)->Arg(128);

static void BM_ParseCandump(benchmark::State& state)
{
    std::ostringstream text;
    for (int i = 0; i < 10000; ++i)
        text << "(" << 1000 + i / 100 << "." << std::setw(6) << std::setfill('0') << (i % 100) * 10000
             << ") can0 1A0#" << std::hex << (0x10000000 + i * 7919) << std::dec << "\n";
    const auto log = text.str();
    for (auto _ : state)
        benchmark::DoNotOptimize(canlog::parse_candump(std::string_view(log)));
    state.SetItemsProcessed(state.iterations() * 10000);
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(log.size()));
}
BENCHMARK(BM_ParseCandump);

// Full sliding-window scoring of one ID with the default architecture.
static void BM_ScoreMessages(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto model = nn::init_model(3, 5);
    SignalSeries series("1A0", 3);
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (std::size_t t = 0; t < n; ++t) {
        const double row[3] = {dist(gen), dist(gen), dist(gen)};
        series.push_back(static_cast<double>(t) * 0.01, row);
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(detector::score_normalized(model, series, 20));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ScoreMessages)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
