// Acceptance gate. Each criterion prints exactly one line:
//   PASS|FAIL|SKIP <id> <name>: <measurements>
// Usage: cantcn_acceptance [id...]   (no ids = all gating criteria)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cantcn/attackgen.hpp"
#include "cantcn/canlog.hpp"
#include "cantcn/detector/scoring.hpp"
#include "cantcn/detector/train.hpp"
#include "cantcn/evalkit.hpp"
#include "cantcn/nn/adam.hpp"
#include "cantcn/nn/tcn.hpp"
#include "nn_checks.hpp"
#include "synthetic.hpp"

using namespace cantcn;

namespace {

enum class Status
{
    pass,
    fail,
    skip,
};

struct Outcome
{
    Status status = Status::fail;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail)
{
    return {ok ? Status::pass : Status::fail, std::move(detail)};
}

class Stopwatch
{
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------

Outcome causality()
{
    Stopwatch clock;
    std::mt19937_64 gen(101);
    int violations = 0;
    for (int m = 0; m < 100; ++m) {
        const std::size_t channels = 1 + static_cast<std::size_t>(m % 4);
        auto model = nn::init_model(channels, 1000 + static_cast<std::uint64_t>(m));
        testing::jitter_biases(model, gen);
        const auto x = testing::random_tensor(gen, 2, 20, channels);
        if (!testing::is_causal(model, x, gen))
            ++violations;
    }
    const double t = clock.seconds();
    return verdict(violations == 0 && t < 10.0, fmt::format("100 models, {} violations, {:.2f} s (limit 10 s)",
                                                            violations, t));
}

Outcome receptive_field()
{
    Stopwatch clock;
    std::mt19937_64 gen(202);
    auto model = nn::init_model(3, 17);
    testing::jitter_biases(model, gen);
    const auto x = testing::random_tensor(gen, 2, 20, 3);
    const auto pos = testing::sensitive_positions(model, x, 19);
    std::set<std::size_t> expect;
    for (std::size_t t = 5; t <= 19; ++t)
        expect.insert(t);
    const double t = clock.seconds();
    const std::size_t lo = pos.empty() ? 0 : *pos.begin();
    const std::size_t hi = pos.empty() ? 0 : *pos.rbegin();
    return verdict(pos == expect && model.receptive_field() == 15 && t < 5.0,
                   fmt::format("sensitive positions {}..{} ({} total), expected 5..19, {:.2f} s (limit 5 s)", lo, hi,
                               pos.size(), t));
}

Outcome gradient_check()
{
    Stopwatch clock;
    std::mt19937_64 gen(303);
    auto model = nn::init_model(3, 29);
    testing::jitter_biases(model, gen);
    const auto x = testing::random_tensor(gen, 2, 20, 3, 0.0, 1.0);
    const auto target = testing::random_tensor(gen, 2, 20, 3, 0.0, 1.0);
    const auto r = testing::gradient_check(model, x, target);
    const double t = clock.seconds();
    return verdict(r.max_rel_error < 1e-4 && r.checked == model.parameter_count() && t < 120.0,
                   fmt::format("{} parameters, max relative error {:.3e} (limit 1e-4; denominators floored at "
                               "{:.2e} = eps*|L|/(h*1e-4), {} parameters below it; unfloored max {:.3e} at |g| = "
                               "{:.2e}), loss {:.3f}, {:.1f} s (limit 120 s)",
                               r.checked, r.max_rel_error, r.floor, r.below_floor, r.max_raw_rel_error,
                               std::abs(r.raw_worst_gradient), r.loss, t));
}

Outcome optimizer_oracle()
{
    // f(theta) = a/2 (theta - c)^2, gradient a (theta - c). The reference
    // evaluates the bias-corrected moments in closed form from the gradient
    // history: m_t = (1-b1) sum_k b1^(t-k) g_k, v_t = (1-b2) sum_k b2^(t-k) g_k^2.
    const double a = 3.0, c = 0.25, lr = 1e-4, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    std::vector<double> theta{2.0}, grad{0.0}, m{0.0}, v{0.0};
    nn::AdamHyper hyper;
    hyper.lr = lr;

    long double ref = 2.0L;
    std::vector<long double> history;
    double max_err = 0.0;
    for (std::uint64_t t = 1; t <= 10; ++t) {
        grad[0] = a * (theta[0] - c);
        nn::adam_update(theta, grad, m, v, t, hyper);

        history.push_back(static_cast<long double>(a) * (ref - static_cast<long double>(c)));
        long double mt = 0.0L, vt = 0.0L;
        for (std::size_t k = 0; k < history.size(); ++k) {
            const auto age = static_cast<long double>(history.size() - 1 - k);
            mt += (1.0L - b1) * std::pow(static_cast<long double>(b1), age) * history[k];
            vt += (1.0L - b2) * std::pow(static_cast<long double>(b2), age) * history[k] * history[k];
        }
        const long double mhat = mt / (1.0L - std::pow(static_cast<long double>(b1), static_cast<long double>(t)));
        const long double vhat = vt / (1.0L - std::pow(static_cast<long double>(b2), static_cast<long double>(t)));
        ref -= lr * mhat / (std::sqrt(vhat) + eps);
        max_err = std::max(max_err, static_cast<double>(std::fabs(static_cast<long double>(theta[0]) - ref)));
    }
    return verdict(max_err <= 1e-12, fmt::format("10 steps, max |theta - reference| = {:.3e} (limit 1e-12)", max_err));
}

Outcome overfit()
{
    Stopwatch clock;
    // 64 windows of 20 -> 83 clean messages.
    SignalSeries series("sine", 3);
    for (std::size_t i = 0; i < 83; ++i)
        series.push_back(static_cast<double>(i), testing::sinusoid_values(static_cast<double>(i), 64));
    const detector::WindowedDataset data(series, 20);
    const detector::TrainConfig defaults;
    const std::size_t batch = std::min(defaults.batch, data.count());

    auto model = nn::init_model(3, defaults.seed);
    nn::AdamOptimizer opt(model, nn::AdamHyper{.lr = defaults.lr});
    const auto all = data.gather_range(0, data.count());
    double loss = detector::dataset_loss(model, data, batch);
    std::size_t steps = 0;
    while (loss >= 1e-3 && steps < 2000) {
        detector::train_step(model, opt, all);
        ++steps;
        loss = detector::dataset_loss(model, data, batch);
    }
    const double t = clock.seconds();
    return verdict(loss < 1e-3 && t < 300.0,
                   fmt::format("{} windows, batch {}, training MSE {:.3e} after {} steps (limit 1e-3 within 2000), "
                               "{:.1f} s (limit 300 s)",
                               data.count(), batch, loss, steps, t));
}

// Criteria 6 and 7 share one trained detector.
struct SyntheticRun
{
    testing::SinusoidTrace trace;
    sigmap::SignalLayout layout;
    sigmap::Normalizer normalizer;
    detector::TrainResult trained;
    detector::ThresholdSet thresholds;
    detector::TrainConfig config;
    double train_seconds = 0.0;
};

const SyntheticRun& synthetic_run()
{
    static const SyntheticRun run = [] {
        Stopwatch clock;
        SyntheticRun r;
        r.layout = testing::sinusoid_layout(r.trace.can_id);
        const auto frames = testing::make_sinusoid_frames(r.trace, 0, 50'000);
        const auto raw = sigmap::decode_series(frames, r.layout);
        r.normalizer = sigmap::Normalizer::fit(raw);
        r.config.epochs = 30;
        r.config.seed = 7;
        const auto parts = detector::chronological_split(r.normalizer.apply(raw), r.config.split);
        r.trained = detector::train(parts.train, parts.validation, r.config);
        r.thresholds = detector::calibrate_thresholds(r.trained.model, parts.validation, r.config.window);
        r.train_seconds = clock.seconds();
        return r;
    }();
    return run;
}

Outcome synthetic_end_to_end()
{
    const auto& run = synthetic_run();
    Stopwatch clock;
    const auto test_frames = testing::make_sinusoid_frames(run.trace, 50'000, 10'000);

    std::vector<evalkit::ReportRow> rows;
    for (std::size_t s = 0; s < run.layout.n_signals(); ++s) {
        const auto attacked = attackgen::plateau_preset(test_frames, run.layout, s);
        const auto scores = detector::score_messages(run.trained.model, run.normalizer,
                                                     sigmap::decode_series(attacked.frames, run.layout),
                                                     run.config.window);
        const auto verdicts = detector::classify(scores, run.thresholds);
        rows.push_back(evalkit::evaluate(fmt::format("signal{}", s), "plateau", verdicts, attacked.truth.labels));
    }
    const double t = run.train_seconds + clock.seconds();
    const auto& gate = rows[0].metrics;
    const bool ok = gate.accuracy >= 0.95 && gate.fpr <= 0.02 && gate.precision >= 0.80 && t < 1800.0;
    std::string others;
    for (std::size_t s = 1; s < rows.size(); ++s)
        others += fmt::format("; signal {} acc {:.4f} fpr {:.4f} prec {:.4f}", s, rows[s].metrics.accuracy,
                              rows[s].metrics.fpr, rows[s].metrics.precision);
    return verdict(ok, fmt::format("plateau on signal 0: acc {:.4f} (>= 0.95) fpr {:.4f} (<= 0.02) prec {:.4f} "
                                   "(>= 0.80); {} epochs, best {}, {:.0f} s (limit 1800 s){}",
                                   gate.accuracy, gate.fpr, gate.precision, run.trained.history.epochs.size(),
                                   run.trained.history.best_epoch, t, others));
}

Outcome calibration_consistency()
{
    const auto& run = synthetic_run();
    // Fresh benign traffic from a later stretch of the trace, unseen by
    // training and calibration.
    const auto frames = testing::make_sinusoid_frames(run.trace, 70'000, 10'000);
    const auto scores = detector::score_messages(run.trained.model, run.normalizer,
                                                 sigmap::decode_series(frames, run.layout), run.config.window);
    const auto verdicts = detector::classify(scores, run.thresholds);
    std::size_t flagged = 0;
    for (const auto& v : verdicts)
        flagged += v.label;
    const double n = static_cast<double>(verdicts.size() - scores.warmup);
    const double p = static_cast<double>(run.layout.n_signals()) * 0.001;
    const double bound = p + 3.0 * std::sqrt(p * (1.0 - p) / n);
    const double fraction = static_cast<double>(flagged) / n;
    return verdict(fraction <= bound, fmt::format("{} of {:.0f} held-out benign messages flagged, fraction {:.5f} "
                                                  "(limit {:.5f})",
                                                  flagged, n, fraction, bound));
}

Outcome metrics_oracle()
{
    std::mt19937_64 gen(808);
    std::vector<std::uint8_t> pred(10'000), truth(10'000);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        pred[i] = static_cast<std::uint8_t>(gen() & 1u);
        truth[i] = static_cast<std::uint8_t>(gen() % 4 == 0);
    }
    evalkit::ConfusionCounts oracle;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] != 0;
        const bool t = truth[i] != 0;
        (p ? (t ? oracle.tp : oracle.fp) : (t ? oracle.fn : oracle.tn)) += 1;
    }
    const auto row = evalkit::evaluate("id1", "random", pred, truth);
    const auto& c = row.counts;
    const auto& m = row.metrics;
    const bool identities = m.accuracy == static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()) &&
                            m.fpr == static_cast<double>(c.fp) / static_cast<double>(c.tn + c.fp) &&
                            m.precision == static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    return verdict(c == oracle && identities,
                   fmt::format("counts tp {} tn {} fp {} fn {} vs oracle tp {} tn {} fp {} fn {}; identities {}", c.tp,
                               c.tn, c.fp, c.fn, oracle.tp, oracle.tn, oracle.fp, oracle.fn,
                               identities ? "exact" : "differ"));
}

sigmap::SignalLayout random_layout(std::mt19937_64& gen, std::uint32_t id)
{
    sigmap::SignalLayout layout;
    layout.msg_id = id;
    layout.dlc = static_cast<std::uint8_t>(1 + gen() % 8);
    const std::size_t bits = layout.dlc * 8u;
    std::size_t pos = 0;
    while (pos < bits) {
        const std::size_t len = std::min<std::size_t>(1 + gen() % 16, bits - pos);
        if (gen() % 4 == 0)
            layout.static_fields.push_back({pos, len});
        else
            layout.specs.push_back({layout.specs.size(), pos, len});
        pos += len;
    }
    if (layout.specs.empty()) {
        layout.static_fields.clear();
        layout.specs.push_back({0, 0, bits});
    }
    return layout;
}

Outcome attack_invariants()
{
    std::mt19937_64 gen(909);
    std::size_t failures = 0, attacked_total = 0;
    std::string first_failure;
    auto fail = [&](std::size_t trial, const std::string& what) {
        if (failures++ == 0)
            first_failure = fmt::format(" (first: trial {} {})", trial, what);
    };

    for (std::size_t trial = 0; trial < 1000; ++trial) {
        const std::uint32_t target_id = 0x100 + static_cast<std::uint32_t>(gen() % 0x600);
        const auto layout = random_layout(gen, target_id);
        std::vector<canlog::CanFrame> frames;
        const std::size_t n = 2 + gen() % 300;
        std::int64_t ts = static_cast<std::int64_t>(gen() % 1'000'000'000);
        for (std::size_t i = 0; i < n; ++i) {
            canlog::CanFrame f;
            ts += static_cast<std::int64_t>(gen() % 20'000);
            f.timestamp_us = ts;
            const bool target = gen() % 3 != 0;
            f.can_id = target ? target_id : static_cast<std::uint32_t>(gen() % 0x100);
            f.dlc = target ? layout.dlc : static_cast<std::uint8_t>(gen() % 9);
            for (std::size_t b = 0; b < f.dlc; ++b)
                f.data[b] = static_cast<std::uint8_t>(gen());
            frames.push_back(f);
        }
        std::vector<std::size_t> target_pos;
        for (std::size_t i = 0; i < n; ++i)
            if (frames[i].can_id == target_id)
                target_pos.push_back(i);
        if (target_pos.empty())
            continue;

        attackgen::AttackSpec spec;
        spec.kind = static_cast<attackgen::AttackKind>(gen() % 7);
        spec.msg_id = target_id;
        spec.signal_index = gen() % layout.n_signals();
        spec.rng_seed = gen();
        const auto& sig = layout.spec(spec.signal_index);
        const std::uint64_t max_value = sigmap::max_raw_value(sig);
        spec.param = spec.kind == attackgen::AttackKind::ChangeToConstant
                         ? static_cast<double>(gen() % (std::min<std::uint64_t>(max_value, 1u << 20) + 1))
                         : static_cast<double>(static_cast<std::int64_t>(gen() % 2001) - 1000);

        std::set<std::size_t> expected;
        if (gen() % 2 == 0) {
            const std::size_t a = gen() % target_pos.size();
            const std::size_t b = a + gen() % (target_pos.size() - a);
            spec.range = attackgen::IndexRange{a, b};
            for (std::size_t k = a; k <= b; ++k)
                expected.insert(target_pos[k]);
        } else {
            const double t0 = frames[target_pos[gen() % target_pos.size()]].seconds();
            const double t1 = t0 + static_cast<double>(gen() % 2'000'000) * 1e-6;
            spec.range = attackgen::TimeRange{t0, t1};
            for (std::size_t p : target_pos)
                if (frames[p].seconds() >= t0 && frames[p].seconds() <= t1)
                    expected.insert(p);
        }

        const auto r = attackgen::inject_attack(frames, layout, spec);
        const auto again = attackgen::inject_attack(frames, layout, spec);
        if (!(r.frames == again.frames) || r.truth.labels != again.truth.labels)
            fail(trial, "not deterministic");
        if (r.frames.size() != n) {
            fail(trial, "frame count changed");
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& before = frames[i];
            const auto& after = r.frames[i];
            if (after.timestamp_us != before.timestamp_us || after.can_id != before.can_id ||
                after.dlc != before.dlc || after.channel != before.channel)
                fail(trial, fmt::format("frame {} header changed", i));
            const bool in_range = expected.count(i) != 0;
            if (r.truth.labels[i] != (in_range ? 1 : 0))
                fail(trial, fmt::format("frame {} label {}", i, r.truth.labels[i]));
            attacked_total += in_range;
            for (std::size_t bit = 0; bit < 64; ++bit) {
                const auto mask = static_cast<std::uint8_t>(0x80u >> (bit % 8));
                const bool differs = (before.data[bit / 8] & mask) != (after.data[bit / 8] & mask);
                const bool allowed = in_range && bit >= sig.start_bit && bit < sig.start_bit + sig.bit_length;
                if (differs && !allowed)
                    fail(trial, fmt::format("frame {} bit {} changed", i, bit));
            }
        }
    }
    return verdict(failures == 0, fmt::format("1000 logs, {} attacked messages, {} violations{}", attacked_total,
                                              failures, first_failure));
}

Outcome candump_round_trip()
{
    std::mt19937_64 gen(1010);
    std::size_t failures = 0, frames_total = 0;
    const std::vector<std::string> channels{"can0", "can1", "vcan0", "slcan0"};
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<canlog::CanFrame> frames;
        std::int64_t ts = static_cast<std::int64_t>(gen() % 2'000'000'000'000ull);
        const std::size_t n = gen() % 200;
        for (std::size_t i = 0; i < n; ++i) {
            canlog::CanFrame f;
            ts += static_cast<std::int64_t>(gen() % 5'000);
            f.timestamp_us = ts;
            f.channel = channels[gen() % channels.size()];
            f.extended = gen() % 5 == 0;
            f.can_id = static_cast<std::uint32_t>(f.extended ? gen() % (canlog::kMaxCanId + 1ull) : gen() % 0x800);
            f.dlc = static_cast<std::uint8_t>(gen() % 9);
            for (std::size_t b = 0; b < f.dlc; ++b)
                f.data[b] = static_cast<std::uint8_t>(gen());
            frames.push_back(f);
        }
        frames_total += n;
        canlog::CanLog log;
        log.records = frames;
        const std::string text = canlog::write_candump(log);
        const auto parsed = canlog::parse_candump(text);
        if (!(parsed.frames() == frames) || canlog::write_candump(parsed) != text)
            ++failures;
    }
    return verdict(failures == 0, fmt::format("1000 logs, {} frames, {} mismatches", frames_total, failures));
}

Outcome syncan_counts()
{
    const char* dir = std::getenv("CANTCN_SYNCAN_DIR");
    if (!dir || !std::filesystem::is_directory(dir))
        return {Status::skip, "CANTCN_SYNCAN_DIR not set to the SynCAN data directory"};

    std::map<std::string, std::size_t> counts;
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("test_", 0) != 0 || entry.path().extension() != ".csv")
            continue;
        ++files;
        const auto log = canlog::read_log_file(entry.path().string());
        for (const auto& rec : log.signal_records())
            ++counts[rec.msg_id];
    }
    if (files == 0)
        return {Status::skip, fmt::format("no test_*.csv files in {}", dir)};
    const std::map<std::string, std::size_t> expected{{"id2", 909'869}, {"id3", 1'884'235}, {"id10", 610'294}};
    bool ok = true;
    std::string detail = fmt::format("{} files", files);
    for (const auto& [id, want] : expected) {
        const std::size_t got = counts.count(id) ? counts.at(id) : 0;
        ok = ok && got == want;
        detail += fmt::format("; {} {} (expected {})", id, got, want);
    }
    return verdict(ok, detail);
}

Outcome extended_syncan_run()
{
    const char* dir = std::getenv("CANTCN_SYNCAN_DIR");
    if (!dir || !std::filesystem::exists(std::filesystem::path(dir) / "train_1.csv") ||
        !std::filesystem::exists(std::filesystem::path(dir) / "test_plateau.csv"))
        return {Status::skip, "optional; needs CANTCN_SYNCAN_DIR with train_1.csv and test_plateau.csv"};

    const auto load_id3 = [&](const char* file) {
        const auto log = canlog::read_log_file((std::filesystem::path(dir) / file).string());
        const auto by_id = canlog::split_by_id(std::span(log.signal_records()));
        return canlog::to_series(by_id.at("id3"));
    };
    auto train_part = load_id3("train_1.csv").series;
    if (train_part.size() > 300'000)
        train_part = train_part.slice(0, 300'000);
    const auto test = load_id3("test_plateau.csv");

    const auto normalizer = sigmap::Normalizer::fit(train_part);
    const detector::TrainConfig cfg;
    const auto parts = detector::chronological_split(normalizer.apply(train_part), cfg.split);
    const auto trained = detector::train(parts.train, parts.validation, cfg);
    const auto thresholds = detector::calibrate_thresholds(trained.model, parts.validation, cfg.window);
    const auto scores = detector::score_messages(trained.model, normalizer, test.series, cfg.window);
    const auto row = evalkit::evaluate("id3", "plateau", detector::classify(scores, thresholds), test.labels);
    const bool ok = std::abs(row.metrics.accuracy - 0.8394) <= 0.05 && std::abs(row.metrics.fpr - 0.0012) <= 0.01;
    return verdict(ok, fmt::format("ID 3 plateau acc {:.4f} (0.8394 +- 0.05) fpr {:.4f} (0.0012 +- 0.01)",
                                   row.metrics.accuracy, row.metrics.fpr));
}

struct Criterion
{
    std::string id;
    std::string name;
    std::function<Outcome()> run;
    bool gating = true;
};

const std::vector<Criterion>& criteria()
{
    static const std::vector<Criterion> all{
        {"1", "causality", causality},
        {"2", "receptive-field", receptive_field},
        {"3", "gradient-check", gradient_check},
        {"4", "optimizer-oracle", optimizer_oracle},
        {"5", "overfit-sanity", overfit},
        {"6", "synthetic-end-to-end", synthetic_end_to_end},
        {"7", "calibration-consistency", calibration_consistency},
        {"8", "metrics-oracle", metrics_oracle},
        {"9", "attack-invariants", attack_invariants},
        {"10a", "candump-round-trip", candump_round_trip},
        {"10b", "syncan-test-counts", syncan_counts},
        {"11", "extended-syncan-run", extended_syncan_run, false},
    };
    return all;
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<const Criterion*> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string id = argv[i];
        const auto it = std::find_if(criteria().begin(), criteria().end(), [&](const auto& c) { return c.id == id; });
        if (it == criteria().end()) {
            std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
            return 2;
        }
        selected.push_back(&*it);
    }
    if (selected.empty())
        for (const auto& c : criteria())
            if (c.gating)
                selected.push_back(&c);

    int failed = 0, skipped = 0;
    for (const auto* c : selected) {
        Outcome out;
        try {
            out = c->run();
        } catch (const std::exception& e) {
            out = {Status::fail, fmt::format("exception: {}", e.what())};
        }
        const char* tag = out.status == Status::pass ? "PASS" : out.status == Status::fail ? "FAIL" : "SKIP";
        std::printf("%s %s %s: %s\n", tag, c->id.c_str(), c->name.c_str(), out.detail.c_str());
        std::fflush(stdout);
        failed += out.status == Status::fail;
        skipped += out.status == Status::skip;
    }
    if (failed)
        return 1;
    return skipped == static_cast<int>(selected.size()) ? 77 : 0;
}
