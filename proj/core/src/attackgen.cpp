#include "cantcn/attackgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace cantcn::attackgen {

namespace {

constexpr std::array<std::pair<AttackKind, std::string_view>, 7> kKindNames{{
    {AttackKind::ChangeToConstant, "ChangeToConstant"},
    {AttackKind::ChangeToRandom, "ChangeToRandom"},
    {AttackKind::ModifyWithDelta, "ModifyWithDelta"},
    {AttackKind::ModifyWithIncrement, "ModifyWithIncrement"},
    {AttackKind::ModifyWithDecrement, "ModifyWithDecrement"},
    {AttackKind::ChangeToIncrement, "ChangeToIncrement"},
    {AttackKind::ChangeToDecrement, "ChangeToDecrement"},
}};

std::uint64_t clamp_to_raw(long double x, std::uint64_t max_value)
{
    if (!(x > 0.0L))
        return 0;
    if (x >= static_cast<long double>(max_value))
        return max_value;
    return static_cast<std::uint64_t>(std::nearbyint(x));
}

// Unbiased draw from [0, max_value].
std::uint64_t uniform_raw(std::mt19937_64& gen, std::uint64_t max_value)
{
    if (max_value == std::numeric_limits<std::uint64_t>::max())
        return gen();
    const std::uint64_t bound = max_value + 1;
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
        const std::uint64_t r = gen();
        if (r >= threshold)
            return r % bound;
    }
}

std::uint32_t parse_hex_id(const std::string& text)
{
    std::size_t pos = 0;
    const unsigned long id = std::stoul(text, &pos, 16);
    if (pos != text.size() || id > canlog::kMaxCanId)
        throw std::invalid_argument("invalid msg_id: " + text);
    return static_cast<std::uint32_t>(id);
}

} // namespace

std::string_view to_string(AttackKind kind)
{
    for (const auto& [k, name] : kKindNames)
        if (k == kind)
            return name;
    return "unknown";
}

AttackKind attack_kind_from_string(std::string_view name)
{
    for (const auto& [k, n] : kKindNames)
        if (n == name)
            return k;
    throw std::invalid_argument(fmt::format("unknown attack kind '{}'", name));
}

std::size_t GroundTruth::attacked_count() const
{
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

AttackResult inject_attack(std::span<const canlog::CanFrame> frames, const sigmap::SignalLayout& layout,
                           const AttackSpec& spec)
{
    if (layout.msg_id != spec.msg_id)
        throw std::invalid_argument(fmt::format("attack targets ID {:X} but layout describes ID {:X}", spec.msg_id,
                                                layout.msg_id));
    const sigmap::SignalSpec& target = layout.spec(spec.signal_index);
    const std::uint64_t max_value = sigmap::max_raw_value(target);

    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < frames.size(); ++i)
        if (frames[i].can_id == spec.msg_id)
            positions.push_back(i);

    std::vector<std::size_t> in_range;
    if (const auto* r = std::get_if<IndexRange>(&spec.range)) {
        if (r->first > r->last)
            throw std::invalid_argument("empty attack index range");
        for (std::size_t k = r->first; k <= r->last && k < positions.size(); ++k)
            in_range.push_back(positions[k]);
    } else {
        const auto& t = std::get<TimeRange>(spec.range);
        if (!(t.start <= t.end))
            throw std::invalid_argument("empty attack time range");
        for (std::size_t p : positions) {
            const double ts = frames[p].seconds();
            if (ts >= t.start && ts <= t.end)
                in_range.push_back(p);
        }
    }
    if (in_range.empty())
        throw std::invalid_argument(fmt::format("attack range selects no messages of ID {:X}", spec.msg_id));

    if (spec.kind == AttackKind::ChangeToConstant && (spec.param < 0.0 || spec.param > static_cast<double>(max_value)))
        throw std::out_of_range(fmt::format("constant {} outside signal range [0, {}]", spec.param, max_value));

    AttackResult result;
    result.frames.assign(frames.begin(), frames.end());
    result.truth.labels.assign(frames.size(), 0);
    result.truth.attacked_signal.assign(frames.size(), std::nullopt);

    std::mt19937_64 gen(spec.rng_seed);
    const auto base = static_cast<long double>(sigmap::decode_raw(frames[in_range.front()].payload(), target));
    const long double step = spec.param;

    for (std::size_t n = 0; n < in_range.size(); ++n) {
        const std::size_t p = in_range[n];
        const auto i = static_cast<long double>(n + 1);
        const auto original = static_cast<long double>(sigmap::decode_raw(frames[p].payload(), target));

        std::uint64_t value = 0;
        switch (spec.kind) {
        case AttackKind::ChangeToConstant:
            value = clamp_to_raw(step, max_value);
            break;
        case AttackKind::ChangeToRandom:
            value = uniform_raw(gen, max_value);
            break;
        case AttackKind::ModifyWithDelta:
            value = clamp_to_raw(original + step, max_value);
            break;
        case AttackKind::ModifyWithIncrement:
            value = clamp_to_raw(original + i * step, max_value);
            break;
        case AttackKind::ModifyWithDecrement:
            value = clamp_to_raw(original - i * step, max_value);
            break;
        case AttackKind::ChangeToIncrement:
            value = clamp_to_raw(base + i * step, max_value);
            break;
        case AttackKind::ChangeToDecrement:
            value = clamp_to_raw(base - i * step, max_value);
            break;
        }

        sigmap::encode_signal(result.frames[p].payload(), target, value);
        result.truth.labels[p] = 1;
        result.truth.attacked_signal[p] = spec.signal_index;
    }
    return result;
}

AttackResult plateau_preset(std::span<const canlog::CanFrame> frames, const sigmap::SignalLayout& layout,
                            std::size_t signal_index)
{
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < frames.size(); ++i)
        if (frames[i].can_id == layout.msg_id)
            positions.push_back(i);
    if (positions.empty())
        throw std::invalid_argument(fmt::format("ID {:X} does not occur in the log", layout.msg_id));

    // Messages ceil(N/2)+1 .. N, 1-based; the held value is message ceil(N/2).
    const std::size_t n = positions.size();
    const std::size_t half = (n + 1) / 2;
    if (half >= n)
        throw std::invalid_argument(fmt::format("ID {:X} has {} message(s); plateau range is empty", layout.msg_id, n));

    const auto& target = layout.spec(signal_index);
    AttackSpec spec;
    spec.kind = AttackKind::ChangeToConstant;
    spec.msg_id = layout.msg_id;
    spec.signal_index = signal_index;
    spec.range = IndexRange{half, n - 1};
    spec.param = static_cast<double>(sigmap::decode_raw(frames[positions[half - 1]].payload(), target));
    return inject_attack(frames, layout, spec);
}

AttackRequest attack_request_from_json(const std::string& text)
{
    const auto doc = nlohmann::json::parse(text);
    AttackRequest req;
    req.spec.msg_id = parse_hex_id(doc.at("msg_id").get<std::string>());
    req.spec.signal_index = doc.at("signal_index").get<std::size_t>();

    if (doc.contains("preset")) {
        const auto preset = doc.at("preset").get<std::string>();
        if (preset != "plateau")
            throw std::invalid_argument("unknown attack preset: " + preset);
        req.plateau = true;
        return req;
    }

    req.spec.kind = attack_kind_from_string(doc.at("kind").get<std::string>());
    req.spec.param = doc.value("param", 0.0);
    req.spec.rng_seed = doc.value("rng_seed", std::uint64_t{0});
    if (doc.contains("index_range")) {
        const auto& r = doc.at("index_range");
        req.spec.range = IndexRange{r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()};
    } else if (doc.contains("time_range")) {
        const auto& r = doc.at("time_range");
        req.spec.range = TimeRange{r.at(0).get<double>(), r.at(1).get<double>()};
    } else {
        throw std::invalid_argument("attack spec needs index_range or time_range");
    }
    return req;
}

std::string attack_spec_to_json(const AttackSpec& spec)
{
    nlohmann::ordered_json doc;
    doc["kind"] = std::string(to_string(spec.kind));
    doc["msg_id"] = fmt::format("{:X}", spec.msg_id);
    doc["signal_index"] = spec.signal_index;
    if (const auto* r = std::get_if<IndexRange>(&spec.range))
        doc["index_range"] = {r->first, r->last};
    else
        doc["time_range"] = {std::get<TimeRange>(spec.range).start, std::get<TimeRange>(spec.range).end};
    doc["param"] = spec.param;
    doc["rng_seed"] = spec.rng_seed;
    return doc.dump(2) + "\n";
}

std::string ground_truth_to_csv(std::span<const canlog::CanFrame> frames, const GroundTruth& truth)
{
    if (frames.size() != truth.labels.size())
        throw std::invalid_argument("ground truth and log lengths differ");
    std::string out = "index,timestamp,label,attacked_signal\n";
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto ts = frames[i].timestamp_us;
        out += fmt::format("{},{}.{:06},{},", i, ts / 1'000'000, ts % 1'000'000, truth.labels[i]);
        if (truth.attacked_signal[i])
            out += std::to_string(*truth.attacked_signal[i]);
        out += '\n';
    }
    return out;
}

GroundTruth ground_truth_from_csv(const std::string& text)
{
    GroundTruth truth;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty())
            continue;
        std::istringstream row(line);
        std::string index, ts, label, signal;
        std::getline(row, index, ',');
        std::getline(row, ts, ',');
        std::getline(row, label, ',');
        std::getline(row, signal, ',');
        if (label != "0" && label != "1")
            throw canlog::ParseError(line_no, line, "invalid label");
        if (std::stoull(index) != truth.labels.size())
            throw canlog::ParseError(line_no, line, "non-consecutive index");
        truth.labels.push_back(static_cast<std::uint8_t>(label[0] - '0'));
        if (!signal.empty() && signal != "\r")
            truth.attacked_signal.emplace_back(std::stoull(signal));
        else
            truth.attacked_signal.emplace_back(std::nullopt);
    }
    return truth;
}

} // namespace cantcn::attackgen
