#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cantcn/canlog.hpp"
#include "cantcn/sigmap.hpp"

namespace cantcn::attackgen {

enum class AttackKind
{
    ChangeToConstant,
    ChangeToRandom,
    ModifyWithDelta,
    ModifyWithIncrement,
    ModifyWithDecrement,
    ChangeToIncrement,
    ChangeToDecrement,
};

std::string_view to_string(AttackKind kind);
AttackKind attack_kind_from_string(std::string_view name);

/// Inclusive range of 0-based message indices within the target ID.
struct IndexRange
{
    std::size_t first = 0;
    std::size_t last = 0;
};

/// Inclusive timestamp range in seconds.
struct TimeRange
{
    double start = 0.0;
    double end = 0.0;
};

struct AttackSpec
{
    AttackKind kind = AttackKind::ChangeToConstant;
    std::uint32_t msg_id = 0;
    std::size_t signal_index = 0;
    std::variant<IndexRange, TimeRange> range = IndexRange{};
    /// Constant value, delta, or per-message step depending on kind.
    double param = 0.0;
    std::uint64_t rng_seed = 0;
};

/// Labels for every frame of the log, in log order.
struct GroundTruth
{
    std::vector<std::uint8_t> labels;
    /// Attacked signal index per frame, or nullopt for benign frames.
    std::vector<std::optional<std::size_t>> attacked_signal;

    std::size_t attacked_count() const;
};

struct AttackResult
{
    std::vector<canlog::CanFrame> frames;
    GroundTruth truth;
};

/// Rewrites the target signal of the in-range messages of one ID. Frame count,
/// order, timestamps, IDs and every bit outside the target signal are left as
/// they were. Results are clamped to the signal's representable range.
AttackResult inject_attack(std::span<const canlog::CanFrame> frames, const sigmap::SignalLayout& layout,
                           const AttackSpec& spec);

/// Constant attack over the second half of the target ID's messages, holding
/// the value observed at the midpoint message.
AttackResult plateau_preset(std::span<const canlog::CanFrame> frames, const sigmap::SignalLayout& layout,
                            std::size_t signal_index);

/// Either a full AttackSpec or {"preset": "plateau", "msg_id", "signal_index"}.
struct AttackRequest
{
    AttackSpec spec;
    bool plateau = false;
};

AttackRequest attack_request_from_json(const std::string& text);
std::string attack_spec_to_json(const AttackSpec& spec);

/// CSV: index,timestamp,label,attacked_signal (empty for benign rows).
std::string ground_truth_to_csv(std::span<const canlog::CanFrame> frames, const GroundTruth& truth);
GroundTruth ground_truth_from_csv(const std::string& text);

} // namespace cantcn::attackgen
