#pragma once

#include <cstdint>
#include <limits>

#include "softfreeze/cache_ledger.hpp"
#include "softfreeze/relevance.hpp"

namespace softfreeze {

// history_window sentinel meaning "count every detection ever made".
inline constexpr std::int64_t kUnboundedHistory = std::numeric_limits<std::int64_t>::max();

struct PolicyParams {
    std::int64_t window_size = 32;
    double tau = 0.50;
    double softness = 2.0;
    std::int64_t history_window = 128;
    std::int64_t pinned_prefix = 0;
    ScaleMode scale_mode = ScaleMode::Scaled;

    // Throws InputError naming the first offending field.
    void validate() const;
    bool operator==(const PolicyParams&) const = default;
};

std::uint64_t integer_sqrt(std::uint64_t n);

// floor(sqrt(c) / softness), exact for every c the type can hold.
int freeze_duration(std::uint64_t count, double softness);

// Largest duration the sliding count can ever produce: floor(sqrt(W) / k).
int max_freeze_duration(const PolicyParams& params);

// Detections logged at steps in (step - history_window, step].
std::int64_t detection_count(const TokenRecord& record, Step step, std::int64_t history_window);

// Logs a detection for `position` at `step` and returns the windowed count.
// Entries that can no longer fall inside the window are pruned.
std::int64_t record_detection(CacheLedger& ledger, Position position, Step step,
                              std::int64_t history_window);

ProtectedSet protected_set(std::int64_t total_tokens, const PolicyParams& params);

}  // namespace softfreeze
