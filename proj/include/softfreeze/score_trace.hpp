#pragma once

#include <cstdint>
#include <vector>

#include "softfreeze/cache_ledger.hpp"

namespace softfreeze {

// Relevance scores for every position existing at one step, indexed by
// position (scores.size() == number of tokens at that step).
struct TraceStep {
    Step step = 0;
    std::vector<double> scores;
    bool operator==(const TraceStep&) const = default;
};

// Step t covers positions 0 .. initial_tokens() + t - 1; each step adds one token.
struct ScoreTrace {
    std::vector<TraceStep> steps;

    std::int64_t initial_tokens() const {
        return steps.empty() ? 0 : static_cast<std::int64_t>(steps.front().scores.size());
    }
    // Throws InputError naming the first malformed step/position.
    void validate() const;
    bool operator==(const ScoreTrace&) const = default;
};

}  // namespace softfreeze
