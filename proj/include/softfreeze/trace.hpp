#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "softfreeze/controller.hpp"
#include "softfreeze/score_trace.hpp"

namespace softfreeze {

// Trace file grammar, one step per line, LF separated:
//
//   line    := comment | step
//   comment := '#' <anything up to end of line>
//   step    := INDEX ( ' ' POSITION ':' SCORE )*
//
// INDEX and POSITION are non-negative decimal integers; SCORE is a decimal
// with '.' separator (scientific notation and "inf" accepted). Steps start at
// 0 and are consecutive; step t lists positions 0 .. n0 + t - 1 in ascending
// order, where n0 is the number of pairs on the first step line.
ScoreTrace read_trace(std::istream& in);
ScoreTrace load_trace(const std::filesystem::path& path);
void write_trace(std::ostream& out, const ScoreTrace& trace);
void save_trace(const std::filesystem::path& path, const ScoreTrace& trace);

enum class TraceKind { Stress, Needle, TopicShift };
std::string_view to_string(TraceKind kind);
TraceKind parse_trace_kind(std::string_view name);

struct SynthOptions {
    TraceKind kind = TraceKind::Stress;
    std::int64_t length = 500;
    std::uint64_t seed = 7;
    std::int64_t prompt_len = 14;  // positions present at step 0
    double tau = 0.50;             // reference threshold the scores are drawn around
    // Stress: chance that a score is hot (>= tau, Pareto tail); the rest are
    // uniform in [0, tau). 0 gives the all-cold trace.
    double hot_probability = 0.2;
    // Needle: position kept at score 0 until query_step; -1 picks the
    // middle of the prompt / the last step.
    std::int64_t needle_position = -1;
    std::int64_t query_step = -1;
};

ScoreTrace synth_trace(const SynthOptions& options);

struct AbsenceSummary {
    // Completed absence episode lengths per position.
    std::vector<std::vector<int>> episodes;
    std::map<int, std::int64_t> histogram;
    int max_episode = 0;
};

AbsenceSummary summarize_absence(std::span<const CacheEvent> events, std::size_t positions);

struct TraceStats {
    std::vector<StepMetrics> rows;  // entropy is NaN: traces carry no entropy signal
    std::vector<CacheEvent> events;
    double mean_compression = 0.0;
    double min_compression = 0.0;
    double max_compression = 0.0;
    AbsenceSummary absence;
};

// Runs the cache policy against recorded scores instead of a live model. Only
// the scores of tokens active at a step are consulted.
TraceStats replay(const ScoreTrace& trace, const PolicyParams& params);

}  // namespace softfreeze
