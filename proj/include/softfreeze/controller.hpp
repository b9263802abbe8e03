#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "softfreeze/cache_ledger.hpp"
#include "softfreeze/model.hpp"
#include "softfreeze/recovery.hpp"
#include "softfreeze/relevance.hpp"
#include "softfreeze/sampler.hpp"
#include "softfreeze/scheduler.hpp"
#include "softfreeze/score_trace.hpp"

namespace softfreeze {

enum class EventKind : std::uint8_t { Freeze, Restore };
enum class RestoreCause : std::uint8_t { Timer, Recovery };

struct CacheEvent {
    Step step;
    Position position;
    EventKind kind;
    // Freeze: assigned duration. Restore: steps the token was absent.
    int duration;
    RestoreCause cause = RestoreCause::Timer;
    bool operator==(const CacheEvent&) const = default;
};

struct StepMetrics {
    Step step = 0;
    std::int64_t total = 0;
    std::int64_t active = 0;
    std::int64_t frozen = 0;
    std::int64_t frozen_this_step = 0;
    std::int64_t restored_this_step = 0;
    double compression = 0.0;
    double entropy = 0.0;  // NaN when the source has no entropy signal
    RecoveryAction recovery = RecoveryAction::None;
};

// 1 - active / total.
double compression_ratio(std::int64_t total, std::int64_t active);

struct PolicyStepResult {
    std::vector<Position> flagged;
    std::vector<Position> frozen;
    std::vector<Position> restored;
};

// Cache-policy part of one generation step at ledger.step(), given scores of
// the tokens that took part in this step's attention:
//   1. timers of tokens frozen on earlier steps tick; expired ones return;
//   2. flagged unprotected tokens log a detection, d = floor(sqrt(c) / k);
//   3. tokens with d > 0 are frozen for d steps.
// A token frozen at step t therefore misses the attention of steps t+1 .. t+d.
PolicyStepResult apply_policy_step(CacheLedger& ledger, std::span<const RelevanceScore> scores,
                                   const PolicyParams& params, std::vector<CacheEvent>* events);

StepMetrics snapshot_metrics(const CacheLedger& ledger, const PolicyStepResult& result,
                             double entropy, RecoveryAction action);

struct SessionConfig {
    PolicyParams policy;
    ModelConfig model;
    SamplerConfig sampler;
    RecoveryConfig recovery;
    bool recovery_enabled = false;
    // Non-empty: frozen KV payloads live in this file instead of memory.
    std::filesystem::path spill_path;
    // Keep a ScoreTrace of every step (frozen tokens scored too).
    bool record_trace = false;
    // Diagnostic hook: the monitored entropy at these steps is replaced.
    std::map<Step, double> entropy_injections;

    void validate() const;
};

// One generation session: prefill, then one run_step per generated token.
class Session {
public:
    Session(SessionConfig config, std::span<const int> prompt);
    Session(SessionConfig config, ToyModel model, std::span<const int> prompt);

    // Feeds `input` (normally the previously sampled token) through the
    // model and applies the cache policy and recovery for this step.
    StepMetrics run_step(int input);
    StepMetrics run_step() { return run_step(pending_token_); }

    int pending_token() const { return pending_token_; }
    // Sampled ids: the prefill output followed by one id per step.
    const std::vector<int>& token_stream() const { return stream_; }
    // Token id at each ledger position.
    const std::vector<int>& position_tokens() const { return position_tokens_; }
    const CacheLedger& ledger() const { return ledger_; }
    const ToyModel& model() const { return model_; }
    const std::vector<CacheEvent>& events() const { return events_; }
    const ScoreTrace& recorded_trace() const { return trace_; }
    const std::vector<double>& last_logits() const { return last_logits_; }
    std::size_t prompt_length() const { return prompt_length_; }

private:
    struct Checkpoint {
        std::size_t ledger_size;
        int input;
        Rng sampler_state;
        std::size_t stream_index;
    };

    void prefill(std::span<const int> prompt);
    int forward_and_insert(int input, std::vector<double>* queries);
    RecoveryAction run_recovery(double entropy, double confidence);
    void rewalk();
    void record_restores(const std::vector<Position>& restored);

    SessionConfig config_;
    ToyModel model_;
    CacheLedger ledger_;
    Sampler sampler_;
    SpikeMonitor entropy_monitor_;
    SpikeMonitor confidence_monitor_;
    RecoveryLadder ladder_;
    std::deque<Checkpoint> checkpoints_;
    std::vector<int> stream_;
    std::vector<int> position_tokens_;
    std::vector<CacheEvent> events_;
    ScoreTrace trace_;
    std::vector<double> last_logits_;
    std::size_t prompt_length_ = 0;
    int pending_token_ = 0;
    std::int64_t restored_by_recovery_ = 0;
};

struct GenerationResult {
    std::vector<StepMetrics> metrics;
    std::vector<int> tokens;
    std::vector<CacheEvent> events;
    ScoreTrace trace;
    double wall_clock_seconds = 0.0;
};

GenerationResult run_generation(const SessionConfig& config, std::span<const int> prompt,
                                int n_steps);

// Deterministic prompt of `length` ids drawn from the model vocabulary.
std::vector<int> synthetic_prompt(int length, int vocab_size, std::uint64_t seed);

// Generation with a plain append-only KV list and no cache policy; the
// reference that a disabled policy must reproduce token for token.
std::vector<int> reference_generate(const ToyModel& model, const SamplerConfig& sampler,
                                    std::span<const int> prompt, int n_steps);

}  // namespace softfreeze
