#include "softfreeze/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "softfreeze/errors.hpp"

namespace softfreeze {

double compression_ratio(std::int64_t total, std::int64_t active) {
    if (total < 1 || active < 0 || active > total) {
        throw InputError("compression_ratio needs 0 <= active <= total and total >= 1 (got " +
                         std::to_string(active) + "/" + std::to_string(total) + ")");
    }
    return 1.0 - static_cast<double>(active) / static_cast<double>(total);
}

PolicyStepResult apply_policy_step(CacheLedger& ledger, std::span<const RelevanceScore> scores,
                                   const PolicyParams& params, std::vector<CacheEvent>* events) {
    const Step step = ledger.step();
    ledger.set_protection(params.window_size, params.pinned_prefix);

    for (const auto& s : scores) {
        if (ledger.token(s.position).residency != Residency::Active) {
            throw PolicyError("score supplied for frozen position " + std::to_string(s.position));
        }
    }

    PolicyStepResult result;
    result.restored = ledger.tick_and_restore();
    if (events != nullptr) {
        for (Position p : result.restored) {
            events->push_back({step, p, EventKind::Restore,
                               static_cast<int>(step - ledger.token(p).frozen_at),
                               RestoreCause::Timer});
        }
    }

    const ProtectedSet guard = protected_set(static_cast<std::int64_t>(ledger.size()), params);
    result.flagged = flag_low_importance(scores, params.tau, guard);
    for (Position p : result.flagged) {
        const std::int64_t count = record_detection(ledger, p, step, params.history_window);
        const int duration = freeze_duration(static_cast<std::uint64_t>(count), params.softness);
        if (duration > 0) {
            ledger.freeze(p, duration);
            result.frozen.push_back(p);
            if (events != nullptr) {
                events->push_back({step, p, EventKind::Freeze, duration, RestoreCause::Timer});
            }
        }
    }
    return result;
}

StepMetrics snapshot_metrics(const CacheLedger& ledger, const PolicyStepResult& result,
                             double entropy, RecoveryAction action) {
    StepMetrics m;
    m.step = ledger.step();
    m.total = static_cast<std::int64_t>(ledger.size());
    m.active = static_cast<std::int64_t>(ledger.active_count());
    m.frozen = static_cast<std::int64_t>(ledger.frozen_count());
    m.frozen_this_step = static_cast<std::int64_t>(result.frozen.size());
    m.restored_this_step = static_cast<std::int64_t>(result.restored.size());
    m.compression = compression_ratio(m.total, m.active);
    m.entropy = entropy;
    m.recovery = action;
    return m;
}

void SessionConfig::validate() const {
    policy.validate();
    model.validate();
    sampler.validate();
    recovery.validate();
}

Session::Session(SessionConfig config, std::span<const int> prompt)
    : Session(config, ToyModel(config.model), prompt) {}

Session::Session(SessionConfig config, ToyModel model, std::span<const int> prompt)
    : config_(std::move(config)),
      model_(std::move(model)),
      ledger_(model_.config().kv_shape()),
      sampler_(config_.sampler),
      entropy_monitor_(config_.recovery.baseline_window, config_.recovery.spike_z),
      confidence_monitor_(config_.recovery.baseline_window, config_.recovery.confidence_z),
      ladder_(config_.recovery.cooldown_steps) {
    config_.validate();
    if (!(model_.config() == config_.model)) {
        throw ConfigError("session model config differs from the supplied model");
    }
    if (prompt.empty()) {
        throw InputError("prompt must contain at least one token");
    }
    if (!config_.spill_path.empty()) {
        ledger_.enable_spill(config_.spill_path);
    }
    ledger_.set_protection(config_.policy.window_size, config_.policy.pinned_prefix);
    prefill(prompt);
}

int Session::forward_and_insert(int input, std::vector<double>* queries) {
    StepOutput out = forward_step(ledger_, model_, input);
    position_tokens_.push_back(input);
    if (queries != nullptr) *queries = std::move(out.queries);
    last_logits_ = std::move(out.logits);
    return sampler_.sample(last_logits_);
}

void Session::prefill(std::span<const int> prompt) {
    // The prompt is cached without any freezing decisions.
    int next = 0;
    for (int token : prompt) {
        next = forward_and_insert(token, nullptr);
    }
    prompt_length_ = prompt.size();
    stream_.push_back(next);
    pending_token_ = next;
}

StepMetrics Session::run_step(int input) {
    const Step step = ledger_.step();
    const KvShape shape = ledger_.shape();
    ledger_.set_protection(config_.policy.window_size, config_.policy.pinned_prefix);

    if (config_.recovery_enabled) {
        checkpoints_.push_back({ledger_.size(), input, sampler_.state(), stream_.size()});
        while (checkpoints_.size() > static_cast<std::size_t>(config_.recovery.rr_regen_count)) {
            checkpoints_.pop_front();
        }
    }

    // Attention over the active set (plus the new token itself), then the
    // new token's KV joins the cache.
    StepOutput out = forward_step(ledger_, model_, input);
    position_tokens_.push_back(input);

    const std::vector<ActiveEntry> view = ledger_.active_view();
    const std::vector<RelevanceScore> scores =
        score_tokens(out.queries, shape, view, config_.policy.scale_mode);

    if (config_.record_trace) {
        TraceStep ts;
        ts.step = step;
        ts.scores.assign(ledger_.size(), 0.0);
        for (const auto& s : scores) ts.scores[static_cast<std::size_t>(s.position)] = s.score;
        for (Position p : ledger_.frozen_positions()) {
            const TokenKv kv = ledger_.kv(p);
            const ActiveEntry entry{p, kv.keys, kv.values};
            ts.scores[static_cast<std::size_t>(p)] =
                score_tokens(out.queries, shape, std::span(&entry, 1), config_.policy.scale_mode)
                    .front()
                    .score;
        }
        trace_.steps.push_back(std::move(ts));
    }

    PolicyStepResult result = apply_policy_step(ledger_, scores, config_.policy, &events_);

    const int next = sampler_.sample(out.logits);
    stream_.push_back(next);
    pending_token_ = next;
    last_logits_ = std::move(out.logits);

    double monitored = out.entropy;
    RecoveryAction action = RecoveryAction::None;
    if (config_.recovery_enabled) {
        if (auto it = config_.entropy_injections.find(step); it != config_.entropy_injections.end()) {
            monitored = it->second;
        }
        const double confidence = -*std::max_element(out.probs.begin(), out.probs.end());
        restored_by_recovery_ = 0;
        action = run_recovery(monitored, confidence);
    }

    ledger_.check_invariants();
    StepMetrics metrics = snapshot_metrics(ledger_, result, monitored, action);
    metrics.restored_this_step += restored_by_recovery_;
    ledger_.advance_step();
    return metrics;
}

void Session::record_restores(const std::vector<Position>& restored) {
    const Step step = ledger_.step();
    for (Position p : restored) {
        events_.push_back({step, p, EventKind::Restore,
                           static_cast<int>(step - ledger_.token(p).frozen_at),
                           RestoreCause::Recovery});
    }
    restored_by_recovery_ += static_cast<std::int64_t>(restored.size());
}

RecoveryAction Session::run_recovery(double entropy, double confidence) {
    bool triggered = entropy_monitor_.observe(entropy);
    if (config_.recovery.confidence_z > 0.0) {
        triggered = confidence_monitor_.observe(confidence) || triggered;
    }
    const RecoveryAction action = ladder_.on_step(ledger_.step(), triggered);
    switch (action) {
        case RecoveryAction::None:
            break;
        case RecoveryAction::SoftReset:
            record_restores(soft_reset(ledger_));
            break;
        case RecoveryAction::WindowReset: {
            const std::int64_t n = config_.recovery.window_reset_steps > 0
                                       ? config_.recovery.window_reset_steps
                                       : config_.policy.window_size;
            record_restores(window_reset(ledger_, ledger_.step(), n));
            break;
        }
        case RecoveryAction::FullReset:
            record_restores(full_reset(ledger_));
            break;
        case RecoveryAction::Rewalk:
            record_restores(full_reset(ledger_));
            rewalk();
            break;
    }
    return action;
}

void Session::rewalk() {
    if (checkpoints_.empty()) {
        return;
    }
    // Oldest checkpoint still buffered: never reaches back into the prompt.
    const Checkpoint origin = checkpoints_.front();
    const std::size_t count = checkpoints_.size();
    checkpoints_.clear();

    ledger_.truncate(origin.ledger_size);
    position_tokens_.resize(origin.ledger_size);
    stream_.resize(origin.stream_index);
    sampler_.set_state(origin.sampler_state);

    int input = origin.input;
    for (std::size_t i = 0; i < count; ++i) {
        checkpoints_.push_back({ledger_.size(), input, sampler_.state(), stream_.size()});
        const int next = forward_and_insert(input, nullptr);
        stream_.push_back(next);
        input = next;
    }
    pending_token_ = input;
}

GenerationResult run_generation(const SessionConfig& config, std::span<const int> prompt,
                                int n_steps) {
    if (n_steps < 1) {
        throw InputError("steps must be >= 1");
    }
    const auto start = std::chrono::steady_clock::now();
    Session session(config, prompt);
    GenerationResult result;
    result.metrics.reserve(static_cast<std::size_t>(n_steps));
    for (int i = 0; i < n_steps; ++i) {
        result.metrics.push_back(session.run_step());
    }
    result.tokens = session.token_stream();
    result.events = session.events();
    result.trace = session.recorded_trace();
    result.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::vector<int> synthetic_prompt(int length, int vocab_size, std::uint64_t seed) {
    if (length < 1 || vocab_size < 1) {
        throw InputError("prompt length and vocabulary must be positive");
    }
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<int> prompt(static_cast<std::size_t>(length));
    for (int& t : prompt) t = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(vocab_size)));
    return prompt;
}

std::vector<int> reference_generate(const ToyModel& model, const SamplerConfig& sampler_config,
                                    std::span<const int> prompt, int n_steps) {
    if (prompt.empty()) {
        throw InputError("prompt must contain at least one token");
    }
    Sampler sampler(sampler_config);
    std::vector<TokenKv> cache;
    std::vector<int> stream;

    auto step = [&](int token) {
        std::vector<ActiveEntry> entries;
        entries.reserve(cache.size());
        for (std::size_t p = 0; p < cache.size(); ++p) {
            entries.push_back({static_cast<Position>(p), cache[p].keys, cache[p].values});
        }
        ForwardResult fr = model.forward(token, static_cast<Position>(cache.size()), entries);
        cache.push_back({std::move(fr.keys), std::move(fr.values)});
        return sampler.sample(fr.logits);
    };

    int next = 0;
    for (int token : prompt) next = step(token);
    stream.push_back(next);
    for (int i = 0; i < n_steps; ++i) {
        next = step(next);
        stream.push_back(next);
    }
    return stream;
}

}  // namespace softfreeze
