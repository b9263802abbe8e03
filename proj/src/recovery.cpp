#include "softfreeze/recovery.hpp"

#include <cmath>
#include <string>

#include "softfreeze/errors.hpp"

namespace softfreeze {

std::string_view to_string(RecoveryAction action) {
    switch (action) {
        case RecoveryAction::None: return "None";
        case RecoveryAction::SoftReset: return "SR";
        case RecoveryAction::WindowReset: return "WR";
        case RecoveryAction::FullReset: return "FR";
        case RecoveryAction::Rewalk: return "RR";
    }
    return "None";
}

RecoveryAction parse_recovery_action(std::string_view label) {
    for (auto a : {RecoveryAction::None, RecoveryAction::SoftReset, RecoveryAction::WindowReset,
                   RecoveryAction::FullReset, RecoveryAction::Rewalk}) {
        if (to_string(a) == label) return a;
    }
    throw InputError("unknown recovery action '" + std::string(label) + "'");
}

void RecoveryConfig::validate() const {
    if (baseline_window < 2) throw InputError("recovery.baseline_window must be >= 2");
    if (!(spike_z > 0.0)) throw InputError("recovery.spike_z must be > 0");
    if (window_reset_steps < 0) throw InputError("recovery.window_reset_steps must be >= 0");
    if (rr_regen_count < 1) throw InputError("recovery.rr_regen_count must be >= 1");
    if (cooldown_steps < 1) throw InputError("recovery.cooldown_steps must be >= 1");
    if (std::isnan(confidence_z)) throw InputError("recovery.confidence_z must be a number");
}

bool detect_spike(std::span<const double> baseline, double current, double z) {
    if (baseline.size() < 2) {
        return false;
    }
    double mean = 0.0;
    for (double v : baseline) mean += v;
    mean /= static_cast<double>(baseline.size());
    double var = 0.0;
    for (double v : baseline) var += (v - mean) * (v - mean);
    var /= static_cast<double>(baseline.size());
    const double sigma = std::max(std::sqrt(var), kSigmaFloor);
    return current > mean + z * sigma;
}

bool SpikeMonitor::observe(double value) {
    const std::vector<double> window(baseline_.begin(), baseline_.end());
    const bool triggered = detect_spike(window, value, z_);
    if (!triggered) {
        baseline_.push_back(value);
        if (baseline_.size() > window_) baseline_.pop_front();
    }
    return triggered;
}

RecoveryAction RecoveryLadder::on_step(Step step, bool triggered) {
    if (level_ > 0 && last_trigger_ && step - *last_trigger_ > cooldown_) {
        level_ = 0;
    }
    if (!triggered) {
        return RecoveryAction::None;
    }
    last_trigger_ = step;
    if (last_action_ && step - *last_action_ < cooldown_) {
        return RecoveryAction::None;
    }
    if (level_ >= 4) {
        return RecoveryAction::None;
    }
    last_action_ = step;
    return static_cast<RecoveryAction>(++level_);
}

std::vector<Position> soft_reset(CacheLedger& ledger) {
    std::vector<Position> restored;
    for (Position p : ledger.frozen_positions()) {
        if (ledger.token(p).freeze_timer > 1) {
            ledger.restore(p);
            restored.push_back(p);
        }
    }
    return restored;
}

std::vector<Position> window_reset(CacheLedger& ledger, Step step, std::int64_t recent_steps) {
    std::vector<Position> restored;
    for (Position p : ledger.frozen_positions()) {
        if (ledger.token(p).frozen_at > step - recent_steps) {
            ledger.restore(p);
            restored.push_back(p);
        }
    }
    return restored;
}

std::vector<Position> full_reset(CacheLedger& ledger) {
    std::vector<Position> restored = ledger.frozen_positions();
    for (Position p : restored) ledger.restore(p);
    ledger.clear_detections();
    return restored;
}

}  // namespace softfreeze
