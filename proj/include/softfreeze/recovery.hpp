#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "softfreeze/cache_ledger.hpp"

namespace softfreeze {

enum class RecoveryAction : std::uint8_t {
    None,
    SoftReset,    // SR: unfreeze tokens whose timer exceeds 1
    WindowReset,  // WR: unfreeze tokens frozen within the last N steps
    FullReset,    // FR: unfreeze everything and forget all detections
    Rewalk,       // RR: FR, then rewind and regenerate the last tokens
};

std::string_view to_string(RecoveryAction action);
RecoveryAction parse_recovery_action(std::string_view label);

inline constexpr double kSigmaFloor = 1e-6;

struct RecoveryConfig {
    int baseline_window = 64;
    double spike_z = 3.0;
    int window_reset_steps = 0;  // N for WR; 0 follows the policy window size
    int rr_regen_count = 8;
    int cooldown_steps = 16;
    double confidence_z = 0.0;  // z for the -max(p) detector; <= 0 disables it

    void validate() const;
    bool operator==(const RecoveryConfig&) const = default;
};

// True iff current > mean(baseline) + z * max(stddev(baseline), kSigmaFloor).
// Needs at least two baseline observations.
bool detect_spike(std::span<const double> baseline, double current, double z);

// Rolling detector. Observations that trigger are kept out of the baseline so
// a burst of anomalies cannot mask itself.
class SpikeMonitor {
public:
    SpikeMonitor(int window, double z) : window_(window), z_(z) {}
    bool observe(double value);
    const std::deque<double>& baseline() const { return baseline_; }

private:
    std::size_t window_;
    double z_;
    std::deque<double> baseline_;
};

// Escalation state. A trigger applies the next level once the cooldown since
// the previous action has elapsed; triggers inside the cooldown are
// suppressed. After cooldown_steps without any trigger the ladder returns to
// SR. Once RR has been applied further triggers are suppressed until reset.
class RecoveryLadder {
public:
    explicit RecoveryLadder(int cooldown_steps) : cooldown_(cooldown_steps) {}

    RecoveryAction on_step(Step step, bool triggered);
    int level() const { return level_; }

private:
    int cooldown_;
    int level_ = 0;
    std::optional<Step> last_trigger_;
    std::optional<Step> last_action_;
};

// Ledger-level interventions; each returns the restored positions, ascending.
std::vector<Position> soft_reset(CacheLedger& ledger);
std::vector<Position> window_reset(CacheLedger& ledger, Step step, std::int64_t recent_steps);
std::vector<Position> full_reset(CacheLedger& ledger);

}  // namespace softfreeze
