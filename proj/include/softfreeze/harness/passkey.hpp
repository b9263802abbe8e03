#pragma once

#include <string>
#include <utility>
#include <vector>

#include "softfreeze/harness/run_config.hpp"

namespace softfreeze {

// Synthetic retrieval check on the toy model: a passkey token is planted in
// a long filler prompt, filler generation steps run under the cache policy,
// then the query token is fed for a few steps with greedy decoding.
struct PasskeyReport {
    bool pass = false;
    int passkey_token = 0;
    int answer = -1;
    Position passkey_position = 0;
    Step query_step = 0;
    bool active_at_query = false;
    // Inclusive step ranges whose attention did not see the passkey.
    std::vector<std::pair<Step, Step>> absence_intervals;
    int max_absence = 0;
    int absence_bound = 0;  // floor(sqrt(W) / k)
    std::vector<StepMetrics> metrics;

    std::string render() const;
};

PasskeyReport run_passkey_scenario(const RunConfig& config);

}  // namespace softfreeze
