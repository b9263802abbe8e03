#include "softfreeze/harness/passkey.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

#include "softfreeze/errors.hpp"
#include "softfreeze/rng.hpp"

namespace softfreeze {

std::string PasskeyReport::render() const {
    std::ostringstream out;
    out << "# synthetic passkey scenario (toy model, planted token, greedy decoding)\n";
    out << "result: " << (pass ? "PASS" : "FAIL") << '\n';
    out << "target: " << passkey_token << '\n';
    out << "retrieved: " << answer << '\n';
    out << "passkey_position: " << passkey_position << '\n';
    out << "query_step: " << query_step << '\n';
    out << "active_at_query: " << (active_at_query ? "yes" : "no") << '\n';
    out << "absence_episodes: " << absence_intervals.size() << '\n';
    out << "max_absence: " << max_absence << " (bound " << absence_bound << ")\n";
    out << "absence_intervals:";
    for (const auto& [first, last] : absence_intervals) out << ' ' << first << '-' << last;
    out << '\n';
    return out.str();
}

PasskeyReport run_passkey_scenario(const RunConfig& config) {
    config.validate();
    const PasskeyConfig& pk = config.passkey;
    SessionConfig session_cfg = config.session;
    session_cfg.sampler.temperature = 0.0;
    session_cfg.record_trace = false;

    const int vocab = session_cfg.model.vocab_size;
    if (vocab < 4) {
        throw ConfigError("passkey scenario needs vocab_size >= 4");
    }
    RetrievalBias bias;
    bias.passkey_token = pk.passkey_token >= 0 ? pk.passkey_token : vocab - 1;
    bias.query_token = pk.query_token >= 0 ? pk.query_token : vocab - 2;
    bias.marker_scale = pk.marker_scale;
    bias.gain = pk.gain;
    bias.output_gain = pk.output_gain;
    bias.seed = config.seed + 5;

    ToyModel model(session_cfg.model);
    apply_retrieval_bias(model, bias);

    // Filler ids avoid both special tokens.
    std::vector<int> filler_ids;
    for (int t = 0; t < vocab; ++t) {
        if (t != bias.passkey_token && t != bias.query_token) filler_ids.push_back(t);
    }
    Rng rng(config.prompt_seed());
    auto filler = [&] {
        return filler_ids[uniform_index(rng, filler_ids.size())];
    };

    const int position = pk.passkey_position >= 0 ? pk.passkey_position : pk.prompt_len / 2;
    std::vector<int> prompt(static_cast<std::size_t>(pk.prompt_len));
    for (int& t : prompt) t = filler();
    prompt[static_cast<std::size_t>(position)] = bias.passkey_token;

    PasskeyReport report;
    report.passkey_token = bias.passkey_token;
    report.passkey_position = position;
    report.absence_bound = max_freeze_duration(session_cfg.policy);
    const int query_steps = pk.query_steps > 0 ? pk.query_steps : report.absence_bound + 1;

    Session session(session_cfg, std::move(model), prompt);
    for (int i = 0; i < pk.haystack_steps; ++i) {
        report.metrics.push_back(session.run_step(filler()));
    }
    for (int i = 0; i < query_steps; ++i) {
        report.metrics.push_back(session.run_step(bias.query_token));
    }
    report.query_step = report.metrics.back().step;
    report.answer = argmax(session.last_logits());

    // A token frozen at step f and restored at step r missed the attention
    // of steps f+1 .. r.
    std::optional<Step> frozen_since;
    for (const auto& e : session.events()) {
        if (e.position != position) continue;
        if (e.kind == EventKind::Freeze) {
            frozen_since = e.step;
        } else if (frozen_since) {
            if (e.step > *frozen_since) report.absence_intervals.emplace_back(*frozen_since + 1, e.step);
            frozen_since.reset();
        }
    }
    if (frozen_since && *frozen_since < report.query_step) {
        report.absence_intervals.emplace_back(*frozen_since + 1, report.query_step);
    }
    report.active_at_query = true;
    for (const auto& [first, last] : report.absence_intervals) {
        report.max_absence = std::max(report.max_absence, static_cast<int>(last - first + 1));
        if (first <= report.query_step && report.query_step <= last) report.active_at_query = false;
    }
    report.pass = report.active_at_query && report.answer == report.passkey_token;
    return report;
}

}  // namespace softfreeze
