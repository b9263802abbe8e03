#include "softfreeze/harness/sweep.hpp"

#include <algorithm>
#include <future>
#include <optional>
#include <thread>
#include <ostream>

#include "softfreeze/numfmt.hpp"
#include "softfreeze/trace.hpp"

namespace softfreeze {
namespace {

template <typename T>
std::vector<T> axis(const std::vector<T>& values, T base) {
    return values.empty() ? std::vector<T>{base} : values;
}

SweepRow run_cell(const RunConfig& config, const PolicyParams& params, const ScoreTrace* trace) {
    SweepRow row;
    row.params = params;
    if (trace != nullptr) {
        const TraceStats stats = replay(*trace, params);
        row.mean_compression = stats.mean_compression;
        row.max_absence = stats.absence.max_episode;
        return row;
    }
    SessionConfig session = config.session;
    session.policy = params;
    session.spill_path.clear();
    const std::vector<int> prompt =
        synthetic_prompt(config.prompt_len, session.model.vocab_size, config.prompt_seed());
    const GenerationResult result = run_generation(session, prompt, config.steps);
    double sum = 0.0;
    for (const auto& m : result.metrics) {
        sum += m.compression;
        if (m.recovery != RecoveryAction::None) ++row.recovery_count;
    }
    row.mean_compression = sum / static_cast<double>(result.metrics.size());
    row.max_absence = summarize_absence(result.events, static_cast<std::size_t>(result.metrics.back().total))
                          .max_episode;
    return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const RunConfig& config) {
    config.validate();
    const PolicyParams& base = config.session.policy;

    std::optional<ScoreTrace> trace;
    if (config.sweep.source == SweepSource::Replay) {
        if (!config.trace_path.empty()) {
            trace = load_trace(config.trace_path);
        } else {
            SynthOptions synth = config.synth;
            synth.tau = base.tau;
            synth.prompt_len = config.prompt_len;
            trace = synth_trace(synth);
        }
    }

    std::vector<PolicyParams> cells;
    for (double tau : axis(config.sweep.tau, base.tau)) {
        for (auto window : axis(config.sweep.window, base.window_size)) {
            for (double k : axis(config.sweep.softness, base.softness)) {
                for (auto w : axis(config.sweep.history_window, base.history_window)) {
                    PolicyParams p = base;
                    p.tau = tau;
                    p.window_size = window;
                    p.softness = k;
                    p.history_window = w;
                    p.validate();
                    cells.push_back(p);
                }
            }
        }
    }

    const ScoreTrace* trace_ptr = trace ? &*trace : nullptr;
    const std::size_t batch = std::max(1U, std::thread::hardware_concurrency());
    std::vector<SweepRow> rows;
    rows.reserve(cells.size());
    for (std::size_t first = 0; first < cells.size(); first += batch) {
        std::vector<std::future<SweepRow>> pending;
        for (std::size_t i = first; i < std::min(cells.size(), first + batch); ++i) {
            pending.push_back(std::async(std::launch::async, run_cell, std::cref(config), cells[i], trace_ptr));
        }
        for (auto& f : pending) rows.push_back(f.get());
    }
    return rows;
}

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "tau,window,softness,history_window,mean_compression,max_absence,recovery_count\n";
    for (const auto& r : rows) {
        out << format_double(r.params.tau) << ',' << r.params.window_size << ','
            << format_double(r.params.softness) << ','
            << (r.params.history_window == kUnboundedHistory ? std::string("inf")
                                                             : std::to_string(r.params.history_window))
            << ',' << format_double(r.mean_compression) << ',' << r.max_absence << ',' << r.recovery_count
            << '\n';
    }
}

}  // namespace softfreeze
