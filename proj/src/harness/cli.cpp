#include "softfreeze/harness/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <ostream>
#include <utility>

#include "softfreeze/errors.hpp"
#include "softfreeze/harness/chart.hpp"
#include "softfreeze/harness/metrics_file.hpp"
#include "softfreeze/harness/passkey.hpp"
#include "softfreeze/harness/run_config.hpp"
#include "softfreeze/harness/sweep.hpp"
#include "softfreeze/numfmt.hpp"
#include "softfreeze/trace.hpp"

namespace softfreeze {
namespace {

struct FlagBinding {
    const char* flag;
    const char* key;
    const char* help;
};

// Flag -> config key. Values are applied through the config layer so that
// flags and config files share parsing and validation.
constexpr FlagBinding kFlags[] = {
    {"--mode", "run.mode", "generate | replay | passkey | schedule-table | sweep"},
    {"--steps", "run.steps", "generation steps"},
    {"--prompt-len", "run.prompt_len", "prompt length (generate) or positions at step 0 (synthetic traces)"},
    {"--max-c", "run.max_c", "largest detection count listed by schedule-table"},
    {"--timing", "run.timing", "on|off: record wall-clock time in the metrics summary"},
    {"--window", "policy.window_size", "sliding window K"},
    {"--tau", "policy.tau", "relevance threshold"},
    {"--softness", "policy.softness", "softness k of the freeze schedule"},
    {"--history-window", "policy.history_window", "detection history window W (or inf)"},
    {"--pinned", "policy.pinned_prefix", "initial tokens that are never frozen"},
    {"--scale-mode", "policy.scale_mode", "scaled | raw relevance scores"},
    {"--d-model", "model.d_model", "model width"},
    {"--heads", "model.n_heads", "attention heads"},
    {"--layers", "model.n_layers", "decoder layers"},
    {"--vocab", "model.vocab_size", "vocabulary size"},
    {"--temperature", "sampler.temperature", "sampling temperature (0 = greedy)"},
    {"--top-k", "sampler.top_k", "top-k truncation (0 = unlimited)"},
    {"--top-p", "sampler.top_p", "nucleus truncation"},
    {"--recovery", "recovery.enabled", "on|off: entropy-guided recovery"},
    {"--inject", "recovery.inject", "step:entropy,... overrides of the monitored entropy"},
    {"--trace", "output.trace", "score trace to replay"},
    {"--out", "output.out", "metrics CSV path"},
    {"--svg", "output.svg", "chart path"},
    {"--record-trace", "output.record_trace", "write the generate-mode score trace here"},
    {"--spill", "output.spill", "spill frozen KV to this file"},
    {"--synth", "synth.kind", "stress | needle | topic_shift (replay without --trace)"},
    {"--length", "synth.length", "synthetic trace length"},
    {"--hot-probability", "synth.hot_probability", "stress trace share of hot scores"},
    {"--haystack-steps", "passkey.haystack_steps", "filler steps before the passkey query"},
    {"--passkey-prompt-len", "passkey.prompt_len", "filler prompt length of the passkey scenario"},
    {"--sweep-tau", "sweep.tau", "comma-separated tau grid"},
    {"--sweep-window", "sweep.window", "comma-separated window grid"},
    {"--sweep-softness", "sweep.softness", "comma-separated softness grid"},
    {"--sweep-history", "sweep.history_window", "comma-separated history window grid"},
    {"--sweep-source", "sweep.source", "replay | generate"},
};

void print_summary(std::ostream& out, const MetricsFile& metrics) {
    const auto& last = metrics.rows.back();
    const auto& s = metrics.summary;
    out << "steps: " << metrics.rows.size() << '\n';
    out << "total_tokens: " << last.total << '\n';
    out << "active_tokens: " << last.active << '\n';
    out << "compression: " << format_fixed(100.0 * s.final_compression, 2) << "%\n";
    out << "mean_compression: " << format_fixed(100.0 * s.mean_compression, 2) << "%\n";
    out << "max_compression: " << format_fixed(100.0 * s.max_compression, 2) << "%\n";
    out << "freezes: " << s.total_freezes << '\n';
    out << "restores: " << s.total_restores << '\n';
    out << "recovery_actions: " << s.recovery_actions << '\n';
}

void write_outputs(const RunConfig& config, const MetricsFile& metrics) {
    if (!config.out_path.empty()) save_metrics(config.out_path, metrics);
    if (!config.svg_path.empty()) emit_chart(metrics, config.svg_path);
}

int run_generate(const RunConfig& config, std::ostream& out) {
    SessionConfig session = config.session;
    session.record_trace = !config.record_trace_path.empty();
    const std::vector<int> prompt =
        synthetic_prompt(config.prompt_len, session.model.vocab_size, config.prompt_seed());
    const GenerationResult result = run_generation(session, prompt, config.steps);
    const MetricsFile metrics = make_metrics_file(
        result.metrics, config.timing ? std::optional<double>(result.wall_clock_seconds) : std::nullopt);
    write_outputs(config, metrics);
    if (session.record_trace) save_trace(config.record_trace_path, result.trace);
    out << "mode: generate\n";
    print_summary(out, metrics);
    out << "wall_clock_s: " << format_fixed(result.wall_clock_seconds, 3) << '\n';
    return kExitOk;
}

int run_replay(const RunConfig& config, std::ostream& out) {
    ScoreTrace trace;
    if (!config.trace_path.empty()) {
        trace = load_trace(config.trace_path);
    } else {
        SynthOptions synth = config.synth;
        synth.tau = config.session.policy.tau;
        synth.prompt_len = config.prompt_len;
        trace = synth_trace(synth);
    }
    if (trace.steps.empty()) {
        throw InputError("trace: no steps");
    }
    const TraceStats stats = replay(trace, config.session.policy);
    const MetricsFile metrics = make_metrics_file(stats.rows);
    write_outputs(config, metrics);
    out << "mode: replay\n";
    print_summary(out, metrics);
    out << "max_absence: " << stats.absence.max_episode << '\n';
    return kExitOk;
}

int run_passkey(const RunConfig& config, std::ostream& out) {
    const PasskeyReport report = run_passkey_scenario(config);
    out << report.render();
    if (!config.out_path.empty() || !config.svg_path.empty()) {
        write_outputs(config, make_metrics_file(report.metrics));
    }
    return kExitOk;
}

int run_schedule_table(const RunConfig& config, std::ostream& out) {
    out << "c,d\n";
    for (int c = 0; c <= config.max_c; ++c) {
        out << c << ',' << freeze_duration(static_cast<std::uint64_t>(c), config.session.policy.softness) << '\n';
    }
    return kExitOk;
}

int run_sweep_mode(const RunConfig& config, std::ostream& out) {
    const auto rows = run_sweep(config);
    write_sweep_table(out, rows);
    if (!config.out_path.empty()) {
        std::ofstream file(config.out_path, std::ios::binary);
        if (!file) throw InputError("sweep: cannot write '" + config.out_path.string() + "'");
        write_sweep_table(file, rows);
    }
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reversible KV-cache soft freezing on a deterministic toy transformer", "softfreeze"};
    std::string config_path;
    app.add_option("--config", config_path, "key-value config file; flags override it");
    std::vector<std::string> raw(std::size(kFlags));
    std::vector<CLI::Option*> options;
    std::string seed;
    auto* seed_opt = app.add_option("--seed", seed, "master seed (model, sampler, prompt, synthetic traces)");
    for (std::size_t i = 0; i < std::size(kFlags); ++i) {
        options.push_back(app.add_option(kFlags[i].flag, raw[i], kFlags[i].help));
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    }

    try {
        RunConfig config;
        if (!config_path.empty()) config = load_config(config_path);
        if (seed_opt->count() > 0) {
            try {
                set_config_value(config, "run.seed", seed);
            } catch (const InputError& e) {
                throw InputError(std::string("--seed: ") + e.what());
            }
        }
        for (std::size_t i = 0; i < std::size(kFlags); ++i) {
            if (options[i]->count() == 0) continue;
            try {
                set_config_value(config, kFlags[i].key, raw[i]);
            } catch (const InputError& e) {
                throw InputError(std::string(kFlags[i].flag) + ": " + e.what());
            }
        }
        config.validate();

        switch (config.mode) {
            case Mode::Generate: return run_generate(config, out);
            case Mode::Replay: return run_replay(config, out);
            case Mode::Passkey: return run_passkey(config, out);
            case Mode::ScheduleTable: return run_schedule_table(config, out);
            case Mode::Sweep: return run_sweep_mode(config, out);
        }
        return kExitOk;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternalError;
    }
}

}  // namespace softfreeze
