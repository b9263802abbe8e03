#include "softfreeze/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "softfreeze/errors.hpp"
#include "softfreeze/numfmt.hpp"
#include "softfreeze/rng.hpp"

namespace softfreeze {
namespace {

std::string step_label(std::int64_t step) { return "trace step " + std::to_string(step); }

}  // namespace

void ScoreTrace::validate() const {
    const std::int64_t n0 = initial_tokens();
    if (!steps.empty() && n0 < 1) {
        throw InputError("trace step 0: no positions");
    }
    for (std::size_t t = 0; t < steps.size(); ++t) {
        const TraceStep& s = steps[t];
        if (s.step != static_cast<Step>(t)) {
            throw InputError(step_label(s.step) + ": expected step index " + std::to_string(t));
        }
        const auto expected = static_cast<std::size_t>(n0) + t;
        if (s.scores.size() != expected) {
            throw InputError(step_label(s.step) + ": missing position " +
                             std::to_string(std::min(s.scores.size(), expected)));
        }
        for (std::size_t p = 0; p < s.scores.size(); ++p) {
            if (!(s.scores[p] >= 0.0)) {
                throw InputError(step_label(s.step) + ", position " + std::to_string(p) +
                                 ": score must be >= 0");
            }
        }
    }
}

ScoreTrace read_trace(std::istream& in) {
    ScoreTrace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream fields(line);
        std::string field;
        fields >> field;
        TraceStep step;
        step.step = parse_int(field, "trace line " + std::to_string(line_no) + " step index");
        const std::string where = step_label(step.step);
        while (fields >> field) {
            const auto colon = field.find(':');
            if (colon == std::string::npos) {
                throw InputError(where + ": expected position:score, got '" + field + "'");
            }
            const long long pos = parse_int(std::string_view(field).substr(0, colon), where + " position");
            const auto expected = static_cast<long long>(step.scores.size());
            if (pos > expected) {
                throw InputError(where + ": missing position " + std::to_string(expected));
            }
            if (pos < expected) {
                throw InputError(where + ", position " + std::to_string(pos) +
                                 ": out of order or duplicated");
            }
            step.scores.push_back(parse_double(std::string_view(field).substr(colon + 1),
                                               where + ", position " + std::to_string(pos)));
        }
        trace.steps.push_back(std::move(step));
    }
    trace.validate();
    return trace;
}

ScoreTrace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("trace: cannot read '" + path.string() + "'");
    }
    return read_trace(in);
}

void write_trace(std::ostream& out, const ScoreTrace& trace) {
    out << "# softfreeze score trace: step then position:score pairs\n";
    for (const auto& s : trace.steps) {
        std::string line = std::to_string(s.step);
        for (std::size_t p = 0; p < s.scores.size(); ++p) {
            line += ' ';
            line += std::to_string(p);
            line += ':';
            line += format_double(s.scores[p]);
        }
        line += '\n';
        out << line;
    }
}

void save_trace(const std::filesystem::path& path, const ScoreTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("trace: cannot write '" + path.string() + "'");
    }
    write_trace(out, trace);
}

std::string_view to_string(TraceKind kind) {
    switch (kind) {
        case TraceKind::Stress: return "stress";
        case TraceKind::Needle: return "needle";
        case TraceKind::TopicShift: return "topic_shift";
    }
    return "stress";
}

TraceKind parse_trace_kind(std::string_view name) {
    for (auto k : {TraceKind::Stress, TraceKind::Needle, TraceKind::TopicShift}) {
        if (to_string(k) == name) return k;
    }
    throw InputError("unknown trace kind '" + std::string(name) + "'");
}

ScoreTrace synth_trace(const SynthOptions& o) {
    if (o.length < 1) throw InputError("synth length must be >= 1");
    if (o.prompt_len < 1) throw InputError("synth prompt_len must be >= 1");
    const double tau = (o.tau > 0.0 && std::isfinite(o.tau)) ? o.tau : 0.5;
    Rng rng(o.seed);

    // Pareto(alpha = 1.5) tail above tau.
    auto hot = [&] { return tau * std::pow(1.0 - uniform01(rng), -1.0 / 1.5); };
    auto cold = [&] { return tau * uniform01(rng); };

    const std::int64_t needle = o.needle_position >= 0 ? o.needle_position : o.prompt_len / 2;
    const std::int64_t query = o.query_step >= 0 ? o.query_step : o.length - 1;
    const std::int64_t flip = o.length / 2;
    if (o.kind == TraceKind::Needle && needle >= o.prompt_len) {
        throw InputError("needle_position must lie inside the prompt");
    }

    ScoreTrace trace;
    trace.steps.reserve(static_cast<std::size_t>(o.length));
    for (std::int64_t t = 0; t < o.length; ++t) {
        TraceStep s;
        s.step = t;
        s.scores.resize(static_cast<std::size_t>(o.prompt_len + t));
        for (std::size_t p = 0; p < s.scores.size(); ++p) {
            double v = 0.0;
            switch (o.kind) {
                case TraceKind::Stress:
                    v = uniform01(rng) < o.hot_probability ? hot() : cold();
                    break;
                case TraceKind::Needle:
                    if (static_cast<std::int64_t>(p) == needle) {
                        v = t >= query ? 10.0 * tau : 0.0;
                    } else {
                        v = hot();
                    }
                    break;
                case TraceKind::TopicShift: {
                    const bool even = p % 2 == 0;
                    const bool is_cold = (t < flip) ? even : !even;
                    v = is_cold ? 0.5 * cold() : hot();
                    break;
                }
            }
            s.scores[p] = v;
        }
        trace.steps.push_back(std::move(s));
    }
    return trace;
}

AbsenceSummary summarize_absence(std::span<const CacheEvent> events, std::size_t positions) {
    AbsenceSummary summary;
    summary.episodes.resize(positions);
    for (const auto& e : events) {
        if (e.kind != EventKind::Restore) continue;
        if (e.position >= 0 && static_cast<std::size_t>(e.position) < positions) {
            summary.episodes[static_cast<std::size_t>(e.position)].push_back(e.duration);
        }
        ++summary.histogram[e.duration];
        summary.max_episode = std::max(summary.max_episode, e.duration);
    }
    return summary;
}

TraceStats replay(const ScoreTrace& trace, const PolicyParams& params) {
    params.validate();
    trace.validate();
    TraceStats stats;
    if (trace.steps.empty()) return stats;

    CacheLedger ledger{KvShape{}};
    for (std::int64_t p = 0; p + 1 < trace.initial_tokens(); ++p) {
        ledger.insert_token({});
    }

    std::vector<RelevanceScore> scores;
    double sum = 0.0;
    stats.min_compression = std::numeric_limits<double>::infinity();
    for (const auto& s : trace.steps) {
        ledger.insert_token({});
        scores.clear();
        for (Position p : ledger.active_positions()) {
            scores.push_back({p, s.scores[static_cast<std::size_t>(p)]});
        }
        const PolicyStepResult result = apply_policy_step(ledger, scores, params, &stats.events);
        ledger.check_invariants();
        StepMetrics row = snapshot_metrics(ledger, result, std::numeric_limits<double>::quiet_NaN(),
                                           RecoveryAction::None);
        sum += row.compression;
        stats.min_compression = std::min(stats.min_compression, row.compression);
        stats.max_compression = std::max(stats.max_compression, row.compression);
        stats.rows.push_back(row);
        ledger.advance_step();
    }
    stats.mean_compression = sum / static_cast<double>(stats.rows.size());
    stats.absence = summarize_absence(stats.events, ledger.size());
    return stats;
}

}  // namespace softfreeze
