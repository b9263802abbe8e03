#include "softfreeze/harness/run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "softfreeze/errors.hpp"
#include "softfreeze/numfmt.hpp"

namespace softfreeze {
namespace {

using Getter = std::function<std::string(const RunConfig&)>;
using Setter = std::function<void(RunConfig&, std::string_view)>;

struct Field {
    std::string key;
    Getter get;
    Setter set;
};

std::vector<std::string_view> split_list(std::string_view text) {
    std::vector<std::string_view> parts;
    while (!text.empty()) {
        const auto comma = text.find(',');
        std::string_view part = text.substr(0, comma);
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
        if (!part.empty()) parts.push_back(part);
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return parts;
}

bool parse_bool(std::string_view v, std::string_view key) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw InputError(std::string(key) + ": expected on|off, got '" + std::string(v) + "'");
}

std::string fmt_bool(bool v) { return v ? "on" : "off"; }

std::int64_t parse_history(std::string_view v, std::string_view key) {
    if (v == "inf" || v == "unbounded") return kUnboundedHistory;
    return parse_int(v, key);
}

std::string fmt_history(std::int64_t v) {
    return v == kUnboundedHistory ? "inf" : std::to_string(v);
}

template <typename T>
std::string join(const std::vector<T>& values, std::function<std::string(const T&)> fmt) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ',';
        out += fmt(values[i]);
    }
    return out;
}

// Field helpers ------------------------------------------------------------

template <typename Int, typename Access>
Field int_field(std::string key, Access access) {
    return {key,
            [access](const RunConfig& c) { return std::to_string(access(const_cast<RunConfig&>(c))); },
            [access, key](RunConfig& c, std::string_view v) {
                access(c) = static_cast<Int>(parse_int(v, key));
            }};
}

template <typename Access>
Field double_field(std::string key, Access access) {
    return {key,
            [access](const RunConfig& c) { return format_double(access(const_cast<RunConfig&>(c))); },
            [access, key](RunConfig& c, std::string_view v) { access(c) = parse_double(v, key); }};
}

template <typename Access>
Field bool_field(std::string key, Access access) {
    return {key,
            [access](const RunConfig& c) { return fmt_bool(access(const_cast<RunConfig&>(c))); },
            [access, key](RunConfig& c, std::string_view v) { access(c) = parse_bool(v, key); }};
}

template <typename Access>
Field path_field(std::string key, Access access) {
    return {key,
            [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)).string(); },
            [access](RunConfig& c, std::string_view v) { access(c) = std::filesystem::path(v); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back({"run.mode", [](const RunConfig& c) { return std::string(to_string(c.mode)); },
                     [](RunConfig& c, std::string_view v) { c.mode = parse_mode(v); }});
        f.push_back(int_field<int>("run.steps", [](RunConfig& c) -> int& { return c.steps; }));
        f.push_back(int_field<int>("run.prompt_len", [](RunConfig& c) -> int& { return c.prompt_len; }));
        f.push_back({"run.seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                     [](RunConfig& c, std::string_view v) {
                         c.set_seed(static_cast<std::uint64_t>(parse_int(v, "run.seed")));
                     }});
        f.push_back(int_field<int>("run.max_c", [](RunConfig& c) -> int& { return c.max_c; }));
        f.push_back(bool_field("run.timing", [](RunConfig& c) -> bool& { return c.timing; }));

        f.push_back(int_field<std::int64_t>("policy.window_size", [](RunConfig& c) -> std::int64_t& {
            return c.session.policy.window_size;
        }));
        f.push_back(double_field("policy.tau", [](RunConfig& c) -> double& { return c.session.policy.tau; }));
        f.push_back(double_field("policy.softness",
                                 [](RunConfig& c) -> double& { return c.session.policy.softness; }));
        f.push_back({"policy.history_window",
                     [](const RunConfig& c) { return fmt_history(c.session.policy.history_window); },
                     [](RunConfig& c, std::string_view v) {
                         c.session.policy.history_window = parse_history(v, "policy.history_window");
                     }});
        f.push_back(int_field<std::int64_t>("policy.pinned_prefix", [](RunConfig& c) -> std::int64_t& {
            return c.session.policy.pinned_prefix;
        }));
        f.push_back({"policy.scale_mode",
                     [](const RunConfig& c) {
                         return std::string(c.session.policy.scale_mode == ScaleMode::Raw ? "raw" : "scaled");
                     },
                     [](RunConfig& c, std::string_view v) {
                         if (v == "raw") c.session.policy.scale_mode = ScaleMode::Raw;
                         else if (v == "scaled") c.session.policy.scale_mode = ScaleMode::Scaled;
                         else throw InputError("policy.scale_mode: expected raw|scaled, got '" + std::string(v) + "'");
                     }});

        f.push_back(int_field<int>("model.d_model", [](RunConfig& c) -> int& { return c.session.model.d_model; }));
        f.push_back(int_field<int>("model.n_heads", [](RunConfig& c) -> int& { return c.session.model.n_heads; }));
        f.push_back(int_field<int>("model.n_layers", [](RunConfig& c) -> int& { return c.session.model.n_layers; }));
        f.push_back(int_field<int>("model.vocab_size",
                                   [](RunConfig& c) -> int& { return c.session.model.vocab_size; }));
        f.push_back(int_field<std::uint64_t>("model.seed",
                                             [](RunConfig& c) -> std::uint64_t& { return c.session.model.seed; }));

        f.push_back(double_field("sampler.temperature",
                                 [](RunConfig& c) -> double& { return c.session.sampler.temperature; }));
        f.push_back(int_field<int>("sampler.top_k", [](RunConfig& c) -> int& { return c.session.sampler.top_k; }));
        f.push_back(double_field("sampler.top_p", [](RunConfig& c) -> double& { return c.session.sampler.top_p; }));
        f.push_back(int_field<std::uint64_t>("sampler.seed", [](RunConfig& c) -> std::uint64_t& {
            return c.session.sampler.seed;
        }));

        f.push_back(bool_field("recovery.enabled", [](RunConfig& c) -> bool& { return c.session.recovery_enabled; }));
        f.push_back(int_field<int>("recovery.baseline_window",
                                   [](RunConfig& c) -> int& { return c.session.recovery.baseline_window; }));
        f.push_back(double_field("recovery.spike_z", [](RunConfig& c) -> double& { return c.session.recovery.spike_z; }));
        f.push_back(int_field<int>("recovery.window_reset_steps",
                                   [](RunConfig& c) -> int& { return c.session.recovery.window_reset_steps; }));
        f.push_back(int_field<int>("recovery.rr_regen_count",
                                   [](RunConfig& c) -> int& { return c.session.recovery.rr_regen_count; }));
        f.push_back(int_field<int>("recovery.cooldown_steps",
                                   [](RunConfig& c) -> int& { return c.session.recovery.cooldown_steps; }));
        f.push_back(double_field("recovery.confidence_z",
                                 [](RunConfig& c) -> double& { return c.session.recovery.confidence_z; }));
        f.push_back({"recovery.inject",
                     [](const RunConfig& c) {
                         std::string out;
                         for (const auto& [step, value] : c.session.entropy_injections) {
                             if (!out.empty()) out += ',';
                             out += std::to_string(step) + ":" + format_double(value);
                         }
                         return out;
                     },
                     [](RunConfig& c, std::string_view v) {
                         c.session.entropy_injections.clear();
                         for (auto item : split_list(v)) {
                             const auto colon = item.find(':');
                             if (colon == std::string_view::npos) {
                                 throw InputError("recovery.inject: expected step:value, got '" +
                                                  std::string(item) + "'");
                             }
                             c.session.entropy_injections[parse_int(item.substr(0, colon), "recovery.inject")] =
                                 parse_double(item.substr(colon + 1), "recovery.inject");
                         }
                     }});

        f.push_back(path_field("output.trace", [](RunConfig& c) -> std::filesystem::path& { return c.trace_path; }));
        f.push_back(path_field("output.out", [](RunConfig& c) -> std::filesystem::path& { return c.out_path; }));
        f.push_back(path_field("output.svg", [](RunConfig& c) -> std::filesystem::path& { return c.svg_path; }));
        f.push_back(path_field("output.record_trace",
                               [](RunConfig& c) -> std::filesystem::path& { return c.record_trace_path; }));
        f.push_back(path_field("output.spill",
                               [](RunConfig& c) -> std::filesystem::path& { return c.session.spill_path; }));

        f.push_back({"synth.kind", [](const RunConfig& c) { return std::string(to_string(c.synth.kind)); },
                     [](RunConfig& c, std::string_view v) { c.synth.kind = parse_trace_kind(v); }});
        f.push_back(int_field<std::int64_t>("synth.length",
                                            [](RunConfig& c) -> std::int64_t& { return c.synth.length; }));
        f.push_back(double_field("synth.hot_probability",
                                 [](RunConfig& c) -> double& { return c.synth.hot_probability; }));
        f.push_back(int_field<std::int64_t>("synth.needle_position",
                                            [](RunConfig& c) -> std::int64_t& { return c.synth.needle_position; }));
        f.push_back(int_field<std::int64_t>("synth.query_step",
                                            [](RunConfig& c) -> std::int64_t& { return c.synth.query_step; }));
        f.push_back(int_field<std::uint64_t>("synth.seed", [](RunConfig& c) -> std::uint64_t& { return c.synth.seed; }));

        f.push_back(int_field<int>("passkey.prompt_len", [](RunConfig& c) -> int& { return c.passkey.prompt_len; }));
        f.push_back(int_field<int>("passkey.passkey_position",
                                   [](RunConfig& c) -> int& { return c.passkey.passkey_position; }));
        f.push_back(int_field<int>("passkey.haystack_steps",
                                   [](RunConfig& c) -> int& { return c.passkey.haystack_steps; }));
        f.push_back(int_field<int>("passkey.passkey_token",
                                   [](RunConfig& c) -> int& { return c.passkey.passkey_token; }));
        f.push_back(int_field<int>("passkey.query_token", [](RunConfig& c) -> int& { return c.passkey.query_token; }));
        f.push_back(int_field<int>("passkey.query_steps", [](RunConfig& c) -> int& { return c.passkey.query_steps; }));
        f.push_back(double_field("passkey.marker_scale",
                                 [](RunConfig& c) -> double& { return c.passkey.marker_scale; }));
        f.push_back(double_field("passkey.gain", [](RunConfig& c) -> double& { return c.passkey.gain; }));
        f.push_back(double_field("passkey.output_gain",
                                 [](RunConfig& c) -> double& { return c.passkey.output_gain; }));

        f.push_back({"sweep.tau",
                     [](const RunConfig& c) {
                         return join<double>(c.sweep.tau, [](const double& v) { return format_double(v); });
                     },
                     [](RunConfig& c, std::string_view v) {
                         c.sweep.tau.clear();
                         for (auto item : split_list(v)) c.sweep.tau.push_back(parse_double(item, "sweep.tau"));
                     }});
        f.push_back({"sweep.window",
                     [](const RunConfig& c) {
                         return join<std::int64_t>(c.sweep.window,
                                                   [](const std::int64_t& v) { return std::to_string(v); });
                     },
                     [](RunConfig& c, std::string_view v) {
                         c.sweep.window.clear();
                         for (auto item : split_list(v)) c.sweep.window.push_back(parse_int(item, "sweep.window"));
                     }});
        f.push_back({"sweep.softness",
                     [](const RunConfig& c) {
                         return join<double>(c.sweep.softness, [](const double& v) { return format_double(v); });
                     },
                     [](RunConfig& c, std::string_view v) {
                         c.sweep.softness.clear();
                         for (auto item : split_list(v))
                             c.sweep.softness.push_back(parse_double(item, "sweep.softness"));
                     }});
        f.push_back({"sweep.history_window",
                     [](const RunConfig& c) {
                         return join<std::int64_t>(c.sweep.history_window,
                                                   [](const std::int64_t& v) { return fmt_history(v); });
                     },
                     [](RunConfig& c, std::string_view v) {
                         c.sweep.history_window.clear();
                         for (auto item : split_list(v))
                             c.sweep.history_window.push_back(parse_history(item, "sweep.history_window"));
                     }});
        f.push_back({"sweep.source",
                     [](const RunConfig& c) {
                         return std::string(c.sweep.source == SweepSource::Replay ? "replay" : "generate");
                     },
                     [](RunConfig& c, std::string_view v) {
                         if (v == "replay") c.sweep.source = SweepSource::Replay;
                         else if (v == "generate") c.sweep.source = SweepSource::Generate;
                         else throw InputError("sweep.source: expected replay|generate, got '" + std::string(v) + "'");
                     }});
        return f;
    }();
    return table;
}

const Field& find_field(std::string_view key) {
    for (const auto& f : fields()) {
        if (f.key == key) return f;
    }
    throw InputError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::Generate: return "generate";
        case Mode::Replay: return "replay";
        case Mode::Passkey: return "passkey";
        case Mode::ScheduleTable: return "schedule-table";
        case Mode::Sweep: return "sweep";
    }
    return "generate";
}

Mode parse_mode(std::string_view name) {
    for (auto m : {Mode::Generate, Mode::Replay, Mode::Passkey, Mode::ScheduleTable, Mode::Sweep}) {
        if (to_string(m) == name) return m;
    }
    throw InputError("mode: unknown mode '" + std::string(name) + "'");
}

void RunConfig::set_seed(std::uint64_t value) {
    seed = value;
    session.model.seed = value;
    session.sampler.seed = value + 1;
    synth.seed = value + 3;
}

void RunConfig::validate() const {
    session.validate();
    if (steps < 1) throw InputError("run.steps must be >= 1");
    if (prompt_len < 1) throw InputError("run.prompt_len must be >= 1");
    if (max_c < 0) throw InputError("run.max_c must be >= 0");
    if (synth.length < 1) throw InputError("synth.length must be >= 1");
    if (!(synth.hot_probability >= 0.0 && synth.hot_probability <= 1.0)) {
        throw InputError("synth.hot_probability must lie in [0, 1]");
    }
    if (passkey.prompt_len < 3) throw InputError("passkey.prompt_len must be >= 3");
    if (passkey.haystack_steps < 0) throw InputError("passkey.haystack_steps must be >= 0");
    if (passkey.passkey_position >= passkey.prompt_len) {
        throw InputError("passkey.passkey_position must lie inside the prompt");
    }
    for (double k : sweep.softness) {
        if (!(k > 0.0) || !std::isfinite(k)) throw InputError("sweep.softness values must be > 0");
    }
    for (auto w : sweep.window) {
        if (w < 1) throw InputError("sweep.window values must be >= 1");
    }
    for (auto w : sweep.history_window) {
        if (w < 1) throw InputError("sweep.history_window values must be >= 1");
    }
}

void set_config_value(RunConfig& config, std::string_view dotted_key, std::string_view value) {
    find_field(dotted_key).set(config, value);
}

std::string get_config_value(const RunConfig& config, std::string_view dotted_key) {
    return find_field(dotted_key).get(config);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& f : fields()) keys.push_back(f.key);
    return keys;
}

RunConfig parse_config(std::istream& in, RunConfig base) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InputError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    std::vector<std::pair<std::string, std::string>> assignments;
    for (const auto& [section, children] : tree) {
        if (children.empty()) {
            throw InputError("config: key '" + section + "' must be inside a section");
        }
        for (const auto& [key, node] : children) {
            assignments.emplace_back(section + "." + key, node.data());
        }
    }
    // The master seed derives the others, so it goes first.
    for (const auto& [key, value] : assignments) {
        if (key == "run.seed") set_config_value(base, key, value);
    }
    for (const auto& [key, value] : assignments) {
        if (key != "run.seed") set_config_value(base, key, value);
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("config: cannot read '" + path.string() + "'");
    }
    return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& config) {
    std::string current;
    for (const auto& f : fields()) {
        const auto dot = f.key.find('.');
        const std::string section = f.key.substr(0, dot);
        if (section != current) {
            if (!current.empty()) out << '\n';
            out << '[' << section << "]\n";
            current = section;
        }
        out << f.key.substr(dot + 1) << " = " << f.get(config) << '\n';
    }
}

}  // namespace softfreeze
