#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "softfreeze/controller.hpp"
#include "softfreeze/model.hpp"
#include "softfreeze/trace.hpp"

namespace softfreeze {

enum class Mode { Generate, Replay, Passkey, ScheduleTable, Sweep };
std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

struct PasskeyConfig {
    int prompt_len = 1500;
    int passkey_position = -1;  // -1: middle of the prompt
    int haystack_steps = 200;   // filler steps run under the policy before the query
    int passkey_token = -1;     // -1: vocab_size - 1
    int query_token = -1;       // -1: vocab_size - 2
    int query_steps = -1;       // -1: max freeze duration + 1
    double marker_scale = 11.0;
    double gain = 1.5;
    double output_gain = 4.0;

    bool operator==(const PasskeyConfig&) const = default;
};

enum class SweepSource { Replay, Generate };

struct SweepGrid {
    std::vector<double> tau;
    std::vector<std::int64_t> window;
    std::vector<double> softness;
    std::vector<std::int64_t> history_window;
    SweepSource source = SweepSource::Replay;

    bool operator==(const SweepGrid&) const = default;
};

struct RunConfig {
    Mode mode = Mode::Generate;
    SessionConfig session;
    int steps = 500;
    int prompt_len = 14;
    std::uint64_t seed = 1234;
    int max_c = 16;
    bool timing = false;

    std::filesystem::path trace_path;
    std::filesystem::path out_path;
    std::filesystem::path svg_path;
    std::filesystem::path record_trace_path;

    SynthOptions synth;
    PasskeyConfig passkey;
    SweepGrid sweep;

    // Sets the master seed and derives the model, sampler and synth seeds.
    void set_seed(std::uint64_t value);
    std::uint64_t prompt_seed() const { return seed + 2; }

    // Throws InputError naming the offending key.
    void validate() const;
};

// Flat key-value config with one section per sub-config, e.g.
//
//   [policy]
//   tau = 0.5
//
// Unknown sections or keys are rejected.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::istream& in, RunConfig base = {});
void write_config(std::ostream& out, const RunConfig& config);

// Applies one "section.key = value" assignment.
void set_config_value(RunConfig& config, std::string_view dotted_key, std::string_view value);
std::string get_config_value(const RunConfig& config, std::string_view dotted_key);
std::vector<std::string> config_keys();

}  // namespace softfreeze
