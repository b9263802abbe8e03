#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "softfreeze/controller.hpp"
#include "softfreeze/errors.hpp"
#include "softfreeze/harness/cli.hpp"
#include "softfreeze/harness/passkey.hpp"
#include "softfreeze/harness/run_config.hpp"
#include "softfreeze/scheduler.hpp"
#include "softfreeze/trace.hpp"

namespace py = pybind11;
using namespace softfreeze;

namespace {

py::dict metrics_row(const StepMetrics& m) {
    py::dict row;
    row["step"] = m.step;
    row["total"] = m.total;
    row["active"] = m.active;
    row["frozen"] = m.frozen;
    row["frozen_this_step"] = m.frozen_this_step;
    row["restored_this_step"] = m.restored_this_step;
    row["compression"] = m.compression;
    row["entropy"] = m.entropy;
    row["recovery"] = std::string(to_string(m.recovery));
    return row;
}

py::list metrics_rows(const std::vector<StepMetrics>& rows) {
    py::list out;
    for (const auto& m : rows) out.append(metrics_row(m));
    return out;
}

RunConfig config_from(const py::dict& overrides) {
    RunConfig config;
    for (const auto& [key, value] : overrides) {
        set_config_value(config, py::str(key).cast<std::string>(), py::str(value).cast<std::string>());
    }
    config.validate();
    return config;
}

}  // namespace

PYBIND11_MODULE(_softfreeze, m) {
    m.doc() = "Reversible KV-cache soft freezing on a deterministic toy transformer";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<PolicyError>(m, "PolicyError", PyExc_RuntimeError);
    py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

    m.def("freeze_duration", &freeze_duration, py::arg("count"), py::arg("softness") = 2.0,
          "floor(sqrt(count) / softness), exact.");
    m.def("compression_ratio", &compression_ratio, py::arg("total"), py::arg("active"));

    py::class_<PolicyParams>(m, "PolicyParams")
        .def(py::init<>())
        .def_readwrite("window_size", &PolicyParams::window_size)
        .def_readwrite("tau", &PolicyParams::tau)
        .def_readwrite("softness", &PolicyParams::softness)
        .def_readwrite("history_window", &PolicyParams::history_window)
        .def_readwrite("pinned_prefix", &PolicyParams::pinned_prefix)
        .def("validate", &PolicyParams::validate);

    m.def(
        "config_keys", [] { return config_keys(); }, "Every dotted key accepted by the config format.");

    m.def(
        "generate",
        [](int steps, const py::dict& overrides) {
            const RunConfig config = config_from(overrides);
            const auto prompt = synthetic_prompt(config.prompt_len, config.session.model.vocab_size,
                                                 config.prompt_seed());
            const GenerationResult r = [&] {
                py::gil_scoped_release release;
                return run_generation(config.session, prompt, steps);
            }();
            py::dict out;
            out["tokens"] = r.tokens;
            out["metrics"] = metrics_rows(r.metrics);
            return out;
        },
        py::arg("steps") = 500, py::arg("config") = py::dict(),
        "Runs a generation; `config` maps dotted keys such as 'policy.tau' to values.");

    m.def(
        "replay_synthetic",
        [](const std::string& kind, std::int64_t length, const py::dict& overrides) {
            RunConfig config = config_from(overrides);
            SynthOptions synth = config.synth;
            synth.kind = parse_trace_kind(kind);
            synth.length = length;
            synth.tau = config.session.policy.tau;
            synth.prompt_len = config.prompt_len;
            const TraceStats stats = replay(synth_trace(synth), config.session.policy);
            py::dict out;
            out["metrics"] = metrics_rows(stats.rows);
            out["mean_compression"] = stats.mean_compression;
            out["max_absence"] = stats.absence.max_episode;
            return out;
        },
        py::arg("kind") = "stress", py::arg("length") = 500, py::arg("config") = py::dict());

    m.def(
        "passkey",
        [](const py::dict& overrides) {
            const PasskeyReport r = run_passkey_scenario(config_from(overrides));
            py::dict out;
            out["pass"] = r.pass;
            out["passkey_token"] = r.passkey_token;
            out["answer"] = r.answer;
            out["max_absence"] = r.max_absence;
            out["absence_bound"] = r.absence_bound;
            out["report"] = r.render();
            return out;
        },
        py::arg("config") = py::dict());

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli_main(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line front end; returns (exit_code, stdout, stderr).");
}
