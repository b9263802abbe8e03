#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "softfreeze/errors.hpp"
#include "softfreeze/harness/chart.hpp"
#include "softfreeze/harness/cli.hpp"
#include "softfreeze/harness/metrics_file.hpp"
#include "softfreeze/harness/run_config.hpp"
#include "softfreeze/harness/sweep.hpp"
#include "softfreeze/trace.hpp"

using namespace softfreeze;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("softfreeze_test_" + name); }

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<StepMetrics> rows_with_active(const std::vector<std::int64_t>& active) {
    std::vector<StepMetrics> rows;
    for (std::size_t i = 0; i < active.size(); ++i) {
        StepMetrics m;
        m.step = static_cast<Step>(i);
        m.total = 20 + static_cast<std::int64_t>(i);
        m.active = active[i];
        m.frozen = m.total - m.active;
        m.compression = compression_ratio(m.total, m.active);
        rows.push_back(m);
    }
    return rows;
}

}  // namespace

TEST(RunConfig, RoundTripIsIdentical) {
    RunConfig c;
    c.mode = Mode::Replay;
    c.set_seed(77);
    c.session.policy.tau = std::numeric_limits<double>::infinity();
    c.session.policy.history_window = kUnboundedHistory;
    c.session.policy.scale_mode = ScaleMode::Raw;
    c.session.sampler.top_p = 0.123456789;
    c.session.recovery_enabled = true;
    c.session.entropy_injections = {{5, 2.5}, {9, 100.0}};
    c.sweep.tau = {0.1, 0.5};
    c.sweep.window = {8, 16};
    c.synth.kind = TraceKind::Needle;
    c.out_path = "out.csv";
    std::stringstream ss;
    write_config(ss, c);
    const std::string first = ss.str();
    const RunConfig back = parse_config(ss);
    std::stringstream again;
    write_config(again, back);
    EXPECT_EQ(first, again.str());
    for (const auto& key : config_keys()) EXPECT_EQ(get_config_value(c, key), get_config_value(back, key)) << key;
}

TEST(RunConfig, SeedDerivesSubSeeds) {
    RunConfig c;
    c.set_seed(10);
    EXPECT_EQ(c.session.model.seed, 10U);
    EXPECT_EQ(c.session.sampler.seed, 11U);
    EXPECT_EQ(c.prompt_seed(), 12U);
    EXPECT_EQ(c.synth.seed, 13U);
}

TEST(RunConfig, UnknownKeysAndBadValuesNameTheKey) {
    std::istringstream unknown("[policy]\nbogus = 1\n");
    try {
        parse_config(unknown);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("policy.bogus"), std::string::npos);
    }
    std::istringstream bad("[policy]\ntau = abc\n");
    try {
        parse_config(bad);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("policy.tau"), std::string::npos);
    }
    RunConfig c;
    c.session.policy.softness = -2;
    EXPECT_THROW(c.validate(), InputError);
}

TEST(MetricsFile, WriteReadRoundTrip) {
    auto rows = rows_with_active({20, 18, 19, 15});
    rows[2].recovery = RecoveryAction::FullReset;
    rows[1].entropy = 2.718281828459045;
    const MetricsFile file = make_metrics_file(rows, 1.25);
    std::stringstream ss;
    write_metrics(ss, file);
    const std::string text = ss.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), kMetricsHeader);
    EXPECT_NE(text.find("# wall_clock_s,1.25"), std::string::npos);
    const MetricsFile back = read_metrics(ss);
    ASSERT_EQ(back.rows.size(), 4U);
    EXPECT_EQ(back.rows[2].recovery, RecoveryAction::FullReset);
    EXPECT_EQ(back.rows[1].entropy, rows[1].entropy);
    EXPECT_EQ(back.summary.final_compression, compression_ratio(23, 15));
    EXPECT_EQ(back.summary.wall_clock_seconds, 1.25);
}

TEST(MetricsFile, NoWallClockWithoutTiming) {
    std::stringstream ss;
    write_metrics(ss, make_metrics_file(rows_with_active({20, 19})));
    EXPECT_EQ(ss.str().find("wall_clock"), std::string::npos);
}

TEST(Chart, TwoPolylinesAndDeterministic) {
    std::vector<std::int64_t> active;
    for (int i = 0; i < 500; ++i) active.push_back(20 + (i % 7));
    const MetricsFile m = make_metrics_file(rows_with_active(active));
    const std::string svg = render_chart(m);
    std::size_t count = 0;
    for (std::size_t at = svg.find("<polyline"); at != std::string::npos; at = svg.find("<polyline", at + 1)) ++count;
    EXPECT_EQ(count, 2U);
    EXPECT_EQ(svg, render_chart(m));
    EXPECT_THROW(render_chart(make_metrics_file(rows_with_active({3}))), InputError);
}

TEST(Chart, ConstantActiveIsHorizontal) {
    const std::string svg = render_chart(make_metrics_file(rows_with_active(std::vector<std::int64_t>(50, 12))));
    const std::regex series("class=\"series-active\"[^>]*points=\"([^\"]*)\"");
    std::smatch match;
    ASSERT_TRUE(std::regex_search(svg, match, series));
    std::istringstream points(match[1].str());
    std::set<std::string> ys;
    std::string pair;
    while (points >> pair) ys.insert(pair.substr(pair.find(',') + 1));
    EXPECT_EQ(ys.size(), 1U);
}

TEST(Chart, LocalExtrema) {
    const std::vector<std::int64_t> zigzag = {1, 3, 3, 2, 2, 2, 5, 4};
    const Extrema e = count_local_extrema(zigzag);
    EXPECT_EQ(e.maxima, 2);
    EXPECT_EQ(e.minima, 1);
    const std::vector<std::int64_t> stairs = {1, 1, 2, 2, 3};
    EXPECT_EQ(count_local_extrema(stairs).minima, 0);
    EXPECT_EQ(count_local_extrema(stairs).maxima, 0);
}

TEST(Chart, StressTraceOscillates) {
    SynthOptions o;
    o.length = 500;
    const TraceStats stats = replay(synth_trace(o), PolicyParams{});
    std::vector<std::int64_t> active;
    for (const auto& r : stats.rows) active.push_back(r.active);
    const Extrema e = count_local_extrema(active, 50);
    EXPECT_GE(e.minima, 1);
    EXPECT_GE(e.maxima, 1);
}

TEST(Sweep, GridOrderAndMonotoneSoftness) {
    RunConfig c;
    c.sweep.softness = {1.0, 2.0};
    c.sweep.tau = {0.0, 0.5};
    const auto rows = run_sweep(c);
    ASSERT_EQ(rows.size(), 4U);
    EXPECT_EQ(rows[0].params.tau, 0.0);
    EXPECT_EQ(rows[0].params.softness, 1.0);
    EXPECT_EQ(rows[1].params.softness, 2.0);
    EXPECT_EQ(rows[0].mean_compression, 0.0);
    EXPECT_GE(rows[2].mean_compression, rows[3].mean_compression);
    std::ostringstream table;
    write_sweep_table(table, rows);
    EXPECT_EQ(table.str().substr(0, table.str().find('\n')),
              "tau,window,softness,history_window,mean_compression,max_absence,recovery_count");
}

TEST(Sweep, SingletonMatchesDirectReplay) {
    RunConfig c;
    c.sweep.tau = {0.5};
    const auto rows = run_sweep(c);
    ASSERT_EQ(rows.size(), 1U);
    SynthOptions synth = c.synth;
    synth.prompt_len = c.prompt_len;
    const TraceStats direct = replay(synth_trace(synth), c.session.policy);
    EXPECT_EQ(rows[0].mean_compression, direct.mean_compression);
    EXPECT_EQ(rows[0].max_absence, direct.absence.max_episode);
}

TEST(Cli, ScheduleTable) {
    const auto r = cli({"--mode", "schedule-table", "--max-c", "16", "--softness", "2"});
    EXPECT_EQ(r.code, 0);
    for (const char* row : {"\n4,1\n", "\n9,1\n", "\n16,2\n", "\n1,0\n"}) EXPECT_NE(r.out.find(row), std::string::npos) << row;
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(cli({"--help"}).code, 0);
    const auto unknown = cli({"--frobnicate", "1"});
    EXPECT_EQ(unknown.code, 1);
    EXPECT_FALSE(unknown.err.empty());
    const auto bad = cli({"--tau", "abc", "--mode", "schedule-table"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("--tau"), std::string::npos);
    EXPECT_EQ(cli({"--mode", "bogus"}).code, 1);
    EXPECT_EQ(cli({"--mode", "replay", "--trace", temp("missing.trace").string()}).code, 1);
    EXPECT_EQ(cli({"--config", temp("missing.ini").string()}).code, 1);
    EXPECT_EQ(cli({"--mode", "generate", "--top-p", "1.5"}).code, 1);
}

TEST(Cli, DisabledPolicyReportsZeroCompression) {
    const auto r = cli({"--mode", "generate", "--steps", "500", "--tau", "-1"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("compression: 0.00%"), std::string::npos) << r.out;
}

TEST(Cli, FlagsOverrideConfig) {
    const fs::path ini = temp("override.ini");
    std::ofstream(ini) << "[run]\nmode = schedule-table\nmax_c = 3\n[policy]\nsoftness = 1\n";
    const auto r = cli({"--config", ini.string(), "--softness", "2"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "c,d\n0,0\n1,0\n2,0\n3,0\n");
    fs::remove(ini);
}

TEST(Cli, ReplayNeedleTraceWritesNoneColumn) {
    SynthOptions o;
    o.kind = TraceKind::Needle;
    o.length = 200;
    const fs::path trace = temp("needle.trace");
    const fs::path out = temp("needle.csv");
    save_trace(trace, synth_trace(o));
    const auto r = cli({"--mode", "replay", "--trace", trace.string(), "--out", out.string(), "--recovery", "off"});
    EXPECT_EQ(r.code, 0) << r.err;
    const MetricsFile m = load_metrics(out);
    EXPECT_EQ(m.rows.size(), 200U);
    for (const auto& row : m.rows) EXPECT_EQ(row.recovery, RecoveryAction::None);
    std::istringstream text(slurp(out));
    std::string header;
    std::getline(text, header);
    EXPECT_EQ(header, kMetricsHeader);
    fs::remove(trace);
    fs::remove(out);
}

TEST(Cli, GenerateWritesChartAndTrace) {
    const fs::path svg = temp("gen.svg");
    const fs::path rec = temp("gen.trace");
    const auto r = cli({"--steps", "50", "--svg", svg.string(), "--record-trace", rec.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(svg).find("<svg"), std::string::npos);
    EXPECT_EQ(load_trace(rec).steps.size(), 50U);
    fs::remove(svg);
    fs::remove(rec);
}

TEST(Cli, PasskeyReport) {
    const auto r = cli({"--mode", "passkey"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("result: PASS"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("synthetic"), std::string::npos);
}

TEST(Cli, PasskeyTriviallyPassesWithWideWindow) {
    const auto r = cli({"--mode", "passkey", "--window", "5000"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("result: PASS"), std::string::npos);
    EXPECT_NE(r.out.find("absence_episodes: 0"), std::string::npos);
}
