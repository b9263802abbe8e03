#include "softfreeze/harness/metrics_file.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "softfreeze/errors.hpp"
#include "softfreeze/numfmt.hpp"

namespace softfreeze {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

MetricsFile make_metrics_file(std::vector<StepMetrics> rows, std::optional<double> wall_clock_seconds) {
    MetricsFile file;
    file.rows = std::move(rows);
    MetricsSummary& s = file.summary;
    s.wall_clock_seconds = wall_clock_seconds;
    if (file.rows.empty()) return file;
    double sum = 0.0;
    for (const auto& r : file.rows) {
        sum += r.compression;
        s.max_compression = std::max(s.max_compression, r.compression);
        s.total_freezes += r.frozen_this_step;
        s.total_restores += r.restored_this_step;
        if (r.recovery != RecoveryAction::None) ++s.recovery_actions;
    }
    s.mean_compression = sum / static_cast<double>(file.rows.size());
    const auto& last = file.rows.back();
    s.final_compression = compression_ratio(last.total, last.active);
    return file;
}

void write_metrics(std::ostream& out, const MetricsFile& file) {
    std::string text = kMetricsHeader;
    text += '\n';
    for (const auto& r : file.rows) {
        text += std::to_string(r.step) + ',' + std::to_string(r.total) + ',' + std::to_string(r.active) +
                ',' + std::to_string(r.frozen) + ',' + std::to_string(r.frozen_this_step) + ',' +
                std::to_string(r.restored_this_step) + ',' + format_double(r.compression) + ',' +
                (std::isnan(r.entropy) ? std::string() : format_double(r.entropy)) + ',' +
                std::string(to_string(r.recovery)) + '\n';
    }
    const MetricsSummary& s = file.summary;
    text += "# summary\n";
    text += "# mean_compression," + format_double(s.mean_compression) + '\n';
    text += "# max_compression," + format_double(s.max_compression) + '\n';
    text += "# final_compression," + format_double(s.final_compression) + '\n';
    text += "# total_freezes," + std::to_string(s.total_freezes) + '\n';
    text += "# total_restores," + std::to_string(s.total_restores) + '\n';
    text += "# recovery_actions," + std::to_string(s.recovery_actions) + '\n';
    if (s.wall_clock_seconds) {
        text += "# wall_clock_s," + format_fixed(*s.wall_clock_seconds, 3) + '\n';
    }
    out << text;
}

void save_metrics(const std::filesystem::path& path, const MetricsFile& file) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("metrics: cannot write '" + path.string() + "'");
    }
    write_metrics(out, file);
}

MetricsFile read_metrics(std::istream& in) {
    MetricsFile file;
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw InputError("metrics: missing or unexpected header row");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = "metrics line " + std::to_string(line_no);
        if (line.front() == '#') {
            const auto fields = split_csv(line.substr(2));
            if (fields.size() != 2) continue;
            const std::string& key = fields[0];
            const std::string& value = fields[1];
            MetricsSummary& s = file.summary;
            if (key == "mean_compression") s.mean_compression = parse_double(value, where);
            else if (key == "max_compression") s.max_compression = parse_double(value, where);
            else if (key == "final_compression") s.final_compression = parse_double(value, where);
            else if (key == "total_freezes") s.total_freezes = parse_int(value, where);
            else if (key == "total_restores") s.total_restores = parse_int(value, where);
            else if (key == "recovery_actions") s.recovery_actions = parse_int(value, where);
            else if (key == "wall_clock_s") s.wall_clock_seconds = parse_double(value, where);
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 9) {
            throw InputError(where + ": expected 9 columns, got " + std::to_string(f.size()));
        }
        StepMetrics r;
        r.step = parse_int(f[0], where + " step");
        r.total = parse_int(f[1], where + " total");
        r.active = parse_int(f[2], where + " active");
        r.frozen = parse_int(f[3], where + " frozen");
        r.frozen_this_step = parse_int(f[4], where + " frozen_this_step");
        r.restored_this_step = parse_int(f[5], where + " restored_this_step");
        r.compression = parse_double(f[6], where + " compression");
        r.entropy = f[7].empty() ? std::nan("") : parse_double(f[7], where + " entropy");
        r.recovery = parse_recovery_action(f[8]);
        file.rows.push_back(r);
    }
    return file;
}

MetricsFile load_metrics(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("metrics: cannot read '" + path.string() + "'");
    }
    return read_metrics(in);
}

}  // namespace softfreeze
