#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "softfreeze/controller.hpp"

namespace softfreeze {

struct MetricsSummary {
    double mean_compression = 0.0;
    double max_compression = 0.0;
    double final_compression = 0.0;
    std::int64_t total_freezes = 0;
    std::int64_t total_restores = 0;
    std::int64_t recovery_actions = 0;
    std::optional<double> wall_clock_seconds;
};

// Comma-separated, LF line endings, header row, one row per step, then a
// '#'-prefixed summary block of "key,value" lines.
struct MetricsFile {
    std::vector<StepMetrics> rows;
    MetricsSummary summary;
};

inline constexpr const char* kMetricsHeader =
    "step,total,active,frozen,frozen_this_step,restored_this_step,compression,entropy,recovery";

MetricsFile make_metrics_file(std::vector<StepMetrics> rows,
                              std::optional<double> wall_clock_seconds = std::nullopt);

void write_metrics(std::ostream& out, const MetricsFile& file);
void save_metrics(const std::filesystem::path& path, const MetricsFile& file);
MetricsFile read_metrics(std::istream& in);
MetricsFile load_metrics(const std::filesystem::path& path);

}  // namespace softfreeze
