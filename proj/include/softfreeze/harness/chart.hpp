#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "softfreeze/harness/metrics_file.hpp"

namespace softfreeze {

// Standalone SVG with two polylines: active cache size and total tokens.
std::string render_chart(const MetricsFile& metrics);
void emit_chart(const MetricsFile& metrics, const std::filesystem::path& path);

struct Extrema {
    int minima = 0;
    int maxima = 0;
};

// Local minima/maxima of `series` at indices >= from. Runs of equal values
// count as one point, so plateaus are neither.
Extrema count_local_extrema(std::span<const std::int64_t> series, std::size_t from = 0);

}  // namespace softfreeze
