#include "softfreeze/harness/chart.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "softfreeze/errors.hpp"
#include "softfreeze/numfmt.hpp"

namespace softfreeze {
namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

}  // namespace

std::string render_chart(const MetricsFile& metrics) {
    const auto& rows = metrics.rows;
    if (rows.size() < 2) {
        throw InputError("chart: need at least 2 metrics rows, got " + std::to_string(rows.size()));
    }
    const double x0 = static_cast<double>(rows.front().step);
    const double x1 = std::max(static_cast<double>(rows.back().step), x0 + 1.0);
    std::int64_t y_max = 1;
    for (const auto& r : rows) y_max = std::max(y_max, r.total);

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double step) { return kLeft + (step - x0) / (x1 - x0) * plot_w; };
    auto py = [&](double value) { return kTop + plot_h - value / static_cast<double>(y_max) * plot_h; };

    auto polyline = [&](const char* cls, const char* color, const char* dash, auto value_of) {
        std::string s = std::string("  <polyline class=\"") + cls + "\" fill=\"none\" stroke=\"" + color +
                        "\" stroke-width=\"1.5\"" + dash + " points=\"";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i > 0) s += ' ';
            s += format_fixed(px(static_cast<double>(rows[i].step)), 2) + ',' +
                 format_fixed(py(static_cast<double>(value_of(rows[i]))), 2);
        }
        return s + "\"/>\n";
    };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_fixed(kWidth, 0) + "\" height=\"" +
           format_fixed(kHeight, 0) + "\" viewBox=\"0 0 " + format_fixed(kWidth, 0) + ' ' +
           format_fixed(kHeight, 0) + "\">\n";
    svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "  <text x=\"" + format_fixed(kWidth / 2, 0) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
           "Active KV cache size per generation step</text>\n";

    // Axes and ticks.
    const std::string left = format_fixed(kLeft, 2);
    const std::string right = format_fixed(kWidth - kRight, 2);
    const std::string top = format_fixed(kTop, 2);
    const std::string bottom = format_fixed(kTop + plot_h, 2);
    svg += "  <line x1=\"" + left + "\" y1=\"" + bottom + "\" x2=\"" + right + "\" y2=\"" + bottom +
           "\" stroke=\"black\"/>\n";
    svg += "  <line x1=\"" + left + "\" y1=\"" + top + "\" x2=\"" + left + "\" y2=\"" + bottom +
           "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double step = x0 + (x1 - x0) * i / 5.0;
        const double value = static_cast<double>(y_max) * i / 5.0;
        svg += "  <text x=\"" + format_fixed(px(step), 2) + "\" y=\"" + format_fixed(kTop + plot_h + 18, 2) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + format_fixed(step, 0) +
               "</text>\n";
        svg += "  <text x=\"" + format_fixed(kLeft - 8, 2) + "\" y=\"" + format_fixed(py(value) + 4, 2) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + format_fixed(value, 0) +
               "</text>\n";
    }
    svg += "  <text x=\"" + format_fixed(kLeft + plot_w / 2, 2) + "\" y=\"" + format_fixed(kHeight - 18, 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">generation step</text>\n";
    svg += "  <text x=\"18\" y=\"" + format_fixed(kTop + plot_h / 2, 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " +
           format_fixed(kTop + plot_h / 2, 2) + ")\">tokens</text>\n";

    svg += polyline("series-total", "#ff7f0e", " stroke-dasharray=\"6 4\"",
                    [](const StepMetrics& r) { return r.total; });
    svg += polyline("series-active", "#1f77b4", "", [](const StepMetrics& r) { return r.active; });

    // Legend.
    svg += "  <line x1=\"" + format_fixed(kLeft + 12, 2) + "\" y1=\"" + format_fixed(kTop + 12, 2) + "\" x2=\"" +
           format_fixed(kLeft + 40, 2) + "\" y2=\"" + format_fixed(kTop + 12, 2) +
           "\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
    svg += "  <text x=\"" + format_fixed(kLeft + 46, 2) + "\" y=\"" + format_fixed(kTop + 16, 2) +
           "\" font-family=\"sans-serif\" font-size=\"12\">active (policy)</text>\n";
    svg += "  <line x1=\"" + format_fixed(kLeft + 12, 2) + "\" y1=\"" + format_fixed(kTop + 30, 2) + "\" x2=\"" +
           format_fixed(kLeft + 40, 2) + "\" y2=\"" + format_fixed(kTop + 30, 2) +
           "\" stroke=\"#ff7f0e\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
    svg += "  <text x=\"" + format_fixed(kLeft + 46, 2) + "\" y=\"" + format_fixed(kTop + 34, 2) +
           "\" font-family=\"sans-serif\" font-size=\"12\">total (full cache)</text>\n";
    svg += "</svg>\n";
    return svg;
}

void emit_chart(const MetricsFile& metrics, const std::filesystem::path& path) {
    const std::string svg = render_chart(metrics);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("chart: cannot write '" + path.string() + "'");
    }
    out << svg;
    if (!out) {
        throw InputError("chart: write failed on '" + path.string() + "'");
    }
}

Extrema count_local_extrema(std::span<const std::int64_t> series, std::size_t from) {
    std::vector<std::int64_t> runs;
    for (std::size_t i = from; i < series.size(); ++i) {
        if (runs.empty() || runs.back() != series[i]) runs.push_back(series[i]);
    }
    Extrema e;
    for (std::size_t i = 1; i + 1 < runs.size(); ++i) {
        if (runs[i] < runs[i - 1] && runs[i] < runs[i + 1]) ++e.minima;
        if (runs[i] > runs[i - 1] && runs[i] > runs[i + 1]) ++e.maxima;
    }
    return e;
}

}  // namespace softfreeze
