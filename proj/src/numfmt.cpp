#include "softfreeze/numfmt.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <string>

#include "softfreeze/errors.hpp"

namespace softfreeze {

std::string format_double(double value) {
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

std::string format_fixed(double value, int precision) {
    std::array<char, 512> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                   std::chars_format::fixed, precision);
    if (ec != std::errc{}) {
        return format_double(value);
    }
    return std::string(buf.data(), end);
}

double parse_double(std::string_view text, std::string_view what) {
    if (text == "inf" || text == "+inf") {
        return INFINITY;
    }
    if (text == "-inf") {
        return -INFINITY;
    }
    // from_chars does not accept a leading '+'.
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() ||
        std::isnan(value)) {
        throw InputError(std::string(what) + ": not a number: '" + std::string(text) + "'");
    }
    return value;
}

long long parse_int(std::string_view text, std::string_view what) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw InputError(std::string(what) + ": not an integer: '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace softfreeze
