#pragma once

#include <string>
#include <string_view>

namespace softfreeze {

// Locale-independent number formatting. format_double emits the shortest
// representation that parses back to the same value.
std::string format_double(double value);
std::string format_fixed(double value, int precision);

// Strict parsers: the whole string must be consumed. Accept "inf"/"-inf".
// Throw InputError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace softfreeze
