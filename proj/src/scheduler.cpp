#include "softfreeze/scheduler.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <string>

#include "softfreeze/errors.hpp"

namespace softfreeze {

void PolicyParams::validate() const {
    if (window_size < 1) {
        throw InputError("policy.window_size must be >= 1, got " + std::to_string(window_size));
    }
    if (std::isnan(tau)) {
        throw InputError("policy.tau must be a number");
    }
    if (!(softness > 0.0) || !std::isfinite(softness)) {
        throw InputError("policy.softness must be finite and > 0");
    }
    if (history_window < 1) {
        throw InputError("policy.history_window must be >= 1, got " + std::to_string(history_window));
    }
    if (pinned_prefix < 0) {
        throw InputError("policy.pinned_prefix must be >= 0, got " + std::to_string(pinned_prefix));
    }
}

std::uint64_t integer_sqrt(std::uint64_t n) {
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    // r*r > n  <=>  r > n/r for integer division, which avoids overflow.
    while (r > 0 && r > n / r) --r;
    while (r + 1 <= n / (r + 1)) ++r;
    return r;
}

int freeze_duration(std::uint64_t count, double softness) {
    if (!(softness > 0.0) || !std::isfinite(softness)) {
        throw InputError("softness must be finite and > 0");
    }
    if (count == 0 || softness > 0x1.0p32) {
        return 0;
    }
    // floor(floor(x) / n) == floor(x / n) for integer n, so an integer
    // softness needs only the integer square root.
    if (softness == std::floor(softness)) {
        return static_cast<int>(integer_sqrt(count) / static_cast<std::uint64_t>(softness));
    }
    // softness = mantissa / 2^shift exactly, hence
    // floor(sqrt(c) / softness) = floor(isqrt(c * 4^shift) / mantissa).
    int exponent = 0;
    const double fraction = std::frexp(softness, &exponent);
    auto mantissa = static_cast<std::uint64_t>(std::ldexp(fraction, 53));
    int shift = 53 - exponent;
    while ((mantissa & 1U) == 0 && shift > 0) {
        mantissa >>= 1;
        --shift;
    }
    using boost::multiprecision::cpp_int;
    const cpp_int scaled = cpp_int(count) << (2 * shift);
    const cpp_int quotient = boost::multiprecision::sqrt(scaled) / mantissa;
    if (quotient > std::numeric_limits<int>::max()) {
        return std::numeric_limits<int>::max();
    }
    return quotient.convert_to<int>();
}

int max_freeze_duration(const PolicyParams& params) {
    return freeze_duration(static_cast<std::uint64_t>(params.history_window), params.softness);
}

std::int64_t detection_count(const TokenRecord& record, Step step, std::int64_t history_window) {
    const auto& log = record.detection_log;
    if (history_window == kUnboundedHistory || step - history_window < 0) {
        return std::upper_bound(log.begin(), log.end(), step) - log.begin();
    }
    const Step oldest = step - history_window + 1;
    return std::upper_bound(log.begin(), log.end(), step) -
           std::lower_bound(log.begin(), log.end(), oldest);
}

std::int64_t record_detection(CacheLedger& ledger, Position position, Step step,
                              std::int64_t history_window) {
    ledger.append_detection(position, step);
    if (history_window != kUnboundedHistory && step - history_window + 1 > 0) {
        ledger.prune_detections(position, step - history_window + 1);
    }
    return detection_count(ledger.token(position), step, history_window);
}

ProtectedSet protected_set(std::int64_t total_tokens, const PolicyParams& params) {
    return ProtectedSet(total_tokens, params.window_size, params.pinned_prefix);
}

}  // namespace softfreeze
