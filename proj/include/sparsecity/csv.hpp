#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sparsecity::csv {

// Locale-independent shortest round-trip formatting; '.' decimal point.
inline std::string format(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

template <typename Int>
    requires std::is_integral_v<Int>
std::string format(Int v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline std::string format(bool v) { return v ? "1" : "0"; }
inline std::string format(std::string_view v) { return std::string(v); }
inline std::string format(const char* v) { return std::string(v); }
inline std::string format(const std::string& v) { return v; }

/// Appends one LF-terminated row.
template <typename... Fields>
void row(std::string& out, const Fields&... fields) {
    bool first = true;
    ((out += (first ? "" : ","), out += format(fields), first = false), ...);
    out += '\n';
}

}  // namespace sparsecity::csv
