#pragma once

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace recsys::detail {

// Shortest-exact decimal form of a double; round-trips bit-exactly.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("fmt_double: to_chars failed");
    return std::string(buf, p);
}

// 17 significant digits; also round-trips bit-exactly.
inline std::string fmt_g17(double v) {
    char buf[64];
    int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
    if (n < 0 || n >= static_cast<int>(sizeof(buf)))
        throw std::runtime_error("fmt_g17: snprintf failed");
    return std::string(buf, static_cast<std::size_t>(n));
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::runtime_error("bad numeric field: '" + std::string(s) + "'");
    return v;
}

inline std::size_t parse_size(std::string_view s) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::runtime_error("bad integer field: '" + std::string(s) + "'");
    return v;
}

}  // namespace recsys::detail
