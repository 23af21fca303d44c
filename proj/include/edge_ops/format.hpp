#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace edge {

/// Shortest round-trip decimal text, independent of the C locale.
inline std::string fmt_num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

}  // namespace edge
