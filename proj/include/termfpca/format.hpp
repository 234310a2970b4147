#pragma once

#include <charconv>
#include <string>

namespace termfpca {

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace termfpca
