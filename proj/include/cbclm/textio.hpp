// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "cbclm/errors.hpp"

namespace cbclm {

// Shortest-of-17-significant-digits rendering; strtod recovers the exact
// double, which the schedule-exactness and determinism checks rely on.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view text, const std::string& context) {
    std::string tmp(text);
    char* end = nullptr;
    double v = std::strtod(tmp.c_str(), &end);
    if (end == tmp.c_str() || *end != '\0')
        throw data_error(context + ": not a number: '" + tmp + "'");
    return v;
}

inline long long parse_int(std::string_view text, const std::string& context) {
    std::string tmp(text);
    char* end = nullptr;
    long long v = std::strtoll(tmp.c_str(), &end, 10);
    if (end == tmp.c_str() || *end != '\0')
        throw data_error(context + ": not an integer: '" + tmp + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t at = line.find(sep, start);
        if (at == std::string_view::npos) {
            parts.push_back(line.substr(start));
            return parts;
        }
        parts.push_back(line.substr(start, at - start));
        start = at + 1;
    }
}

} // namespace cbclm
