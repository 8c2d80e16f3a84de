#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

namespace prnn::csv {

/// Shortest decimal form that round-trips to the same double.
inline std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::string_view> split(std::string_view line, char sep = ',');
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

} // namespace prnn::csv
