#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace anchorpose {

/// Shortest decimal form that reads back to the same double; locale-free.
std::string format_number(double value);

/// Fixed-point form with `digits` decimals; locale-free.
std::string format_fixed(double value, int digits);

/// Parses a full string as a double (no locale, no trailing garbage).
/// Throws ParseError mentioning `context`.
double parse_number(std::string_view text, const std::string& context);

long long parse_integer(std::string_view text, const std::string& context);

std::vector<std::string> split(std::string_view line, char sep);

std::string_view trim(std::string_view s);

}  // namespace anchorpose
