// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sea::textio {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
// Whole-string parse; throws ParseError with the given line on failure.
double parse_double(std::string_view s, std::size_t line = 0);
long long parse_int(std::string_view s, std::size_t line = 0);

std::vector<std::string_view> split_whitespace(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace sea::textio
