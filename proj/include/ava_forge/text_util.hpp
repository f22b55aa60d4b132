// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ava::text {

/// Shortest decimal that parses back to exactly `v`.
std::string format_shortest(double v);

/// Decimal rendering with `decimals` fractional digits, rounded half away
/// from zero on the shortest decimal form of `v` (so 0.8485 -> "0.849").
std::string format_fixed(double v, int decimals);

std::vector<std::string_view> split_whitespace(std::string_view line);
std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Strict full-token parsers; return false on any leftover characters.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, int& out);

bool is_valid_utf8(std::string_view s);

std::vector<std::string> split_lines(std::string_view text);

}  // namespace ava::text
