#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace companioncast::text {

/// Number of Unicode code points in a UTF-8 string. Invalid bytes count as one each.
std::size_t char_count(std::string_view s);

/// Longest prefix of at most `max_chars` code points, never splitting a sequence.
std::string_view prefix_chars(std::string_view s, std::size_t max_chars);

std::string_view trim(std::string_view s);

/// Shortens `s` to at most `max_chars` code points, preferring to cut after the
/// last sentence terminator, then the last whitespace, then mid-word.
std::string truncate_at_sentence(std::string_view s, std::size_t max_chars);

/// "mm:ss" for a non-negative video time; minutes are not wrapped at 60.
std::string clock_label(double seconds);

/// Compact decimal rendering: at most two fractional digits, trailing zeros dropped.
std::string format_number(double value);

} // namespace companioncast::text
