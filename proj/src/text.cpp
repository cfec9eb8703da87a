#include "companioncast/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <fmt/format.h>

namespace companioncast::text {

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0U) == 0x80U; }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

} // namespace

std::size_t char_count(std::string_view s) {
    std::size_t n = 0;
    for (char c : s) {
        if (!is_continuation(static_cast<unsigned char>(c))) {
            ++n;
        }
    }
    return n;
}

std::string_view prefix_chars(std::string_view s, std::size_t max_chars) {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!is_continuation(static_cast<unsigned char>(s[i]))) {
            if (seen == max_chars) {
                return s.substr(0, i);
            }
            ++seen;
        }
    }
    return s;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

std::string truncate_at_sentence(std::string_view s, std::size_t max_chars) {
    s = trim(s);
    if (char_count(s) <= max_chars) {
        return std::string(s);
    }
    const auto head = prefix_chars(s, max_chars);
    const auto sentence_end = head.find_last_of(".!?");
    if (sentence_end != std::string_view::npos && sentence_end > 0) {
        return std::string(trim(head.substr(0, sentence_end + 1)));
    }
    std::size_t space = std::string_view::npos;
    for (std::size_t i = head.size(); i-- > 0;) {
        if (is_space(head[i])) {
            space = i;
            break;
        }
    }
    if (space != std::string_view::npos && space > 0) {
        return std::string(trim(head.substr(0, space)));
    }
    return std::string(head);
}

std::string clock_label(double seconds) {
    const auto total = static_cast<std::int64_t>(std::floor(std::max(0.0, seconds)));
    return fmt::format("{:02d}:{:02d}", total / 60, total % 60);
}

std::string format_number(double value) {
    auto s = fmt::format("{:.2f}", value);
    while (!s.empty() && s.back() == '0') {
        s.pop_back();
    }
    if (!s.empty() && s.back() == '.') {
        s.pop_back();
    }
    if (s == "-0") {
        s = "0";
    }
    return s;
}

} // namespace companioncast::text
