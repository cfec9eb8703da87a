#include "companioncast/conversation.hpp"

#include <algorithm>
#include <set>

namespace companioncast {

std::string_view to_string(JudgedBy j) {
    switch (j) {
    case JudgedBy::live: return "live";
    case JudgedBy::scripted: return "scripted";
    case JudgedBy::skipped: return "skipped";
    }
    return "skipped";
}

std::optional<double> EvaluationReport::score_of(std::string_view key) const {
    for (const auto& s : scores) {
        if (s.key == key) {
            return s.score;
        }
    }
    return std::nullopt;
}

int Conversation::rounds_executed() const {
    std::set<int> rounds;
    for (const auto& t : turns) {
        rounds.insert(t.round_index);
    }
    return static_cast<int>(rounds.size());
}

std::optional<int> Conversation::last_round() const {
    if (turns.empty()) {
        return std::nullopt;
    }
    return std::max_element(turns.begin(), turns.end(),
                            [](const Turn& a, const Turn& b) { return a.round_index < b.round_index; })
        ->round_index;
}

std::vector<Turn> Conversation::turns_in_round(int round_index) const {
    std::vector<Turn> out;
    std::copy_if(turns.begin(), turns.end(), std::back_inserter(out),
                 [&](const Turn& t) { return t.round_index == round_index; });
    return out;
}

} // namespace companioncast
