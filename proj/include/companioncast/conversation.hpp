#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "companioncast/scheduler.hpp"
#include "companioncast/timeline.hpp"

namespace companioncast {

/// One agent message.
struct Turn {
    std::string agent_id;
    int round_index = 0;
    std::string text;
    /// Trigger time of the conversation this turn belongs to.
    Seconds t_video = 0;
    /// Ordinal within the conversation, starting at 0.
    int seq = 0;

    friend bool operator==(const Turn&, const Turn&) = default;
};

enum class JudgedBy { live, scripted, skipped };
std::string_view to_string(JudgedBy j);

struct DimensionScore {
    std::string key;
    double score = 0;

    friend bool operator==(const DimensionScore&, const DimensionScore&) = default;
};

struct EvaluationReport {
    std::string conv_id;
    int round_index = 0;
    /// In rubric order. Empty when judged_by is skipped.
    std::vector<DimensionScore> scores;
    std::string feedback;
    double overall = 0;
    JudgedBy judged_by = JudgedBy::skipped;

    std::optional<double> score_of(std::string_view key) const;
};

/// Evaluator feedback injected before a round.
struct FeedbackNote {
    int before_round = 0;
    std::string text;
};

struct Conversation {
    std::string conv_id;
    ScenarioContext scenario;
    Seconds trigger_t = 0;
    /// Viewer text that started a user-initiated conversation.
    std::optional<std::string> user_text;
    std::vector<Turn> turns;
    std::vector<EvaluationReport> reports;
    std::vector<FeedbackNote> feedback;
    bool final = false;
    /// Round that stopped early because a backend failed.
    std::optional<int> partial_round;
    std::vector<std::string> errors;
    bool early_accepted = false;

    /// Distinct round indices present in turns.
    int rounds_executed() const;
    /// Highest round index with at least one turn.
    std::optional<int> last_round() const;
    std::vector<Turn> turns_in_round(int round_index) const;
};

} // namespace companioncast
